"""Event-driven simulator and verification harness for oriented growth
and competition models on the first quadrant of the integer lattice."""

from quadcomp.percolation import (
    ArrowEvent,
    DirectedEdge,
    Direction,
    EventWindow,
    Site,
    edge_events,
    inbound_events,
    window_events,
)
from quadcomp.models import (
    CellState,
    LatticeState,
    ModelKind,
    SnapshotSeries,
    apply_event,
    coupled_run,
    default_box_side,
    fattened_contains,
    init_default,
    richardson_occupation,
    run,
)

__version__ = "0.1.0"
