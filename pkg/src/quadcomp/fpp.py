"""First-passage representation of the pure-growth model.

Independent mean-1 exponential weights on the oriented lattice edges,
exact dynamic-programming passage times in anti-diagonal order, Monte
Carlo estimation of the linear growth rate, and the embedded diagonal
walk built from two-step blocks (the renewal argument that puts (1,1)
strictly inside the limit shape).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
from scipy import stats

from quadcomp import rng
from quadcomp.models import richardson_occupation
from quadcomp.percolation import DirectedEdge, Direction, Site

_REP_SALT = 0x52


@dataclass(frozen=True)
class EdgeWeights:
    """Exponential passage times per oriented edge on a rectangular box.

    `east[x, y]` weights the edge (x,y)->(x+1,y) and `north[x, y]` the
    edge (x,y)->(x,y+1); the origin's outgoing edges carry infinite
    weight (the construction excludes them), and oriented paths from the
    standard sources never reach the origin anyway.
    """

    seed: int
    nx: int
    ny: int
    east: np.ndarray
    north: np.ndarray

    def weight(self, edge: DirectedEdge) -> float:
        (x, y), d = edge
        if (x, y) == (0, 0):
            raise ValueError("the origin has no outgoing edges")
        w = self.east[x, y] if d == Direction.EAST else self.north[x, y]
        return float(w)


def sample_weights(seed: int, box: int | tuple[int, int]) -> EdgeWeights:
    """Deterministic i.i.d. mean-1 exponential weights on a box.

    `box` is a side length L for [0,L]^2 or a pair (Lx, Ly).
    """
    lx, ly = (box, box) if isinstance(box, int) else box
    if lx < 1 or ly < 1:
        raise ValueError("box sides must be >= 1")
    nx, ny = lx + 1, ly + 1
    east = rng.exponential_field(
        rng.key_grid(seed, rng.DOMAIN_FPP, nx, ny, int(Direction.EAST)))
    north = rng.exponential_field(
        rng.key_grid(seed, rng.DOMAIN_FPP, nx, ny, int(Direction.NORTH)))
    east[0, 0] = np.inf
    north[0, 0] = np.inf
    return EdgeWeights(seed=seed, nx=nx, ny=ny, east=east, north=north)


@dataclass(frozen=True)
class PassageField:
    """Minimal oriented traversal times from a source set.

    T is 0 exactly on the sources and +inf off the north-east cone of
    the source set (infimum over an empty path set).
    """

    sources: tuple[Site, ...]
    T: np.ndarray

    def time(self, site: tuple[int, int]) -> float:
        return float(self.T[site[0], site[1]])

    def reached(self, site: tuple[int, int]) -> bool:
        return bool(np.isfinite(self.T[site[0], site[1]]))

    def to_csv(self, fp: TextIO) -> int:
        fp.write("x,y,T\n")
        nx, ny = self.T.shape
        n = 0
        for x in range(nx):
            for y in range(ny):
                fp.write(f"{x},{y},{self.T[x, y]:.17g}\n")
                n += 1
        return n


def passage_times(weights: EdgeWeights,
                  sources: Sequence[tuple[int, int]]) -> PassageField:
    """Exact DP over the acyclic oriented edge set, anti-diagonal order."""
    if not sources:
        raise ValueError("sources must be non-empty")
    nx, ny = weights.nx, weights.ny
    T = np.full((nx, ny), np.inf)
    for (x, y) in sources:
        if not (0 <= x < nx and 0 <= y < ny):
            raise ValueError(f"source {(x, y)} outside box")
        T[x, y] = 0.0
    for s in range(1, nx + ny - 1):
        x_lo = max(0, s - (ny - 1))
        x_hi = min(nx - 1, s)
        xs = np.arange(x_lo, x_hi + 1)
        ys = s - xs
        best = T[xs, ys]
        west = xs >= 1
        if west.any():
            xw = xs[west]
            cand = T[xw - 1, ys[west]] + weights.east[xw - 1, ys[west]]
            best[west] = np.minimum(best[west], cand)
        south = ys >= 1
        if south.any():
            ysr = ys[south]
            cand = T[xs[south], ysr - 1] + weights.north[xs[south], ysr - 1]
            best[south] = np.minimum(best[south], cand)
        T[xs, ys] = best
    return PassageField(sources=tuple(Site(*s) for s in sources), T=T)


DEFAULT_SOURCES = (Site(1, 0), Site(0, 1))


# --------------------------------------------------------------------------
# growth-rate estimation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MuEstimate:
    direction: tuple[float, float]
    n: int
    target: Site
    replicates: int
    samples: np.ndarray
    mean: float
    ci_low: float
    ci_high: float
    confidence: float

    def as_dict(self) -> dict:
        return {
            "direction": list(self.direction),
            "n": self.n,
            "target": [self.target.x, self.target.y],
            "replicates": self.replicates,
            "mean": self.mean,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "confidence": self.confidence,
        }


def mu_estimate(direction: tuple[float, float], n: int, replicates: int,
                seed: int = 0, confidence: float = 0.99) -> MuEstimate:
    """Monte Carlo mean and CI of T(n*direction)/n over fresh weight fields."""
    dx, dy = direction
    if dx < 0 or dy < 0 or (dx == 0 and dy == 0):
        raise ValueError("direction must lie in the closed first quadrant")
    if n < 1 or replicates < 1:
        raise ValueError("n and replicates must be >= 1")
    target = Site(int(round(n * dx)), int(round(n * dy)))
    if target == (0, 0):
        raise ValueError("target rounds to the origin")
    box = (max(target.x, 1), max(target.y, 1))
    samples = np.empty(replicates)
    for rep in range(replicates):
        sub = rng.derive_key(seed, _REP_SALT, rep)
        w = sample_weights(sub, box)
        field = passage_times(w, DEFAULT_SOURCES)
        samples[rep] = field.time(target) / n
    mean = float(samples.mean())
    if replicates > 1:
        half = float(stats.t.ppf(0.5 + confidence / 2, replicates - 1)
                     * samples.std(ddof=1) / math.sqrt(replicates))
    else:
        half = math.inf
    return MuEstimate(direction=(float(dx), float(dy)), n=n, target=target,
                      replicates=replicates, samples=samples, mean=mean,
                      ci_low=mean - half, ci_high=mean + half,
                      confidence=confidence)


# --------------------------------------------------------------------------
# two-step blocks: the embedded diagonal walk and the greedy path
# --------------------------------------------------------------------------

# Weight slots of one block: [E, EE, EN, N, NE, NN] i.e. the first-step
# edges east/north and the two outgoing edges at each intermediate site.
_DISPLACEMENTS = np.array([[2, 0], [1, 1], [1, 1], [0, 2]], dtype=np.int64)


def block_weights(seed: int, domain: int, k0: int, count: int) -> np.ndarray:
    """(count, 6) fresh exponential block weights for steps k0..k0+count-1."""
    keys = rng.key_blocks(seed, domain, k0 + count, 6)[k0:]
    return rng.exponential_field(keys)


def block_path_totals(w: np.ndarray) -> np.ndarray:
    """Traversal times of the four oriented two-step paths (EE, EN, NE, NN)."""
    w = np.atleast_2d(w)
    return np.column_stack([
        w[:, 0] + w[:, 1],
        w[:, 0] + w[:, 2],
        w[:, 3] + w[:, 4],
        w[:, 3] + w[:, 5],
    ])


def block_greedy_totals(w: np.ndarray) -> np.ndarray:
    """Two steps, each along the cheaper outgoing edge (the greedy path)."""
    w = np.atleast_2d(w)
    east_first = w[:, 0] <= w[:, 3]
    first = np.where(east_first, w[:, 0], w[:, 3])
    second = np.where(east_first,
                      np.minimum(w[:, 1], w[:, 2]),
                      np.minimum(w[:, 4], w[:, 5]))
    return first + second


@dataclass(frozen=True)
class DiagonalWalkStats:
    """The renewal walk of cheapest two-step blocks.

    Each step evaluates the four oriented two-step paths from the
    current position on fresh independent weights and moves along the
    cheapest one, so the step times are i.i.d. and their mean is
    strictly below 1 (the greedy two-step path has mean exactly 1 and
    is never cheaper).
    """

    seed: int
    displacements: np.ndarray  # (k, 2)
    step_times: np.ndarray     # (k,)
    partial_sums: np.ndarray   # (k,)
    positions: np.ndarray      # (k, 2)

    @property
    def k_max(self) -> int:
        return len(self.step_times)

    def displacement_frequencies(self) -> dict[tuple[int, int], float]:
        out = {}
        for d in ((2, 0), (1, 1), (0, 2)):
            out[d] = float(np.mean((self.displacements[:, 0] == d[0])
                                   & (self.displacements[:, 1] == d[1])))
        return out

    def diagonal_visits(self) -> int:
        """How often the walk sits exactly on the main diagonal."""
        return int(np.sum(self.positions[:, 0] == self.positions[:, 1]))

    def to_csv(self, fp: TextIO) -> int:
        fp.write("k,Xx,Xy,Tk,Sk\n")
        for k in range(self.k_max):
            fp.write(f"{k + 1},{self.displacements[k, 0]},"
                     f"{self.displacements[k, 1]},"
                     f"{self.step_times[k]:.17g},{self.partial_sums[k]:.17g}\n")
        return self.k_max


def diagonal_walk(seed: int, k_max: int) -> DiagonalWalkStats:
    """Run the embedded walk for k_max steps on fresh per-step blocks."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    w = block_weights(seed, rng.DOMAIN_WALK, 0, k_max)
    totals = block_path_totals(w)
    choice = np.argmin(totals, axis=1)
    step_times = totals[np.arange(k_max), choice]
    displacements = _DISPLACEMENTS[choice]
    return DiagonalWalkStats(
        seed=seed,
        displacements=displacements,
        step_times=step_times,
        partial_sums=np.cumsum(step_times),
        positions=np.cumsum(displacements, axis=0),
    )


@dataclass(frozen=True)
class GreedyStats:
    seed: int
    samples: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def stderr(self) -> float:
        return float(self.samples.std(ddof=1) / math.sqrt(len(self.samples)))


def greedy_two_step(seed: int, trials: int) -> GreedyStats:
    """Sample the greedy two-step traversal time (mean exactly 1)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    w = block_weights(seed, rng.DOMAIN_GREEDY, 0, trials)
    return GreedyStats(seed=seed, samples=block_greedy_totals(w))


# --------------------------------------------------------------------------
# distributional equivalence with the forward growth engine
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProbeComparison:
    probe: Site
    n_forward: int
    n_fpp: int
    ks_statistic: float
    pvalue: float
    forward_unoccupied: int
    fpp_unreached: int

    def as_dict(self) -> dict:
        return {
            "probe": [self.probe.x, self.probe.y],
            "n_forward": self.n_forward,
            "n_fpp": self.n_fpp,
            "ks_statistic": self.ks_statistic,
            "pvalue": self.pvalue,
            "forward_unoccupied": self.forward_unoccupied,
            "fpp_unreached": self.fpp_unreached,
        }


def richardson_equivalence(seed_pairs: Sequence[tuple[int, int]], t: float,
                           probe_sites: Sequence[tuple[int, int]]
                           ) -> list[ProbeComparison]:
    """Compare forward occupation times against first-passage times.

    For each probe, the forward engine's occupation time (one per first
    seed) is compared with min(T((1,0), probe), T((0,1), probe)) on an
    independent weight field (one per second seed) by a two-sample KS
    test.  Occupation beyond the horizon t is excluded and counted.
    """
    probes = [Site(*p) for p in probe_sites]
    if not probes:
        raise ValueError("probe_sites must be non-empty")
    box = max(max(p.x for p in probes), max(p.y for p in probes), 1)
    forward: dict[Site, list[float]] = {p: [] for p in probes}
    fpp_vals: dict[Site, list[float]] = {p: [] for p in probes}
    for fwd_seed, fpp_seed in seed_pairs:
        occ = richardson_occupation(fwd_seed, t_max=t, box_side=box)
        w = sample_weights(fpp_seed, box)
        field = passage_times(w, DEFAULT_SOURCES)
        for p in probes:
            forward[p].append(float(occ[p.x, p.y]))
            fpp_vals[p].append(field.time(p))
    out = []
    for p in probes:
        f = np.asarray(forward[p])
        g = np.asarray(fpp_vals[p])
        f_ok = f[np.isfinite(f)]
        g_ok = g[np.isfinite(g)]
        if len(f_ok) and len(g_ok):
            ks = stats.ks_2samp(f_ok, g_ok)
            stat, pval = float(ks.statistic), float(ks.pvalue)
        else:
            stat, pval = math.nan, math.nan
        out.append(ProbeComparison(
            probe=p, n_forward=len(f_ok), n_fpp=len(g_ok),
            ks_statistic=stat, pvalue=pval,
            forward_unoccupied=int(len(f) - len(f_ok)),
            fpp_unreached=int(len(g) - len(g_ok))))
    return out
