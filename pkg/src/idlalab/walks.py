"""Monte Carlo engine for blind and simple walks on a cluster graph.

All randomness flows through keyed SplitMix64 streams (streams.py), so any
estimate is reproducible from (master_seed, purpose, replica) alone.  The
compiled loops live in _kernels; this module shapes their inputs, turns
tallies into estimates with standard errors, and exposes exact single-step
distributions as rationals for unit tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import InputError, RangeError
from .lattice import ClusterGraph, distances_from
from .solver import GreenTable
from .streams import stream_key, walk_keys

STOP_REASONS = {
    _kernels.EXITED: "exited_region",
    _kernels.HIT: "hit_target",
    _kernels.CAPPED: "time_cap",
}


def default_cap(graph: ClusterGraph) -> int:
    """Step budget scaling with the squared box diameter."""
    return 64 * (2 * graph.half_width) ** 2


def region_mask(graph: ClusterGraph, region) -> np.ndarray:
    """uint8 membership mask over vertex rows from rows or a bool mask."""
    arr = np.asarray(region)
    if arr.dtype == bool:
        if arr.shape != (graph.n_vertices,):
            raise InputError("region mask has wrong length")
        return arr.astype(np.uint8)
    rows = np.unique(arr.astype(np.int64))
    if rows.size and (rows[0] < 0 or rows[-1] >= graph.n_vertices):
        raise InputError("region contains out-of-range vertex rows")
    mask = np.zeros(graph.n_vertices, dtype=np.uint8)
    mask[rows] = 1
    return mask


def _arrays(graph: ClusterGraph):
    return graph.nbr_by_dir, graph.nbr_compact, graph.degree


def _resolve_cap(graph: ClusterGraph, cap) -> int:
    c = default_cap(graph) if cap is None else int(cap)
    if c < 0:
        raise InputError("cap must be >= 0")
    return c


@dataclass
class Estimate:
    mean: float
    stderr: float
    n: int

    def within(self, value: float, sigmas: float) -> bool:
        return abs(self.mean - value) <= sigmas * self.stderr

    def interval(self, sigmas: float) -> tuple[float, float]:
        return self.mean - sigmas * self.stderr, self.mean + sigmas * self.stderr


def _mean_estimate(samples: np.ndarray) -> Estimate:
    n = samples.shape[0]
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return Estimate(mean, stderr, n)


def _bernoulli_estimate(successes: int, n: int) -> Estimate:
    phat = successes / n
    return Estimate(phat, math.sqrt(phat * (1.0 - phat) / n), n)


@dataclass
class WalkResult:
    stop_reason: str    # "exited_region" | "hit_target" | "time_cap"
    steps: int
    final: int
    previous: int


def run_walk(
    graph: ClusterGraph,
    start,
    key: int,
    *,
    kind: str = "blind",
    region=None,
    target=None,
    cap=None,
) -> WalkResult:
    """One walk from `start`, stopped by leaving `region` or hitting `target`.

    Exactly one stopping rule must be given.  The stopping rule is checked
    before the cap at each time, and a start already in `target` stops at
    t = 0.  `target` may be a vertex or a collection of vertices.
    """
    if (region is None) == (target is None):
        raise InputError("give exactly one of region= or target=")
    if kind not in ("blind", "simple"):
        raise InputError(f"unknown walk kind {kind!r}")
    v0 = graph.resolve(start)
    c = _resolve_cap(graph, cap)
    simple = kind == "simple"
    if simple and graph.degree[v0] == 0:
        raise InputError("simple walk undefined at an isolated vertex")
    if region is not None:
        mask = region_mask(graph, region)
        if not mask[v0]:
            raise InputError("start lies outside the region")
        reason, steps, final, prev = _kernels.walk_until_exit(
            *_arrays(graph), simple, mask, v0, np.uint64(key), c
        )
    else:
        try:
            rows = [graph.resolve(target)]
        except (InputError, TypeError, ValueError):
            rows = [graph.resolve(t) for t in target]
        tmask = np.zeros(graph.n_vertices, dtype=np.uint8)
        tmask[rows] = 1
        reason, steps, final, prev = _kernels.walk_until_hit(
            *_arrays(graph), simple, tmask, v0, np.uint64(key), c
        )
    return WalkResult(STOP_REASONS[int(reason)], int(steps), int(final), int(prev))


def exit_times(
    graph: ClusterGraph,
    region,
    start,
    n_walks: int,
    master_seed: int,
    purpose: str = "exit-time",
    replica: int = 0,
    cap=None,
) -> tuple[np.ndarray, int]:
    """Blind-walk exit times of `region`; capped walks report cap itself."""
    if n_walks < 1:
        raise InputError("n_walks must be >= 1")
    mask = region_mask(graph, region)
    v0 = graph.resolve(start)
    if not mask[v0]:
        raise InputError("start lies outside the region")
    keys = walk_keys(master_seed, purpose, replica, n_walks)
    taus, n_capped = _kernels.exit_time_batch(
        *_arrays(graph), mask, v0, keys, _resolve_cap(graph, cap)
    )
    return taus, int(n_capped)


def estimate_exit_time(
    graph: ClusterGraph,
    region,
    start,
    n_walks: int,
    master_seed: int,
    purpose: str = "exit-time",
    replica: int = 0,
    cap=None,
) -> tuple[Estimate, int]:
    taus, n_capped = exit_times(
        graph, region, start, n_walks, master_seed, purpose, replica, cap
    )
    return _mean_estimate(taus.astype(np.float64)), n_capped


def estimate_hit_prob(
    graph: ClusterGraph,
    region,
    z,
    start,
    n_walks: int,
    master_seed: int,
    purpose: str = "hit-prob",
    replica: int = 0,
    cap=None,
) -> tuple[Estimate, int]:
    """P_start(blind walk hits z strictly before leaving region), Monte Carlo."""
    if n_walks < 1:
        raise InputError("n_walks must be >= 1")
    mask = region_mask(graph, region)
    zi = graph.resolve(z)
    v0 = graph.resolve(start)
    if not (mask[v0] and mask[zi]):
        raise InputError("start and z must lie in the region")
    keys = walk_keys(master_seed, purpose, replica, n_walks)
    starts = np.full(n_walks, v0, dtype=np.int64)
    hits, n_capped = _kernels.hit_before_exit_batch(
        *_arrays(graph), mask, zi, starts, keys, _resolve_cap(graph, cap)
    )
    return _bernoulli_estimate(int(hits.sum()), n_walks), int(n_capped)


def hit_flags_from_each(
    graph: ClusterGraph,
    region,
    z,
    master_seed: int,
    purpose: str = "hit-from-each",
    replica: int = 0,
    cap=None,
) -> tuple[np.ndarray, np.ndarray, int]:
    """One blind walk per region vertex; flag hits of z before leaving region.

    Returns (region rows, uint8 flags aligned with rows, n_capped).  The sum
    of the flags estimates the expected hit count when one walk starts from
    every vertex of the region.
    """
    mask = region_mask(graph, region)
    rows = np.flatnonzero(mask).astype(np.int64)
    zi = graph.resolve(z)
    if not mask[zi]:
        raise InputError("z must lie in the region")
    keys = walk_keys(master_seed, purpose, replica, rows.shape[0])
    hits, n_capped = _kernels.hit_before_exit_batch(
        *_arrays(graph), mask, zi, rows, keys, _resolve_cap(graph, cap)
    )
    return rows, hits, int(n_capped)


def estimate_green(
    graph: ClusterGraph,
    region,
    source,
    n_walks: int,
    master_seed: int,
    purpose: str = "green",
    replica: int = 0,
    cap=None,
) -> GreenTable:
    """Monte Carlo occupation table over the region, killed outside it.

    The returned table also carries the exit-time estimate from the same
    trajectories: each walk's total occupation equals its exit time, so
    summing the table reproduces exit_time.mean exactly.
    """
    if n_walks < 2:
        raise InputError("n_walks must be >= 2")
    mask = region_mask(graph, region)
    rows = np.flatnonzero(mask).astype(np.int64)
    src = graph.resolve(source)
    if not mask[src]:
        raise InputError("source lies outside the region")
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[rows] = np.arange(rows.shape[0])
    keys = walk_keys(master_seed, purpose, replica, n_walks)
    count_sum, count_sq, taus, n_capped = _kernels.green_batch(
        *_arrays(graph), mask, pos, rows.shape[0], src, keys,
        _resolve_cap(graph, cap),
    )
    mean = count_sum / n_walks
    var = (count_sq - n_walks * mean * mean) / (n_walks - 1)
    stderr = np.sqrt(np.maximum(var, 0.0) / n_walks)
    return GreenTable(
        domain=rows,
        values=mean,
        kind="monte_carlo",
        source=src,
        graph_hash=graph.graph_hash(),
        stderr=stderr,
        counts=count_sum,
        n_walks=n_walks,
        exit_time=_mean_estimate(taus.astype(np.float64)),
        n_capped=int(n_capped),
    )


def endpoint_sample(
    graph: ClusterGraph,
    start,
    n_steps: int,
    n_walks: int,
    master_seed: int,
    purpose: str = "endpoint",
    replica: int = 0,
) -> np.ndarray:
    """Endpoints of blind walks run for exactly n_steps, as displacements.

    Aborts with RangeError if any walk touches the outermost box layer,
    where missing neighbors would distort the law.
    """
    if n_steps < 0 or n_walks < 1:
        raise InputError("n_steps and n_walks must be positive")
    v0 = graph.resolve(start)
    on_shell = (
        np.abs(graph.coords).max(axis=1) >= graph.half_width
    ).astype(np.uint8)
    if on_shell[v0]:
        raise InputError("start sits on the box shell")
    keys = walk_keys(master_seed, purpose, replica, n_walks)
    finals, ok = _kernels.endpoint_batch(
        *_arrays(graph), on_shell, v0, keys, n_steps
    )
    if not ok:
        raise RangeError(
            "a walk reached the box shell; enlarge half_width or shorten n_steps"
        )
    return graph.coords[finals].astype(np.int64) - graph.coords[v0]


def escape_probability_mc(
    graph: ClusterGraph,
    x,
    r: int,
    n_walks: int,
    master_seed: int,
    purpose: str = "escape",
    replica: int = 0,
    cap=None,
) -> tuple[Estimate, int]:
    """P_x(simple walk reaches graph distance r before returning to x)."""
    if r < 1:
        raise InputError("r must be >= 1")
    if n_walks < 1:
        raise InputError("n_walks must be >= 1")
    xi = graph.resolve(x)
    if graph.degree[xi] == 0:
        raise InputError("x is isolated")
    dist = distances_from(graph, xi, limit=r)
    if not np.any(dist == r):
        raise InputError(f"no vertex at graph distance {r} from x")
    keys = walk_keys(master_seed, purpose, replica, n_walks)
    n_escaped, n_capped = _kernels.escape_batch(
        *_arrays(graph), dist, xi, r, keys, _resolve_cap(graph, cap)
    )
    return _bernoulli_estimate(int(n_escaped), n_walks), int(n_capped)


def survival_fractions(taus: np.ndarray, times) -> np.ndarray:
    """Empirical P(tau > t) for each t, from a sample of exit times."""
    taus = np.asarray(taus)
    return np.array([float((taus > t).mean()) for t in times])


def stay_probability(graph: ClusterGraph, v) -> Fraction:
    """Blind-walk holding probability 1 - deg/(2d), exact."""
    vi = graph.resolve(v)
    return Fraction(2 * graph.dim - int(graph.degree[vi]), 2 * graph.dim)


def blind_step_distribution(graph: ClusterGraph, v) -> dict[int, Fraction]:
    """Exact one-step law of the blind walk from v, as vertex row -> mass."""
    vi = graph.resolve(v)
    out: dict[int, Fraction] = {}
    stay = stay_probability(graph, vi)
    if stay:
        out[vi] = stay
    for nb in graph.neighbors(vi):
        out[int(nb)] = out.get(int(nb), Fraction(0)) + Fraction(1, 2 * graph.dim)
    return out


def simple_step_distribution(graph: ClusterGraph, v) -> dict[int, Fraction]:
    """Exact one-step law of the simple walk from v (uniform open neighbor)."""
    vi = graph.resolve(v)
    deg = int(graph.degree[vi])
    if deg == 0:
        raise InputError("simple walk undefined at an isolated vertex")
    return {int(nb): Fraction(1, deg) for nb in graph.neighbors(vi)}


__all__ = [
    "Estimate",
    "WalkResult",
    "STOP_REASONS",
    "default_cap",
    "region_mask",
    "run_walk",
    "exit_times",
    "estimate_exit_time",
    "estimate_hit_prob",
    "hit_flags_from_each",
    "estimate_green",
    "endpoint_sample",
    "escape_probability_mc",
    "survival_fractions",
    "stay_probability",
    "blind_step_distribution",
    "simple_step_distribution",
    "stream_key",
]
