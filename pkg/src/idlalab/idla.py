"""Internal aggregation: sequential particles settling at first free vertex.

Particle k starts at the origin and performs a blind walk until it steps on
a vertex not yet occupied, where it settles; particle 1 settles at the
origin itself.  After n particles the occupied set has exactly n vertices.
Shape statements are probed by coverage fractions of origin-centered balls
and by hit/occupation tallies of a marked vertex z collected while each
particle's walk is continued past its settling time to the exit of a ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import AggregationStalled, InputError
from .lattice import ClusterGraph, PercolationConfig, ball_vertices, extract_cluster
from .streams import stream_key, walk_keys
from .walks import default_cap, hit_flags_from_each, region_mask


@dataclass
class Aggregate:
    """Occupied set of an aggregation run, in settle order."""

    graph: ClusterGraph
    origin: int
    settle: np.ndarray        # int32 vertex rows, settle order
    steps: np.ndarray         # int64 walk length of each particle
    master_seed: int = 0
    purpose: str = "idla"
    replica: int = 0

    @property
    def n(self) -> int:
        return int(self.settle.shape[0])

    def member_mask(self) -> np.ndarray:
        mask = np.zeros(self.graph.n_vertices, dtype=bool)
        mask[self.settle] = True
        return mask


def safe_capacity(graph: ClusterGraph, origin=None) -> int:
    """Largest particle count run_idla accepts: vertices within 0.8 half_width.

    Aggregates near this size stay well clear of the box shell, so the
    truncated lattice cannot distort the walks that build them.
    """
    o = graph.origin_index if origin is None else graph.resolve(origin)
    return int(ball_vertices(graph, graph.coords[o], 0.8 * graph.half_width).shape[0])


def run_idla(
    graph: ClusterGraph,
    n_particles: int,
    master_seed: int,
    purpose: str = "idla",
    replica: int = 0,
    cap=None,
    origin=None,
) -> Aggregate:
    """Grow an aggregate of n_particles vertices from the origin."""
    if n_particles < 0:
        raise InputError("n_particles must be >= 0")
    o = graph.origin_index if origin is None else graph.resolve(origin)
    cap_n = safe_capacity(graph, o)
    if n_particles > cap_n:
        raise InputError(
            f"{n_particles} particles exceed the safe capacity {cap_n} "
            f"of this box; enlarge half_width"
        )
    c = default_cap(graph) if cap is None else int(cap)
    keys = walk_keys(master_seed, purpose, replica, n_particles)
    occupied = np.zeros(graph.n_vertices, dtype=np.uint8)
    settle, steps, stalled = _kernels.idla_batch(
        graph.nbr_by_dir, graph.nbr_compact, graph.degree, occupied, o, keys, c
    )
    if stalled >= 0:
        raise AggregationStalled(int(stalled), c)
    return Aggregate(graph, o, settle, steps, master_seed, purpose, replica)


def coverage(graph: ClusterGraph, members, r: float, center=None) -> float:
    """Fraction of graph vertices within distance r of center that are members.

    An empty target ball counts as fully covered.
    """
    o = graph.origin_index if center is None else graph.resolve(center)
    ball = ball_vertices(graph, graph.coords[o], r)
    if ball.shape[0] == 0:
        return 1.0
    mask = region_mask(graph, members).astype(bool)
    return float(mask[ball].mean())


def inner_radius(graph: ClusterGraph, members, center=None) -> float:
    """Largest rho with every graph vertex closer than rho settled.

    Equals the distance of the nearest unsettled vertex to the center, or
    the distance of the farthest graph vertex plus one when everything is
    settled (the box then caps the measurement).
    """
    o = graph.origin_index if center is None else graph.resolve(center)
    mask = region_mask(graph, members).astype(bool)
    d2 = np.sum(
        (graph.coords.astype(np.float64) - graph.coords[o]) ** 2, axis=1
    )
    unsettled = ~mask
    if not unsettled.any():
        return float(math.sqrt(d2.max())) + 1.0
    return float(math.sqrt(d2[unsettled].min()))


@dataclass
class ShapeRun:
    radius: int
    replica: int
    graph_seed: int
    n_particles: int
    target_count: int       # vertices of the inner ball being checked
    covered_count: int

    @property
    def coverage(self) -> float:
        return 1.0 if self.target_count == 0 else self.covered_count / self.target_count


@dataclass
class ShapeResult:
    dim: int
    p: float
    eps: float
    runs: list[ShapeRun] = field(default_factory=list)

    def by_radius(self) -> dict[int, list[ShapeRun]]:
        out: dict[int, list[ShapeRun]] = {}
        for run in self.runs:
            out.setdefault(run.radius, []).append(run)
        return out

    def mean_uncovered(self) -> dict[int, float]:
        """Average count of unsettled inner-ball vertices, per radius."""
        return {
            R: float(np.mean([r.target_count - r.covered_count for r in runs]))
            for R, runs in self.by_radius().items()
        }

    def high_coverage_fraction(self, level: float = 0.99) -> dict[int, float]:
        return {
            R: float(np.mean([r.coverage >= level for r in runs]))
            for R, runs in self.by_radius().items()
        }


def shape_experiment(
    dim: int,
    p: float,
    radii,
    eps: float,
    n_replicas: int,
    master_seed: int,
    policy: str = "resample",
    cap=None,
) -> ShapeResult:
    """Coverage of the shrunken ball by |ball| particles, over fresh clusters.

    For each radius R and replica, a new percolation cluster is drawn in a
    box of half-width ceil(1.5 R), the aggregate is grown to the vertex
    count of the R-ball around the origin, and the fraction of the
    (1 - eps) R ball that settled is recorded.
    """
    if not 0.0 < eps < 1.0:
        raise InputError("eps must lie in (0, 1)")
    if n_replicas < 1:
        raise InputError("n_replicas must be >= 1")
    result = ShapeResult(dim, p, eps)
    counter = 0
    for R in radii:
        R = int(R)
        for rep in range(n_replicas):
            seed = stream_key(master_seed, "shape/percolation", counter, 0)
            if p >= 1.0:
                from .lattice import full_lattice

                graph = full_lattice(dim, int(math.ceil(1.5 * R)))
            else:
                graph = extract_cluster(
                    PercolationConfig(dim, p, int(math.ceil(1.5 * R)), seed),
                    policy=policy,
                )
            origin = graph.origin_index
            ball = ball_vertices(graph, graph.coords[origin], float(R))
            agg = run_idla(
                graph,
                int(ball.shape[0]),
                master_seed,
                purpose="shape/idla",
                replica=counter,
                cap=cap,
            )
            target = ball_vertices(graph, graph.coords[origin], (1.0 - eps) * R)
            mask = agg.member_mask()
            result.runs.append(
                ShapeRun(
                    radius=R,
                    replica=rep,
                    graph_seed=seed,
                    n_particles=agg.n,
                    target_count=int(target.shape[0]),
                    covered_count=int(mask[target].sum()),
                )
            )
            counter += 1
    return result


@dataclass
class MLStats:
    """Tallies of visits to a marked vertex during aggregation.

    For each replica: m counts particles whose full walk (continued past
    settling to the exit of the R-ball) visits z before that exit, l only
    those visiting z at or after their settling time, lhat the hit count
    when one independent walk starts from every ball vertex.
    """

    z: int
    radius: float
    n_particles: int
    m: np.ndarray
    l: np.ndarray
    lhat: np.ndarray

    @property
    def n_replicas(self) -> int:
        return int(self.m.shape[0])


def ml_statistics(
    graph: ClusterGraph,
    R: float,
    z,
    n_replicas: int,
    master_seed: int,
    cap=None,
) -> MLStats:
    """Aggregation visit statistics at z inside the origin-centered R-ball."""
    if n_replicas < 1:
        raise InputError("n_replicas must be >= 1")
    origin = graph.origin_index
    ball = ball_vertices(graph, graph.coords[origin], R)
    inside = np.zeros(graph.n_vertices, dtype=np.uint8)
    inside[ball] = 1
    zi = graph.resolve(z)
    if not inside[zi]:
        raise InputError("z must lie inside the R-ball")
    n_particles = int(ball.shape[0])
    if n_particles > safe_capacity(graph):
        raise InputError("R-ball holds more particles than the box can absorb")
    c = default_cap(graph) if cap is None else int(cap)
    m_vals = np.empty(n_replicas, dtype=np.int64)
    l_vals = np.empty(n_replicas, dtype=np.int64)
    lhat_vals = np.empty(n_replicas, dtype=np.int64)
    for rep in range(n_replicas):
        keys = walk_keys(master_seed, "ml/idla", rep, n_particles)
        occupied = np.zeros(graph.n_vertices, dtype=np.uint8)
        settle, m, l, stalled = _kernels.idla_ml_batch(
            graph.nbr_by_dir, graph.nbr_compact, graph.degree,
            occupied, origin, zi, inside, keys, c,
        )
        if stalled >= 0:
            raise AggregationStalled(int(stalled), c)
        m_vals[rep] = m
        l_vals[rep] = l
        _, hits, _ = hit_flags_from_each(
            graph, ball, zi, master_seed, purpose="ml/lhat", replica=rep, cap=c
        )
        lhat_vals[rep] = int(hits.sum())
    return MLStats(zi, float(R), n_particles, m_vals, l_vals, lhat_vals)


def write_aggregate(aggregate: Aggregate, path) -> None:
    """One particle per line: settle index, coordinates, walk length."""
    g = aggregate.graph
    lines = [
        "# idlalab aggregate v1",
        f"# graph_hash={g.graph_hash()}",
        f"# master_seed={aggregate.master_seed} purpose={aggregate.purpose} "
        f"replica={aggregate.replica}",
        f"# origin={tuple(int(c) for c in g.coords[aggregate.origin])}",
        "# columns: index " + " ".join(f"x{i}" for i in range(g.dim)) + " steps",
    ]
    for i in range(aggregate.n):
        coords = " ".join(str(int(c)) for c in g.coords[aggregate.settle[i]])
        lines.append(f"{i} {coords} {int(aggregate.steps[i])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_aggregate(graph: ClusterGraph, path) -> Aggregate:
    """Read an aggregate file back against the graph it was grown on."""
    meta: dict[str, str] = {}
    rows: list[int] = []
    steps: list[int] = []
    origin = None
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "# idlalab aggregate v1":
            raise InputError(f"not an aggregate file: {header!r}")
        expect = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                for part in body.split():
                    if "=" in part:
                        k, v = part.split("=", 1)
                        meta[k] = v
                if body.startswith("origin="):
                    origin = tuple(
                        int(t) for t in body[len("origin=") :].strip("()").split(",")
                    )
                continue
            parts = line.split()
            if len(parts) != graph.dim + 2:
                raise InputError(f"malformed particle line: {line!r}")
            if int(parts[0]) != expect:
                raise InputError(f"particle indices out of order at {line!r}")
            expect += 1
            coord = tuple(int(t) for t in parts[1 : 1 + graph.dim])
            rows.append(graph.resolve(coord))
            steps.append(int(parts[-1]))
    if meta.get("graph_hash") not in (None, graph.graph_hash()):
        raise InputError("aggregate was grown on a different graph")
    settle = np.asarray(rows, dtype=np.int32)
    if np.unique(settle).shape[0] != settle.shape[0]:
        raise InputError("aggregate file repeats a vertex")
    o = graph.resolve(origin) if origin is not None else graph.origin_index
    return Aggregate(
        graph,
        o,
        settle,
        np.asarray(steps, dtype=np.int64),
        int(meta.get("master_seed", 0)),
        meta.get("purpose", "idla"),
        int(meta.get("replica", 0)),
    )
