"""Finite-box lattice graphs: Bernoulli bond percolation clusters, the full
lattice, and the deterministic sealed-ball counterexample construction.

Vertices live on the box [-M, M]^d.  A graph is stored as lexicographically
sorted integer coordinates plus a direction-indexed neighbor table, so the
walk kernels never touch coordinates.  Every edge of the box has a canonical
id (lower endpoint's box index * d + axis); percolation opens edge e iff
hash(seed, e) < p, which makes configurations reproducible edge-by-edge and
monotone-coupled across p at fixed (d, M, seed).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import ConditioningFailed, ConstructionError, InputError
from .streams import edge_uniforms

_MAX_DIM = 4


# ---------------------------------------------------------------------------
# configuration and raw bond samples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PercolationConfig:
    """Bernoulli bond percolation on the box [-M, M]^dim."""

    dim: int
    p: float
    half_width: int
    seed: int

    def __post_init__(self):
        if not isinstance(self.dim, int) or not 2 <= self.dim <= _MAX_DIM:
            raise InputError(f"dim must be an integer in [2, {_MAX_DIM}], got {self.dim!r}")
        if not (isinstance(self.p, (int, float)) and 0.0 < float(self.p) <= 1.0):
            raise InputError(f"p must lie in (0, 1], got {self.p!r}")
        if not isinstance(self.half_width, int) or self.half_width < 1:
            raise InputError(f"half_width must be a positive integer, got {self.half_width!r}")
        if not isinstance(self.seed, int):
            raise InputError(f"seed must be an integer, got {self.seed!r}")


def _box_side(half_width: int) -> int:
    return 2 * half_width + 1

def _box_coords(dim: int, half_width: int) -> np.ndarray:
    """All box coordinates, lexicographic (== ascending box index), int32."""
    side = _box_side(half_width)
    grids = np.indices((side,) * dim).reshape(dim, -1)
    return (grids.T - half_width).astype(np.int32)


def _box_strides(dim: int, half_width: int) -> np.ndarray:
    side = _box_side(half_width)
    return np.array([side ** (dim - 1 - a) for a in range(dim)], dtype=np.int64)


def edge_id_array(dim: int, half_width: int, axis: int) -> tuple[np.ndarray, np.ndarray]:
    """(lower-endpoint box indices, canonical edge ids) for one axis.

    Edges along `axis` run from each vertex with coord[axis] < M to its
    positive neighbor; the id is box_index * dim + axis.
    """
    coords = _box_coords(dim, half_width)
    lower = np.flatnonzero(coords[:, axis] < half_width)
    return lower, (lower.astype(np.uint64) * np.uint64(dim) + np.uint64(axis))


@dataclass
class PercolationSample:
    """Open-edge field of one configuration.

    open_edges[i, a] is True iff the edge from box vertex i to its +e_a
    neighbor is open; the column is False on the box face coord_a == M
    where no such edge exists.
    """

    config: PercolationConfig
    open_edges: np.ndarray

    @property
    def n_edges(self) -> int:
        d, m = self.config.dim, self.config.half_width
        return d * 2 * m * _box_side(m) ** (d - 1)

    @property
    def n_open(self) -> int:
        return int(self.open_edges.sum())

    @property
    def open_fraction(self) -> float:
        return self.n_open / self.n_edges


def sample_percolation(config: PercolationConfig) -> PercolationSample:
    """Draw the open-edge field for config; deterministic in (config)."""
    d, m = config.dim, config.half_width
    coords = _box_coords(d, m)
    n_box = coords.shape[0]
    open_edges = np.zeros((n_box, d), dtype=bool)
    for a in range(d):
        lower = np.flatnonzero(coords[:, a] < m)
        ids = lower.astype(np.uint64) * np.uint64(d) + np.uint64(a)
        open_edges[lower, a] = edge_uniforms(config.seed, ids) < config.p
    return PercolationSample(config, open_edges)


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------


class ClusterGraph:
    """Immutable finite graph on box coordinates with direction-indexed adjacency.

    coords      (n, dim) int32, lexicographically sorted
    nbr_by_dir  (n, 2*dim) int32; column 2a is the +e_a neighbor, 2a+1 the
                -e_a neighbor, -1 where that edge is closed or absent
    """

    def __init__(self, dim, half_width, coords, nbr_by_dir, origin_index, source):
        self.dim = int(dim)
        self.half_width = int(half_width)
        self.coords = coords
        self.nbr_by_dir = nbr_by_dir
        self.origin_index = int(origin_index)
        self.source = dict(source)
        self.coords.setflags(write=False)
        self.nbr_by_dir.setflags(write=False)
        self._degree = None
        self._compact = None
        self._row_of = None
        self._dist0 = None
        self._hash = None

    # -- derived tables (lazy; the big counterexample boxes skip most) ------

    @property
    def n_vertices(self) -> int:
        return self.coords.shape[0]

    @property
    def degree(self) -> np.ndarray:
        if self._degree is None:
            deg = (self.nbr_by_dir >= 0).sum(axis=1).astype(np.int32)
            deg.setflags(write=False)
            self._degree = deg
        return self._degree

    @property
    def nbr_compact(self) -> np.ndarray:
        if self._compact is None:
            # stable sort of the "closed" flag packs open slots left, in
            # direction order, so simple-walk draws are order-deterministic
            order = np.argsort(self.nbr_by_dir < 0, axis=1, kind="stable")
            compact = np.take_along_axis(self.nbr_by_dir, order, axis=1).copy()
            compact.setflags(write=False)
            self._compact = compact
        return self._compact

    @property
    def row_of(self) -> np.ndarray:
        """Box linear index -> vertex row, -1 where the vertex is absent."""
        if self._row_of is None:
            n_box = _box_side(self.half_width) ** self.dim
            row = np.full(n_box, -1, dtype=np.int32)
            row[self._box_indices(self.coords)] = np.arange(self.n_vertices, dtype=np.int32)
            row.setflags(write=False)
            self._row_of = row
        return self._row_of

    def _box_indices(self, coords) -> np.ndarray:
        strides = _box_strides(self.dim, self.half_width)
        return (coords.astype(np.int64) + self.half_width) @ strides

    @property
    def origin_distances(self) -> np.ndarray:
        """Euclidean distance of every vertex from the coordinate origin."""
        if self._dist0 is None:
            d = np.sqrt((self.coords.astype(np.float64) ** 2).sum(axis=1))
            d.setflags(write=False)
            self._dist0 = d
        return self._dist0

    # -- lookups -------------------------------------------------------------

    def index_of(self, coord) -> int:
        """Vertex row of a coordinate tuple, or -1 if not in the graph."""
        c = np.asarray(coord, dtype=np.int64)
        if c.shape != (self.dim,) or np.any(np.abs(c) > self.half_width):
            return -1
        return int(self.row_of[int((c + self.half_width) @ _box_strides(self.dim, self.half_width))])

    def resolve(self, vertex) -> int:
        """Accept a row index or a coordinate tuple; return the row index."""
        if isinstance(vertex, (int, np.integer)):
            v = int(vertex)
            if not 0 <= v < self.n_vertices:
                raise InputError(f"vertex row {v} out of range")
            return v
        v = self.index_of(vertex)
        if v < 0:
            raise InputError(f"coordinate {tuple(vertex)} is not a vertex of this graph")
        return v

    def neighbors(self, v: int) -> np.ndarray:
        return self.nbr_compact[v, : self.degree[v]]

    def graph_hash(self) -> str:
        if self._hash is None:
            h = hashlib.sha256()
            h.update(b"idlalab-graph-v1\0")
            h.update(f"{self.dim}|{self.half_width}|".encode())
            h.update(json.dumps(self.source, sort_keys=True).encode())
            h.update(np.ascontiguousarray(self.coords, dtype="<i4").tobytes())
            h.update(np.ascontiguousarray(self.nbr_by_dir, dtype="<i4").tobytes())
            self._hash = h.hexdigest()
        return self._hash


def _graph_from_open_edges(dim, half_width, open_edges, member_mask, source) -> ClusterGraph:
    rows = np.flatnonzero(member_mask)
    n = rows.shape[0]
    row_of = np.full(member_mask.shape[0], -1, dtype=np.int32)
    row_of[rows] = np.arange(n, dtype=np.int32)
    coords = _box_coords(dim, half_width)[rows]
    strides = _box_strides(dim, half_width)
    nbr = np.full((n, 2 * dim), -1, dtype=np.int32)
    for a in range(dim):
        lower = np.flatnonzero(open_edges[:, a] & member_mask)
        upper = lower + strides[a]
        keep = member_mask[upper]
        lo, up = row_of[lower[keep]], row_of[upper[keep]]
        nbr[lo, 2 * a] = up
        nbr[up, 2 * a + 1] = lo
    origin_box = int((np.zeros(dim, dtype=np.int64) + half_width) @ strides)
    origin_index = int(row_of[origin_box])
    if origin_index < 0:
        raise InputError("origin is not a member vertex of this graph")
    return ClusterGraph(dim, half_width, coords, nbr, origin_index, source)


def full_lattice(dim: int, half_width: int) -> ClusterGraph:
    """Every vertex and every edge of the box [-M, M]^dim."""
    if not 2 <= dim <= _MAX_DIM:
        raise InputError(f"dim must be in [2, {_MAX_DIM}]")
    if half_width < 1:
        raise InputError("half_width must be >= 1")
    coords = _box_coords(dim, half_width)
    open_edges = coords < half_width  # (n_box, dim): +a edge exists iff coord_a < M
    members = np.ones(coords.shape[0], dtype=bool)
    source = {"kind": "full_lattice", "dim": dim, "half_width": half_width}
    return _graph_from_open_edges(dim, half_width, open_edges, members, source)


def extract_cluster(
    config: PercolationConfig,
    policy: str = "resample",
    max_retries: int = 64,
) -> ClusterGraph:
    """Origin's open cluster, conditioned to be the largest in the box.

    policy="strict" accepts only the configured seed and raises
    ConditioningFailed if the origin's cluster is not (tied-)largest;
    policy="resample" retries seeds seed+1, seed+2, ... up to max_retries
    additional samples.  Near or below criticality the budget exhausts and
    ConditioningFailed reports the attempt count.
    """
    if policy not in ("strict", "resample"):
        raise InputError(f"unknown conditioning policy {policy!r}")
    if max_retries < 0:
        raise InputError("max_retries must be >= 0")
    attempts = 1 if policy == "strict" else max_retries + 1
    d, m = config.dim, config.half_width
    strides = _box_strides(d, m)
    n_box = _box_side(m) ** d
    origin_box = int((np.zeros(d, dtype=np.int64) + m) @ strides)
    for k in range(attempts):
        cfg = PercolationConfig(d, config.p, m, config.seed + k)
        sample = sample_percolation(cfg)
        lo_all, up_all = [], []
        for a in range(d):
            lo = np.flatnonzero(sample.open_edges[:, a])
            lo_all.append(lo)
            up_all.append(lo + strides[a])
        lo_all = np.concatenate(lo_all) if lo_all else np.empty(0, np.int64)
        up_all = np.concatenate(up_all) if up_all else np.empty(0, np.int64)
        adj = coo_matrix(
            (np.ones(lo_all.shape[0], dtype=np.int8), (lo_all, up_all)),
            shape=(n_box, n_box),
        )
        _, labels = connected_components(adj, directed=False)
        sizes = np.bincount(labels)
        origin_label = labels[origin_box]
        if sizes[origin_label] == sizes.max():
            members = labels == origin_label
            source = {
                "kind": "percolation",
                "dim": d,
                "p": float(config.p),
                "half_width": m,
                "config_seed": config.seed,
                "seed": cfg.seed,
                "attempts": k + 1,
            }
            open_members = sample.open_edges.copy()
            return _graph_from_open_edges(d, m, open_members, members, source)
    raise ConditioningFailed(attempts)


# ---------------------------------------------------------------------------
# counterexample lattice (sealed balls along the axes)
# ---------------------------------------------------------------------------


def build_counterexample(R0: int, scale_count: int) -> ClusterGraph:
    """d=3 lattice with sealed balls breaking the inner-ball theorem.

    For n < scale_count, a ball of Euclidean radius R_n**0.9 centered at
    distance R_n = 2**n * R0 from the origin keeps exactly one of its
    boundary edges (the lexicographically smallest); all other edges
    crossing the ball's boundary are deleted.  Centers cycle through the
    coordinate axes so the balls stay vertex-disjoint; overlap, an enclosed
    origin, or a disconnected result raise ConstructionError.
    """
    if not isinstance(R0, int) or R0 < 8:
        raise InputError(f"R0 must be an integer >= 8, got {R0!r}")
    if not isinstance(scale_count, int) or scale_count < 1:
        raise InputError(f"scale_count must be a positive integer, got {scale_count!r}")
    dim = 3
    radii_R = [R0 * 2 ** n for n in range(scale_count)]
    radii_r = [R ** 0.9 for R in radii_R]
    centers = []
    for n, R in enumerate(radii_R):
        c = np.zeros(dim, dtype=np.int64)
        c[n % dim] = R
        centers.append(c)
    for i in range(scale_count):
        if np.linalg.norm(centers[i]) <= radii_r[i]:
            raise ConstructionError(f"ball {i} contains the origin")
        for j in range(i + 1, scale_count):
            gap = np.linalg.norm(centers[i] - centers[j])
            # +1 keeps the balls non-adjacent too: no single edge may cross
            # both boundaries, or one deletion pass could break another ball
            if gap <= radii_r[i] + radii_r[j] + 1.0:
                raise ConstructionError(
                    f"balls {i} and {j} overlap or touch: center gap {gap:.2f} "
                    f"<= {radii_r[i]:.2f} + {radii_r[j]:.2f} + 1"
                )
    half_width = math.ceil(2.5 * radii_R[-1])
    if max(R + r for R, r in zip(radii_R, radii_r)) > half_width - 2:
        raise ConstructionError("a sealed ball reaches the box shell")

    coords = _box_coords(dim, half_width)
    strides = _box_strides(dim, half_width)
    open_edges = coords < half_width
    for n in range(scale_count):
        delta = coords.astype(np.int64) - centers[n]
        inside = (delta ** 2).sum(axis=1) < radii_r[n] ** 2
        if not inside.any():
            raise ConstructionError(f"ball {n} contains no vertices")
        boundary = []  # (box index of lower endpoint, axis)
        for a in range(dim):
            lower = np.flatnonzero(open_edges[:, a] & (inside != _shift_mask(inside, strides[a])))
            boundary.append(np.stack([lower, np.full_like(lower, a)], axis=1))
        boundary = np.concatenate(boundary, axis=0)
        if boundary.shape[0] == 0:
            raise ConstructionError(f"ball {n} has no boundary edges")
        order = np.argsort(boundary[:, 0] * dim + boundary[:, 1])
        drop = boundary[order[1:]]
        open_edges[drop[:, 0], drop[:, 1]] = False

    members = np.ones(coords.shape[0], dtype=bool)
    source = {"kind": "counterexample", "dim": dim, "R0": R0, "scale_count": scale_count}
    graph = _graph_from_open_edges(dim, half_width, open_edges, members, source)
    dist = _kernels.bfs_distances(graph.nbr_by_dir, np.int64(graph.origin_index), np.int64(2 ** 31))
    if int((dist >= 0).sum()) != graph.n_vertices:
        raise ConstructionError("sealed-ball construction disconnected the box")
    return graph


def _shift_mask(mask: np.ndarray, stride: int) -> np.ndarray:
    """mask value at box index i + stride (False past the end)."""
    out = np.zeros_like(mask)
    out[: mask.shape[0] - stride] = mask[stride:]
    return out


@dataclass
class SealedBall:
    center: tuple
    radius: float
    v_prime: tuple
    outside_end: tuple
    ball_rows: np.ndarray


def counterexample_metadata(graph: ClusterGraph) -> list[SealedBall]:
    """Recover each sealed ball's geometry from a counterexample graph."""
    src = graph.source
    if src.get("kind") != "counterexample":
        raise InputError("graph was not built by build_counterexample")
    out = []
    for n in range(src["scale_count"]):
        R = src["R0"] * 2 ** n
        center = np.zeros(graph.dim, dtype=np.int64)
        center[n % graph.dim] = R
        r = R ** 0.9
        rows = ball_vertices(graph, center, r)
        in_ball = np.zeros(graph.n_vertices, dtype=bool)
        in_ball[rows] = True
        crossings = []
        for v in rows:
            for nb in graph.neighbors(int(v)):
                if not in_ball[nb]:
                    crossings.append((int(v), int(nb)))
        if len(crossings) != 1:
            raise ConstructionError(
                f"ball {n}: expected exactly one crossing edge, found {len(crossings)}"
            )
        v_in, v_out = crossings[0]
        out.append(
            SealedBall(
                center=tuple(int(c) for c in center),
                radius=r,
                v_prime=tuple(int(c) for c in graph.coords[v_in]),
                outside_end=tuple(int(c) for c in graph.coords[v_out]),
                ball_rows=rows,
            )
        )
    return out


# ---------------------------------------------------------------------------
# geometry on a graph
# ---------------------------------------------------------------------------


def ball_vertices(graph: ClusterGraph, center, r: float) -> np.ndarray:
    """Rows of graph vertices with Euclidean distance < r from center (strict)."""
    c = np.asarray(center, dtype=np.float64)
    if c.shape != (graph.dim,):
        raise InputError(f"center must have {graph.dim} coordinates")
    delta = graph.coords.astype(np.float64) - c
    return np.flatnonzero((delta ** 2).sum(axis=1) < float(r) ** 2)


def box_vertices(graph: ClusterGraph, center, r: float) -> np.ndarray:
    """Rows of graph vertices in the open box of side 2r around center."""
    c = np.asarray(center, dtype=np.float64)
    if c.shape != (graph.dim,):
        raise InputError(f"center must have {graph.dim} coordinates")
    delta = np.abs(graph.coords.astype(np.float64) - c)
    return np.flatnonzero((delta < float(r)).all(axis=1))


def distances_from(graph: ClusterGraph, x, limit: int = 2 ** 31 - 1) -> np.ndarray:
    """Graph distances from x to every vertex (-1 beyond limit/unreachable)."""
    v = graph.resolve(x)
    return _kernels.bfs_distances(graph.nbr_by_dir, np.int64(v), np.int64(limit))


def graph_distance(graph: ClusterGraph, x, y) -> float:
    """Chemical distance between two vertices; math.inf if disconnected."""
    xi, yi = graph.resolve(x), graph.resolve(y)
    d = int(distances_from(graph, xi)[yi])
    return math.inf if d < 0 else float(d)


def unit_ball_volume(dim: int) -> float:
    return math.pi ** (dim / 2) / math.gamma(dim / 2 + 1)


@dataclass
class DensityProfile:
    kind: str
    center: tuple
    radii: np.ndarray
    counts: np.ndarray
    densities: np.ndarray


def density_profile(graph: ClusterGraph, center, radii, kind: str = "box") -> DensityProfile:
    """Vertex counts and normalized densities of balls/boxes around center.

    Box densities use (2r)^d sites, ball densities |b_1| r^d, so the full
    lattice tends to density 1 from below as r grows.
    """
    if kind not in ("box", "ball"):
        raise InputError(f"kind must be 'box' or 'ball', got {kind!r}")
    rs = np.asarray(sorted(float(r) for r in radii), dtype=np.float64)
    if rs.size == 0 or rs[0] <= 0:
        raise InputError("radii must be positive")
    counts = np.empty(rs.size, dtype=np.int64)
    for i, r in enumerate(rs):
        sel = ball_vertices(graph, center, r) if kind == "ball" else box_vertices(graph, center, r)
        counts[i] = sel.size
    if kind == "ball":
        norm = unit_ball_volume(graph.dim) * rs ** graph.dim
    else:
        norm = (2.0 * rs) ** graph.dim
    return DensityProfile(kind, tuple(np.asarray(center).tolist()), rs, counts, counts / norm)


@dataclass
class ChemicalScan:
    pairs: np.ndarray      # (n, 2) vertex rows
    euclidean: np.ndarray
    chemical: np.ndarray
    max_ratio: float
    max_pair: tuple


def chemical_ratio_scan(
    graph: ClusterGraph,
    R: float,
    n_pairs: int,
    min_sep: float,
    master_seed: int = 0,
) -> ChemicalScan:
    """Max chemical/Euclidean distance ratio over sampled far pairs in B_R."""
    from .streams import Stream, stream_key

    cand = ball_vertices(graph, np.zeros(graph.dim), R)
    if cand.size < 2:
        raise InputError("fewer than two vertices in B_R")
    if min_sep <= 0:
        raise InputError("min_sep must be positive")
    stream = Stream(stream_key(master_seed, "chemical-scan"))
    coords = graph.coords[cand].astype(np.float64)
    pairs = []
    attempts = 0
    while len(pairs) < n_pairs:
        attempts += 1
        if attempts > 200 * n_pairs:
            raise InputError("could not sample enough pairs at this min_sep")
        i = stream.below(cand.size)
        j = stream.below(cand.size)
        if i == j:
            continue
        if np.linalg.norm(coords[i] - coords[j]) < min_sep:
            continue
        pairs.append((int(cand[i]), int(cand[j])))
    pairs = np.array(pairs, dtype=np.int64)
    euclid = np.linalg.norm(
        (graph.coords[pairs[:, 0]] - graph.coords[pairs[:, 1]]).astype(np.float64), axis=1
    )
    chem = np.empty(pairs.shape[0], dtype=np.float64)
    by_source: dict[int, list[int]] = {}
    for k, (u, v) in enumerate(pairs):
        by_source.setdefault(int(u), []).append(k)
    for u, ks in by_source.items():
        dist = distances_from(graph, u)
        for k in ks:
            d = int(dist[pairs[k, 1]])
            chem[k] = math.inf if d < 0 else float(d)
    ratios = chem / euclid
    best = int(np.argmax(ratios))
    max_pair = (
        tuple(int(c) for c in graph.coords[pairs[best, 0]]),
        tuple(int(c) for c in graph.coords[pairs[best, 1]]),
    )
    return ChemicalScan(pairs, euclid, chem, float(ratios[best]), max_pair)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

_FORMAT_LINE = "idlalab-graph v1"


def save_graph(graph: ClusterGraph, path) -> None:
    """Versioned plain-text export; load_graph round-trips it bit-exactly."""
    lines = [
        _FORMAT_LINE,
        f"dim {graph.dim}",
        f"half_width {graph.half_width}",
        "source " + json.dumps(graph.source, sort_keys=True),
        f"vertices {graph.n_vertices}",
    ]
    lines.extend(" ".join(str(int(c)) for c in row) for row in graph.coords)
    edges = []
    for a in range(graph.dim):
        col = graph.nbr_by_dir[:, 2 * a]
        us = np.flatnonzero(col >= 0)
        edges.append(np.stack([us, col[us]], axis=1))
    edges = np.concatenate(edges, axis=0)
    # order by (lower endpoint row, axis): recover axis from the pair order above
    order = np.lexsort((np.concatenate([np.full((graph.nbr_by_dir[:, 2 * a] >= 0).sum(), a)
                                        for a in range(graph.dim)]), edges[:, 0]))
    edges = edges[order]
    lines.append(f"edges {edges.shape[0]}")
    lines.extend(f"{int(u)} {int(v)}" for u, v in edges)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> ClusterGraph:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _FORMAT_LINE:
        raise InputError(f"not an idlalab graph file: {path}")
    dim = int(lines[1].split()[1])
    half_width = int(lines[2].split()[1])
    source = json.loads(lines[3].split(" ", 1)[1])
    n = int(lines[4].split()[1])
    coords = np.array(
        [[int(t) for t in line.split()] for line in lines[5 : 5 + n]], dtype=np.int32
    ).reshape(n, dim)
    e_off = 5 + n
    n_edges = int(lines[e_off].split()[1])
    nbr = np.full((n, 2 * dim), -1, dtype=np.int32)
    for line in lines[e_off + 1 : e_off + 1 + n_edges]:
        u, v = (int(t) for t in line.split())
        delta = coords[v].astype(np.int64) - coords[u]
        axis = int(np.flatnonzero(delta)[0])
        if delta[axis] == 1:
            nbr[u, 2 * axis] = v
            nbr[v, 2 * axis + 1] = u
        else:
            nbr[u, 2 * axis + 1] = v
            nbr[v, 2 * axis] = u
    origin = np.flatnonzero((coords == 0).all(axis=1))
    if origin.size != 1:
        raise InputError("graph file lacks an origin vertex")
    return ClusterGraph(dim, half_width, coords, nbr, int(origin[0]), source)
