"""Exact linear-algebra oracles for the blind walk on a finite graph.

The blind walk steps to each open neighbor with probability 1/(2d) and
stays put otherwise, so its transition kernel is symmetric.  Killing the
walk outside a domain D gives the substochastic kernel Q over D, and

    (I - Q) g = e_source   ->  g[v] = expected time indices at v before exit
    (I - Q) u = 1          ->  u[v] = E_v[first exit time of D]

with the visit at t = 0 counted and stays counted.  Systems up to 4000
unknowns are solved densely, larger ones by conjugate gradients; every
solve is verified against a max-norm residual bound and raises SolverError
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import cg

from .errors import InputError, ResourceError, SolverError
from .lattice import ClusterGraph

_DENSE_LIMIT = 4000
_RESIDUAL_TOL = 1e-10
_POWER_BUDGET = 5e7  # floats held by heat_kernel_powers


@dataclass
class KilledKernel:
    """Substochastic one-step kernel of a walk killed outside `domain`."""

    domain: np.ndarray           # vertex rows, sorted ascending
    matrix: csr_matrix           # |D| x |D|
    kind: str                    # "blind" | "simple"
    position: np.ndarray         # vertex row -> domain slot, -1 outside

    @property
    def size(self) -> int:
        return self.domain.shape[0]


def _check_domain(graph: ClusterGraph, domain) -> np.ndarray:
    dom = np.unique(np.asarray(domain, dtype=np.int64))
    if dom.size == 0:
        raise InputError("domain is empty")
    if dom[0] < 0 or dom[-1] >= graph.n_vertices:
        raise InputError("domain contains out-of-range vertex rows")
    return dom


def build_killed_kernel(graph: ClusterGraph, domain, kind: str = "blind") -> KilledKernel:
    if kind not in ("blind", "simple"):
        raise InputError(f"kind must be 'blind' or 'simple', got {kind!r}")
    dom = _check_domain(graph, domain)
    m = dom.size
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[dom] = np.arange(m)
    nbr = graph.nbr_by_dir[dom]                      # (m, 2d)
    open_slot = nbr >= 0
    safe = np.where(open_slot, nbr, 0)
    in_domain = open_slot & (pos[safe] >= 0)
    rows = np.repeat(np.arange(m), nbr.shape[1])[in_domain.ravel()]
    cols = pos[safe.ravel()[in_domain.ravel()]]
    deg = graph.degree[dom].astype(np.float64)
    if kind == "blind":
        data = np.full(rows.shape[0], 1.0 / (2 * graph.dim))
        diag = 1.0 - deg / (2 * graph.dim)
        rows = np.concatenate([rows, np.arange(m)])
        cols = np.concatenate([cols, np.arange(m)])
        data = np.concatenate([data, diag])
    else:
        if np.any(deg == 0):
            raise InputError("simple kernel undefined at an isolated vertex")
        data = (1.0 / deg)[rows]
    matrix = csr_matrix((data, (rows, cols)), shape=(m, m))
    matrix.sum_duplicates()
    return KilledKernel(dom, matrix, kind, pos)


def _solve_system(A_dense_or_csr, b: np.ndarray) -> np.ndarray:
    """Solve Ax = b for the SPD operators used here, with residual check."""
    A = A_dense_or_csr
    n = b.shape[0]
    if n <= _DENSE_LIMIT:
        try:
            x = np.linalg.solve(A.toarray(), b)
        except np.linalg.LinAlgError as exc:
            # e.g. a killed component that can never reach the killing set
            raise SolverError(f"direct solve failed: {exc}") from None
    else:
        x, info = cg(A, b, rtol=1e-13, atol=0.0, maxiter=20000)
        if info != 0:
            raise SolverError(f"conjugate gradients failed to converge (info={info})")
    resid = np.max(np.abs(A @ x - b))
    if resid > _RESIDUAL_TOL * max(1.0, np.max(np.abs(x))):
        raise SolverError(f"residual {resid:.3e} exceeds tolerance")
    return x


def _identity_minus(Q: csr_matrix) -> csr_matrix:
    from scipy.sparse import identity

    return (identity(Q.shape[0], format="csr") - Q).tocsr()


def _require_escape(graph: ClusterGraph, domain: np.ndarray) -> None:
    """Reject domains the killed walk can never leave.

    (I - Q) is singular exactly when some component of the induced
    subgraph has no open edge to the outside, so the exit time and Green
    values are undefined there.
    """
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[domain] = np.arange(domain.size)
    nbr = graph.nbr_by_dir[domain]
    open_slot = nbr >= 0
    safe = np.where(open_slot, nbr, 0)
    inside = open_slot & (pos[safe] >= 0)
    leaky = graph.degree[domain] > inside.sum(axis=1)
    if leaky.all():
        return
    from scipy.sparse.csgraph import connected_components

    rows = np.repeat(np.arange(domain.size), nbr.shape[1])[inside.ravel()]
    cols = pos[safe.ravel()[inside.ravel()]]
    adj = csr_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, cols)),
        shape=(domain.size, domain.size),
    )
    n_comp, labels = connected_components(adj, directed=False)
    reached = np.zeros(n_comp, dtype=bool)
    reached[labels[leaky]] = True
    if not reached.all():
        raise InputError("the walk can never leave part of this domain")


@dataclass
class GreenTable:
    """Killed Green values over a domain, exact or Monte Carlo."""

    domain: np.ndarray
    values: np.ndarray
    kind: str                     # "exact" | "monte_carlo"
    source: int
    graph_hash: str
    stderr: np.ndarray | None = None
    counts: np.ndarray | None = None       # monte_carlo: integer visit totals
    n_walks: int | None = None
    exit_time: object | None = None        # monte_carlo: Estimate from same walks
    n_capped: int = 0

    def value_at(self, vertex_row: int) -> float:
        i = np.searchsorted(self.domain, vertex_row)
        if i >= self.domain.size or self.domain[i] != vertex_row:
            raise InputError(f"vertex {vertex_row} not in table domain")
        return float(self.values[i])


def exact_green(graph: ClusterGraph, domain, source) -> GreenTable:
    """Expected time indices at each domain vertex before exit, from source."""
    kernel = build_killed_kernel(graph, domain, "blind")
    _require_escape(graph, kernel.domain)
    src = graph.resolve(source)
    s = kernel.position[src]
    if s < 0:
        raise InputError("source must lie in the domain")
    b = np.zeros(kernel.size)
    b[s] = 1.0
    g = _solve_system(_identity_minus(kernel.matrix), b)
    return GreenTable(kernel.domain, g, "exact", src, graph.graph_hash())


def exact_exit_time(graph: ClusterGraph, domain) -> tuple[np.ndarray, np.ndarray]:
    """(domain rows, E_x[exit time of domain]) for every domain vertex x."""
    kernel = build_killed_kernel(graph, domain, "blind")
    _require_escape(graph, kernel.domain)
    u = _solve_system(_identity_minus(kernel.matrix), np.ones(kernel.size))
    return kernel.domain, u


def exact_hit_prob(graph: ClusterGraph, domain, z) -> tuple[np.ndarray, np.ndarray]:
    """(domain rows, P_x(hit z strictly before exiting domain)) with h[z] = 1.

    Because the blind kernel's self-loop cancels from both sides of the
    harmonicity equation, h restricted to domain \\ {z} satisfies the
    degree-normalized mean-value property with value 0 outside the domain.
    """
    kernel = build_killed_kernel(graph, domain, "blind")
    zi = graph.resolve(z)
    zslot = kernel.position[zi]
    if zslot < 0:
        raise InputError("target z must lie in the domain")
    m = kernel.size
    if m == 1:
        return kernel.domain, np.ones(1)
    keep = np.arange(m) != zslot
    _require_escape(graph, kernel.domain[keep])
    Q = kernel.matrix
    Qkk = Q[keep][:, keep]
    qz = np.asarray(Q[keep][:, zslot].todense()).ravel()
    h_rest = _solve_system(_identity_minus(Qkk.tocsr()), qz)
    h = np.empty(m)
    h[keep] = h_rest
    h[zslot] = 1.0
    return kernel.domain, h


@dataclass
class DirichletSolution:
    interior: np.ndarray
    values: np.ndarray

    def value_at(self, vertex_row: int) -> float:
        i = np.searchsorted(self.interior, vertex_row)
        if i >= self.interior.size or self.interior[i] != vertex_row:
            raise InputError(f"vertex {vertex_row} not interior")
        return float(self.values[i])


def solve_dirichlet(graph: ClusterGraph, interior, boundary_data: dict) -> DirichletSolution:
    """Discrete harmonic extension: h(x) = mean of h over open neighbors.

    boundary_data maps vertex rows to values; every neighbor of an interior
    vertex must be interior or carry data, and every interior component
    must touch the boundary (otherwise the problem is underdetermined).
    """
    inter = _check_domain(graph, interior)
    m = inter.size
    bd_rows = np.array(sorted(int(k) for k in boundary_data), dtype=np.int64)
    if np.intersect1d(inter, bd_rows).size:
        raise InputError("interior and boundary overlap")
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[inter] = np.arange(m)
    is_bd = np.zeros(graph.n_vertices, dtype=bool)
    is_bd[bd_rows] = True
    bd_val = np.zeros(graph.n_vertices)
    for k, v in boundary_data.items():
        bd_val[int(k)] = float(v)

    nbr = graph.nbr_by_dir[inter]
    open_slot = nbr >= 0
    safe = np.where(open_slot, nbr, 0)
    uncovered = open_slot & (pos[safe] < 0) & ~is_bd[safe]
    if uncovered.any():
        raise InputError("an interior vertex has a neighbor with no value")
    deg = graph.degree[inter].astype(np.float64)
    if np.any(deg == 0):
        raise InputError("isolated interior vertex")

    inner = open_slot & (pos[safe] >= 0)
    rows = np.repeat(np.arange(m), nbr.shape[1])[inner.ravel()]
    cols = pos[safe.ravel()[inner.ravel()]]
    A = csr_matrix((-np.ones(rows.shape[0]), (rows, cols)), shape=(m, m))
    A = (A + csr_matrix((deg, (np.arange(m), np.arange(m))), shape=(m, m))).tocsr()
    on_bd = open_slot & is_bd[safe]
    rhs = np.zeros(m)
    np.add.at(rhs, np.repeat(np.arange(m), nbr.shape[1])[on_bd.ravel()],
              bd_val[safe.ravel()[on_bd.ravel()]])

    # every interior component must reach a vertex with boundary contact
    seeds = np.flatnonzero(on_bd.any(axis=1))
    seen = np.zeros(m, dtype=bool)
    seen[seeds] = True
    stack = list(seeds)
    while stack:
        u = stack.pop()
        for v in nbr[u]:
            if v >= 0 and pos[v] >= 0 and not seen[pos[v]]:
                seen[pos[v]] = True
                stack.append(pos[v])
    if not seen.all():
        raise InputError("an interior component never touches the boundary")

    h = _solve_system(A, rhs)
    resid = np.max(np.abs(A @ h - rhs))
    if resid > _RESIDUAL_TOL * max(1.0, np.max(np.abs(h))):
        raise SolverError(f"Dirichlet residual {resid:.3e} too large")
    return DirichletSolution(inter, h)


def exact_escape_probability(graph: ClusterGraph, x, r: int) -> float:
    """P_x(simple walk reaches graph distance r before returning to x), exact."""
    from .lattice import distances_from

    xi = graph.resolve(x)
    if r < 1:
        raise InputError("r must be >= 1")
    dist = distances_from(graph, xi, limit=r)
    sphere = np.flatnonzero(dist == r)
    if sphere.size == 0:
        raise InputError(f"no vertices at graph distance {r} from x")
    interior = np.flatnonzero((dist > 0) & (dist < r))
    data = {int(v): 1.0 for v in sphere}
    data[xi] = 0.0
    if interior.size == 0:
        # every neighbor of x sits on the sphere already
        phi_at = {int(v): 1.0 for v in sphere}
    else:
        sol = solve_dirichlet(graph, interior, data)
        phi_at = {int(v): sol.values[i] for i, v in enumerate(sol.interior)}
        phi_at.update({int(v): 1.0 for v in sphere})
    nbrs = graph.neighbors(xi)
    return float(np.mean([phi_at[int(v)] for v in nbrs]))


@dataclass
class HeatKernelTable:
    """P_x(X_t = y) for t = 0..t_max over a finite vertex set."""

    start: int
    kind: str
    killed: bool
    domain: np.ndarray
    probs: np.ndarray    # (t_max + 1, |domain|)


def heat_kernel_powers(
    graph: ClusterGraph,
    x,
    t_max: int,
    domain=None,
    kind: str = "blind",
) -> HeatKernelTable:
    """Distribution of the walk at each time up to t_max.

    With domain=None the evolution runs unkilled on the whole finite graph
    (rows are stochastic, mass is conserved); with a domain it is killed
    outside, flagged by `killed`.
    """
    if t_max < 0:
        raise InputError("t_max must be >= 0")
    killed = domain is not None
    dom = domain if killed else np.arange(graph.n_vertices)
    kernel = build_killed_kernel(graph, dom, kind)
    if (t_max + 1) * kernel.size > _POWER_BUDGET:
        raise ResourceError(
            f"heat kernel table would hold {(t_max + 1) * kernel.size:.2e} floats"
        )
    xi = graph.resolve(x)
    slot = kernel.position[xi]
    if slot < 0:
        raise InputError("start vertex outside the domain")
    QT = kernel.matrix.T.tocsr()
    probs = np.zeros((t_max + 1, kernel.size))
    p = np.zeros(kernel.size)
    p[slot] = 1.0
    probs[0] = p
    for t in range(1, t_max + 1):
        p = QT @ p
        probs[t] = p
    return HeatKernelTable(xi, kind, killed, kernel.domain, probs)


def write_value_csv(
    graph: ClusterGraph,
    domain: np.ndarray,
    values: np.ndarray,
    path,
    quantity: str,
    kind: str,
    domain_desc: str = "",
    source=None,
    stderr: np.ndarray | None = None,
) -> None:
    """CSV table of per-vertex values with graph/domain provenance header."""
    cols = [f"x{i}" for i in range(graph.dim)] + ["value"]
    if stderr is not None:
        cols.append("stderr")
    src = "" if source is None else tuple(int(c) for c in graph.coords[source])
    lines = [
        "# idlalab value-table v1",
        f"# graph_hash={graph.graph_hash()}",
        f"# quantity={quantity} kind={kind} source={src} domain={domain_desc}",
        ",".join(cols),
    ]
    for i, v in enumerate(domain):
        row = [str(int(c)) for c in graph.coords[v]] + [repr(float(values[i]))]
        if stderr is not None:
            row.append(repr(float(stderr[i])))
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
