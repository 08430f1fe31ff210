"""Exact solver tests against closed forms and a rational elimination oracle."""

from fractions import Fraction

import numpy as np
import pytest

from idlalab import (
    InputError,
    ResourceError,
    ball_vertices,
    build_killed_kernel,
    exact_escape_probability,
    exact_exit_time,
    exact_green,
    exact_hit_prob,
    full_lattice,
    heat_kernel_powers,
    solve_dirichlet,
    write_value_csv,
)

from conftest import origin_slot


def _rational_blind_system(graph, domain):
    """(I - Q) for the blind kernel, entry by entry over Fractions."""
    dom = np.unique(np.asarray(domain, dtype=np.int64))
    pos = {int(v): i for i, v in enumerate(dom)}
    two_d = 2 * graph.dim
    m = dom.size
    A = [[Fraction(0)] * m for _ in range(m)]
    for i, v in enumerate(dom):
        A[i][i] = Fraction(int(graph.degree[v]), two_d)
        for w in graph.neighbors(int(v)):
            j = pos.get(int(w))
            if j is not None:
                A[i][j] -= Fraction(1, two_d)
    return dom, A


def _solve_fractions(A, b):
    """Gauss-Jordan elimination, exact arithmetic throughout."""
    n = len(b)
    M = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next(r for r in range(col, n) if M[r][col] != 0)
        M[col], M[piv] = M[piv], M[col]
        inv = Fraction(1) / M[col][col]
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _oracle_domains(cluster_small):
    g2 = full_lattice(2, 8)
    g3 = full_lattice(3, 4)
    return [
        (g2, ball_vertices(g2, (0, 0), 1.2), (0, 0)),      # the 5-vertex plus
        (g2, ball_vertices(g2, (0, 0), 2.0), (0, 0)),
        (g2, ball_vertices(g2, (1, -1), 2.5), (1, -1)),    # off-center
        (g3, ball_vertices(g3, (0, 0, 0), 1.8), (0, 0, 0)),
        (cluster_small, ball_vertices(cluster_small, (0, 0), 2.5), (0, 0)),
    ]


# ---------------------------------------------------------------- closed forms

def test_plus_green_closed_forms(plus):
    graph, dom = plus
    tab = exact_green(graph, dom, (0, 0))
    assert abs(tab.value_at(graph.index_of((0, 0))) - 4 / 3) <= 1e-12
    for arm in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        assert abs(tab.value_at(graph.index_of(arm)) - 1 / 3) <= 1e-12
    assert tab.kind == "exact"
    assert tab.graph_hash == graph.graph_hash()


def test_plus_exit_times(plus):
    graph, dom = plus
    rows, u = exact_exit_time(graph, dom)
    assert abs(u[origin_slot(rows, graph.index_of((0, 0)))] - 8 / 3) <= 1e-12
    assert abs(u[origin_slot(rows, graph.index_of((0, 1)))] - 5 / 3) <= 1e-12


def test_plus_hit_prob(plus):
    graph, dom = plus
    rows, h = exact_hit_prob(graph, dom, (0, 0))
    assert h[origin_slot(rows, graph.index_of((0, 0)))] == 1.0
    for arm in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        assert abs(h[origin_slot(rows, graph.index_of(arm))] - 1 / 4) <= 1e-12


# ------------------------------------------------------- vs rational elimination

def test_green_matches_rational_elimination(cluster_small):
    for graph, dom, src in _oracle_domains(cluster_small):
        rows, A = _rational_blind_system(graph, dom)
        s = origin_slot(rows, graph.index_of(src))
        b = [Fraction(0)] * rows.size
        b[s] = Fraction(1)
        want = _solve_fractions(A, b)
        tab = exact_green(graph, dom, src)
        assert np.array_equal(tab.domain, rows)
        for i in range(rows.size):
            assert abs(tab.values[i] - float(want[i])) <= 1e-12


def test_exit_time_matches_rational_elimination(cluster_small):
    for graph, dom, _ in _oracle_domains(cluster_small):
        rows, A = _rational_blind_system(graph, dom)
        want = _solve_fractions(A, [Fraction(1)] * rows.size)
        got_rows, u = exact_exit_time(graph, dom)
        assert np.array_equal(got_rows, rows)
        for i in range(rows.size):
            assert abs(u[i] - float(want[i])) <= 1e-12


# ------------------------------------------------------------------- identities

def test_green_is_symmetric(cluster_small):
    dom = ball_vertices(cluster_small, (0, 0), 2.5)
    pairs = [((0, 0), (1, 1)), ((0, 1), (-1, 0)), ((0, 0), (2, 0))]
    for a, b in pairs:
        ta = exact_green(cluster_small, dom, a)
        tb = exact_green(cluster_small, dom, b)
        va = ta.value_at(cluster_small.index_of(b))
        vb = tb.value_at(cluster_small.index_of(a))
        assert abs(va - vb) <= 1e-12


def test_green_sums_to_exit_time(cluster_small):
    # summing expected visits over the whole domain counts every step once
    dom = ball_vertices(cluster_small, (0, 0), 3.0)
    rows, u = exact_exit_time(cluster_small, dom)
    for src in [(0, 0), (1, -1)]:
        tab = exact_green(cluster_small, dom, src)
        s = origin_slot(rows, cluster_small.index_of(src))
        assert abs(tab.values.sum() - u[s]) <= 1e-10


def test_hit_prob_is_green_ratio(cluster_small):
    dom = ball_vertices(cluster_small, (0, 0), 3.0)
    z = (1, 1)
    tab = exact_green(cluster_small, dom, z)
    gzz = tab.value_at(cluster_small.index_of(z))
    rows, h = exact_hit_prob(cluster_small, dom, z)
    for i, v in enumerate(rows):
        assert abs(h[i] - tab.values[i] / gzz) <= 1e-10


def test_hit_prob_bounds_and_membership(lattice2d):
    dom = ball_vertices(lattice2d, (0, 0), 4.0)
    rows, h = exact_hit_prob(lattice2d, dom, (1, 0))
    assert (h >= -1e-15).all() and (h <= 1 + 1e-15).all()
    with pytest.raises(InputError):
        exact_hit_prob(lattice2d, dom, (9, 9))
    with pytest.raises(InputError):
        exact_green(lattice2d, dom, (9, 9))


def test_hit_prob_on_whole_graph_is_one():
    # no exit means the finite walk hits z eventually, so h = 1 everywhere
    g = full_lattice(2, 6)
    rows, h = exact_hit_prob(g, np.arange(g.n_vertices), (0, 0))
    assert np.max(np.abs(h - 1.0)) <= 1e-9


def test_singleton_domain_hit_prob(lattice2d):
    rows, h = exact_hit_prob(lattice2d, [lattice2d.index_of((2, 2))], (2, 2))
    assert rows.size == 1 and h[0] == 1.0


def test_no_exit_domain_rejected():
    g = full_lattice(2, 5)
    everything = np.arange(g.n_vertices)
    with pytest.raises(InputError):
        exact_green(g, everything, (0, 0))
    with pytest.raises(InputError):
        exact_exit_time(g, everything)


# ----------------------------------------------------------------- kernel shape

def test_blind_kernel_symmetric_with_unit_row_sums_inside(lattice2d):
    dom = ball_vertices(lattice2d, (0, 0), 4.0)
    kernel = build_killed_kernel(lattice2d, dom, "blind")
    gap = kernel.matrix - kernel.matrix.T
    assert abs(gap).max() <= 1e-15
    sums = np.asarray(kernel.matrix.sum(axis=1)).ravel()
    assert (sums <= 1 + 1e-15).all()
    inner = ball_vertices(lattice2d, (0, 0), 2.0)
    for v in inner:
        # all four neighbors stay inside, so no mass is killed here
        assert abs(sums[origin_slot(kernel.domain, v)] - 1.0) <= 1e-15


def test_simple_kernel_rows_stochastic_on_full_domain(cluster_small):
    kernel = build_killed_kernel(
        cluster_small, np.arange(cluster_small.n_vertices), "simple"
    )
    sums = np.asarray(kernel.matrix.sum(axis=1)).ravel()
    assert np.max(np.abs(sums - 1.0)) <= 1e-12
    assert kernel.matrix.diagonal().max() == 0.0


def test_kernel_input_errors(lattice2d):
    dom = ball_vertices(lattice2d, (0, 0), 2.0)
    with pytest.raises(InputError):
        build_killed_kernel(lattice2d, dom, "lazy")
    with pytest.raises(InputError):
        build_killed_kernel(lattice2d, np.array([], dtype=np.int64), "blind")
    with pytest.raises(InputError):
        build_killed_kernel(lattice2d, [lattice2d.n_vertices + 3], "blind")


# -------------------------------------------------------------------- dirichlet

def _ring_problem(graph, r_in, r_out):
    inner = ball_vertices(graph, (0, 0) if graph.dim == 2 else (0, 0, 0), r_in)
    outer = ball_vertices(graph, (0, 0) if graph.dim == 2 else (0, 0, 0), r_out)
    interior = np.setdiff1d(outer, inner)
    touched = set()
    for v in interior:
        for w in graph.neighbors(int(v)):
            if int(w) not in set(interior.tolist()):
                touched.add(int(w))
    return interior, sorted(touched)


def test_dirichlet_preserves_constants(lattice2d):
    interior, boundary = _ring_problem(lattice2d, 2.0, 5.0)
    sol = solve_dirichlet(lattice2d, interior, {v: 0.7 for v in boundary})
    assert np.max(np.abs(sol.values - 0.7)) <= 1e-12


def test_dirichlet_max_principle_and_harmonicity(lattice2d):
    interior, boundary = _ring_problem(lattice2d, 2.0, 5.0)
    rng = np.random.default_rng(5)
    data = {v: float(rng.uniform(-1, 1)) for v in boundary}
    sol = solve_dirichlet(lattice2d, interior, data)
    lo, hi = min(data.values()), max(data.values())
    assert (sol.values >= lo - 1e-12).all() and (sol.values <= hi + 1e-12).all()
    value = dict(zip(sol.interior.tolist(), sol.values.tolist()))
    value.update(data)
    for i, v in enumerate(sol.interior):
        nbrs = lattice2d.neighbors(int(v))
        mean = sum(value[int(w)] for w in nbrs) / len(nbrs)
        assert abs(sol.values[i] - mean) <= 1e-9


def test_dirichlet_is_linear(lattice2d):
    interior, boundary = _ring_problem(lattice2d, 2.0, 5.0)
    rng = np.random.default_rng(6)
    f = {v: float(rng.normal()) for v in boundary}
    g = {v: float(rng.normal()) for v in boundary}
    combo = {v: 2.0 * f[v] - 0.5 * g[v] for v in boundary}
    sf = solve_dirichlet(lattice2d, interior, f).values
    sg = solve_dirichlet(lattice2d, interior, g).values
    sc = solve_dirichlet(lattice2d, interior, combo).values
    assert np.max(np.abs(sc - (2.0 * sf - 0.5 * sg))) <= 1e-10


def test_dirichlet_ignores_dict_order(lattice2d):
    interior, boundary = _ring_problem(lattice2d, 2.0, 4.0)
    rng = np.random.default_rng(7)
    data = {v: float(rng.uniform(0, 1)) for v in boundary}
    flipped = dict(reversed(list(data.items())))
    a = solve_dirichlet(lattice2d, interior, data)
    b = solve_dirichlet(lattice2d, interior, flipped)
    assert np.array_equal(a.values, b.values)


def test_dirichlet_input_errors(lattice2d):
    interior, boundary = _ring_problem(lattice2d, 2.0, 4.0)
    data = {v: 1.0 for v in boundary}
    overlapping = dict(data)
    overlapping[int(interior[0])] = 0.0
    with pytest.raises(InputError):
        solve_dirichlet(lattice2d, interior, overlapping)
    with pytest.raises(InputError):
        solve_dirichlet(lattice2d, interior, {boundary[0]: 1.0})  # uncovered nbrs
    with pytest.raises(InputError):
        # no vertex carries data, so no component touches the boundary
        solve_dirichlet(lattice2d, np.arange(lattice2d.n_vertices), {})


# ----------------------------------------------------------- escape probability

def test_escape_probability_closed_forms():
    # at r=1 every neighbor already sits on the sphere
    g2 = full_lattice(2, 10)
    assert exact_escape_probability(g2, (0, 0), 1) == 1.0
    # at r=2 each neighbor of the start has one route back and 2d-1 outward
    assert abs(exact_escape_probability(g2, (0, 0), 2) - 3 / 4) <= 1e-12
    g3 = full_lattice(3, 5)
    assert abs(exact_escape_probability(g3, (0, 0, 0), 2) - 5 / 6) <= 1e-12


def test_escape_probability_monotone_in_radius(lattice2d):
    vals = [exact_escape_probability(lattice2d, (0, 0), r) for r in (1, 2, 3, 4)]
    for a, b in zip(vals, vals[1:]):
        assert b <= a + 1e-12
    assert vals[-1] > 0
    with pytest.raises(InputError):
        exact_escape_probability(lattice2d, (0, 0), 0)


# ------------------------------------------------------------------ heat kernel

def test_heat_kernel_first_step_quarters(lattice2d):
    tab = heat_kernel_powers(lattice2d, (0, 0), 1)
    assert not tab.killed
    t0 = tab.probs[0]
    assert t0.sum() == 1.0 and t0[origin_slot(tab.domain, tab.start)] == 1.0
    t1 = tab.probs[1]
    # interior degree equals 2d, so the blind walk never stays put here
    assert t1[origin_slot(tab.domain, tab.start)] == 0.0
    for nb in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        slot = origin_slot(tab.domain, lattice2d.index_of(nb))
        assert abs(t1[slot] - 0.25) <= 1e-15


def test_heat_kernel_mass_conserved_unkilled(cluster_small):
    for kind in ("blind", "simple"):
        tab = heat_kernel_powers(cluster_small, (0, 0), 12, kind=kind)
        mass = tab.probs.sum(axis=1)
        assert np.max(np.abs(mass - 1.0)) <= 1e-12
        assert tab.probs.min() >= 0.0


def test_heat_kernel_killed_mass_decreases(lattice2d):
    dom = ball_vertices(lattice2d, (0, 0), 2.0)
    tab = heat_kernel_powers(lattice2d, (0, 0), 10, domain=dom)
    assert tab.killed
    mass = tab.probs.sum(axis=1)
    assert (np.diff(mass) <= 1e-15).all()
    assert mass[2] < 1.0          # the boundary is reachable in two steps
    assert mass[10] < mass[2]


def test_heat_kernel_budget_and_inputs(lattice2d):
    with pytest.raises(ResourceError):
        heat_kernel_powers(lattice2d, (0, 0), 120000)
    dom = ball_vertices(lattice2d, (0, 0), 2.0)
    with pytest.raises(InputError):
        heat_kernel_powers(lattice2d, (5, 5), 3, domain=dom)
    with pytest.raises(InputError):
        heat_kernel_powers(lattice2d, (0, 0), -1)


# ------------------------------------------------------------------ value table

def test_value_csv_round_trip(tmp_path, plus):
    graph, dom = plus
    tab = exact_green(graph, dom, (0, 0))
    path = tmp_path / "green.csv"
    write_value_csv(graph, tab.domain, tab.values, path, "green", "exact",
                    domain_desc="ball r=1.2", source=tab.source)
    lines = path.read_text().splitlines()
    assert lines[0] == "# idlalab value-table v1"
    assert lines[1] == f"# graph_hash={graph.graph_hash()}"
    assert lines[3] == "x0,x1,value"
    for i, line in enumerate(lines[4:]):
        parts = line.split(",")
        assert graph.index_of(tuple(int(c) for c in parts[:2])) == tab.domain[i]
        assert float(parts[2]) == tab.values[i]   # repr round-trips exactly
