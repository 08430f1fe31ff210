import math

import numpy as np
import pytest

from idlalab import (
    ConditioningFailed,
    ConstructionError,
    InputError,
    PercolationConfig,
    ball_vertices,
    box_vertices,
    build_counterexample,
    chemical_ratio_scan,
    counterexample_metadata,
    density_profile,
    distances_from,
    extract_cluster,
    full_lattice,
    graph_distance,
    load_graph,
    sample_percolation,
    save_graph,
)
from idlalab import _kernels


def test_config_validation():
    with pytest.raises(InputError):
        PercolationConfig(1, 0.5, 10, 0)
    with pytest.raises(InputError):
        PercolationConfig(2, 0.0, 10, 0)
    with pytest.raises(InputError):
        PercolationConfig(2, 1.5, 10, 0)
    with pytest.raises(InputError):
        PercolationConfig(2, 0.5, 0, 0)


def test_full_lattice_counts_and_degrees():
    g = full_lattice(2, 3)
    assert g.n_vertices == 49
    assert int(g.degree[g.origin_index]) == 4
    corner = g.resolve((3, 3))
    assert int(g.degree[corner]) == 2
    g3 = full_lattice(3, 2)
    assert g3.n_vertices == 125
    assert int(g3.degree[g3.origin_index]) == 6


def test_percolation_p_one_is_full_box():
    cfg = PercolationConfig(2, 1.0, 4, 9)
    sample = sample_percolation(cfg)
    assert sample.n_open == sample.n_edges
    g = extract_cluster(cfg)
    assert g.n_vertices == 81


def test_open_fraction_matches_p():
    cfg = PercolationConfig(2, 0.7, 40, 123)
    sample = sample_percolation(cfg)
    n = sample.n_edges
    sigma = math.sqrt(0.7 * 0.3 / n)
    assert abs(sample.open_fraction - 0.7) <= 3 * sigma


def test_monotone_coupling_in_p():
    lo = sample_percolation(PercolationConfig(2, 0.55, 20, 5))
    hi = sample_percolation(PercolationConfig(2, 0.8, 20, 5))
    assert not np.any(lo.open_edges & ~hi.open_edges)
    assert hi.n_open > lo.n_open


def test_subcritical_conditioning_fails():
    with pytest.raises(ConditioningFailed) as err:
        extract_cluster(PercolationConfig(2, 0.3, 12, 1), max_retries=3)
    assert err.value.attempts == 4


def test_strict_policy_single_attempt():
    # strict never resamples: either the first draw works or it raises
    cfg = PercolationConfig(2, 0.3, 12, 1)
    with pytest.raises(ConditioningFailed) as err:
        extract_cluster(cfg, policy="strict")
    assert err.value.attempts == 1


def test_supercritical_cluster_is_large_and_connected():
    g = extract_cluster(PercolationConfig(2, 0.7, 20, 11))
    box_sites = 41 * 41
    assert g.n_vertices >= box_sites // 2
    dist = distances_from(g, g.origin_index)
    assert np.all(dist >= 0)


def test_cluster_source_records_attempts():
    g = extract_cluster(PercolationConfig(2, 0.8, 10, 2))
    src = g.source
    assert src["kind"] == "percolation"
    assert src["p"] == 0.8
    assert src["attempts"] >= 1


def test_ball_and_box_counts():
    g = full_lattice(2, 6)
    assert ball_vertices(g, (0, 0), 1.2).size == 5
    assert ball_vertices(g, (0, 0), 2.0).size == 9
    assert box_vertices(g, (0, 0), 2.0).size == 9
    assert ball_vertices(g, (0, 0), 0.0).size == 0
    # strict inequality: radius just under sqrt(2) excludes the diagonal
    assert ball_vertices(g, (0, 0), 1.414213).size == 5
    # integer radius: vertices at exactly distance 1 are inside radius 1? no
    assert ball_vertices(g, (0, 0), 1.0).size == 1


def test_ball_box_sandwich():
    g = full_lattice(2, 8)
    for r in (2.0, 3.5, 5.0):
        ball = set(ball_vertices(g, (0, 0), r).tolist())
        box = set(box_vertices(g, (0, 0), r).tolist())
        outer = set(ball_vertices(g, (0, 0), r * math.sqrt(2) + 1e-9).tolist())
        assert ball <= box <= outer


def test_graph_distance_is_l1_on_full_lattice():
    g = full_lattice(2, 8)
    assert graph_distance(g, (0, 0), (3, -2)) == 5
    assert graph_distance(g, (1, 1), (1, 1)) == 0
    g3 = full_lattice(3, 3)
    assert graph_distance(g3, (0, 0, 0), (1, 2, 3)) == 6


def test_density_profile_monotone_to_one():
    g = full_lattice(2, 30)
    prof = density_profile(g, (0, 0), [2, 5, 10, 20], kind="box")
    assert np.all(np.diff(prof.densities) >= 0)
    assert prof.densities[-1] <= 1.0
    assert prof.densities[-1] > 0.9
    prof_ball = density_profile(g, (0, 0), [5, 10, 20], kind="ball")
    assert prof_ball.densities[-1] > 0.9
    with pytest.raises(InputError):
        density_profile(g, (0, 0), [], kind="box")
    with pytest.raises(InputError):
        density_profile(g, (0, 0), [2], kind="torus")


def test_density_lower_on_cluster(cluster_small):
    g = cluster_small
    full = full_lattice(2, 20)
    # over the whole box the cluster misses at least a few sites
    p_cl = density_profile(g, (0, 0), [8, 20.5], kind="box").densities
    p_full = density_profile(full, (0, 0), [8, 20.5], kind="box").densities
    assert p_cl[0] <= p_full[0]
    assert p_cl[1] < p_full[1] <= 1.0


def test_chemical_ratio_full_lattice_bounded():
    g = full_lattice(2, 12)
    scan = chemical_ratio_scan(g, 10.0, 50, 3.0, master_seed=4)
    # chemical distance is the l1 distance here, at most sqrt(2) times l2
    assert scan.max_ratio <= math.sqrt(2) + 1e-12
    assert np.all(scan.chemical >= scan.euclidean - 1e-12)


def test_chemical_ratio_cluster_at_least_one(cluster_small):
    scan = chemical_ratio_scan(cluster_small, 12.0, 30, 4.0, master_seed=4)
    assert scan.max_ratio >= 1.0
    assert np.all(np.isfinite(scan.chemical))


def test_graph_hash_distinguishes(cluster_small):
    a = full_lattice(2, 5)
    b = full_lattice(2, 6)
    assert a.graph_hash() != b.graph_hash()
    assert a.graph_hash() == full_lattice(2, 5).graph_hash()
    assert cluster_small.graph_hash() != a.graph_hash()


def test_save_load_round_trip(tmp_path, cluster_small):
    path = tmp_path / "graph.txt"
    save_graph(cluster_small, path)
    g2 = load_graph(path)
    assert np.array_equal(g2.coords, cluster_small.coords)
    assert np.array_equal(g2.nbr_by_dir, cluster_small.nbr_by_dir)
    assert g2.origin_index == cluster_small.origin_index
    assert g2.graph_hash() == cluster_small.graph_hash()


def test_neighbor_tables_consistent(cluster_small):
    g = cluster_small
    # packed table agrees with the by-direction table
    for v in (g.origin_index, 0, g.n_vertices - 1):
        by_dir = set(int(x) for x in g.nbr_by_dir[v] if x >= 0)
        packed = set(int(x) for x in g.neighbors(v))
        assert by_dir == packed
        assert len(packed) == int(g.degree[v])
    # adjacency is symmetric
    rows = np.repeat(np.arange(g.n_vertices), 2 * g.dim)
    cols = g.nbr_by_dir.ravel()
    ok = cols >= 0
    pairs = set(zip(rows[ok].tolist(), cols[ok].tolist()))
    assert all((b, a) in pairs for a, b in pairs)


def test_counterexample_single_scale():
    g = build_counterexample(16, 1)
    assert g.dim == 3
    assert g.half_width == 40
    balls = counterexample_metadata(g)
    assert len(balls) == 1
    b = balls[0]
    assert b.center == (16, 0, 0)
    assert abs(b.radius - 16**0.9) < 1e-12
    # exactly one edge crosses the sealed boundary, and v_prime is inside
    assert np.linalg.norm(np.array(b.v_prime) - np.array(b.center)) < b.radius
    assert np.linalg.norm(np.array(b.outside_end) - np.array(b.center)) >= b.radius
    # whole box is still connected
    dist = distances_from(g, g.origin_index)
    assert np.all(dist >= 0)


def test_counterexample_removing_bridge_disconnects():
    g = build_counterexample(8, 1)
    b = counterexample_metadata(g)[0]
    vp = g.resolve(b.v_prime)
    out = g.resolve(b.outside_end)
    nbr = g.nbr_by_dir.copy()
    nbr[vp][nbr[vp] == out] = -1
    nbr[out][nbr[out] == vp] = -1
    dist = _kernels.bfs_distances(nbr, g.origin_index, 2**31 - 1)
    assert dist[vp] == -1
    ball_rows = b.ball_rows
    assert np.all(dist[ball_rows] == -1)


def test_counterexample_two_scales_disjoint():
    g = build_counterexample(16, 2)
    balls = counterexample_metadata(g)
    assert len(balls) == 2
    c0, c1 = (np.array(b.center, dtype=float) for b in balls)
    assert balls[0].center == (16, 0, 0)
    assert balls[1].center == (0, 32, 0)
    gap = np.linalg.norm(c1 - c0) - balls[0].radius - balls[1].radius
    assert gap > 1.0
    assert set(balls[0].ball_rows).isdisjoint(balls[1].ball_rows)


def test_counterexample_overlap_rejected():
    # at base radius 8 the first two sealed balls would collide
    with pytest.raises(ConstructionError):
        build_counterexample(8, 2)
    with pytest.raises(InputError):
        build_counterexample(4, 1)


def test_resolve_and_index_of(cluster_small):
    g = cluster_small
    row = g.origin_index
    assert g.resolve(row) == row
    assert g.resolve((0, 0)) == row
    assert g.index_of((999, 999)) == -1
    with pytest.raises(InputError):
        g.resolve((999, 999))
    with pytest.raises(InputError):
        g.resolve(10**9)
