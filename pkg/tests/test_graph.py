import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tvssl.errors import DegenerateScaleError, DimensionError, InvalidParameterError
from tvssl.graph import (
    SimilarityGraph,
    build_knn_graph,
    dirichlet_energy,
    graph_tv,
    laplacian_apply,
    load_edge_list,
    save_edge_list,
)
from tvssl.data_io import make_two_moons

from oracles import knn_union_pairs, ordered_pair_energy


def random_graph(n, seed, p=0.5):
    rng = np.random.default_rng(seed)
    ei, ej, w = [], [], []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                ei.append(i)
                ej.append(j)
                w.append(float(rng.uniform(0.1, 2.0)))
    if not ei:  # force at least one edge
        ei, ej, w = [0], [1], [1.0]
    return SimilarityGraph(n, np.array(ei), np.array(ej), np.array(w))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def test_two_points_fixed_sigma():
    sigma = 0.7
    data = np.array([[0.0, 0.0], [sigma, 0.0]])  # squared distance = sigma^2
    g = build_knn_graph(data, 1, sigma_mode="fixed", sigma=sigma)
    assert g.n_edges == 1
    assert g.weight(0, 1) == pytest.approx(np.exp(-1.0), abs=1e-15)
    assert g.weight(1, 0) == g.weight(0, 1)


def test_three_collinear_union_symmetrization():
    data = np.array([[0.0], [1.0], [2.0]])
    g = build_knn_graph(data, 1, sigma_mode="fixed", sigma=1.0)
    pairs = set(zip(g.edge_i.tolist(), g.edge_j.tolist()))
    assert pairs == {(0, 1), (1, 2)}


def test_knn_matches_bruteforce_two_moons():
    ds = make_two_moons(10, 0.05, seed=3)
    g = build_knn_graph(ds.data, 3)
    pairs = set(zip(g.edge_i.tolist(), g.edge_j.tolist()))
    assert pairs == knn_union_pairs(ds.data, 3)
    assert 10 <= g.n_edges <= 30


def test_degrees_recomputable_from_edges():
    g = random_graph(7, seed=1)
    deg = np.zeros(7)
    for i, j, w in zip(g.edge_i, g.edge_j, g.edge_w):
        deg[i] += w
        deg[j] += w
    assert np.allclose(g.degrees, deg, rtol=1e-14, atol=0)


def test_knn_k_out_of_range():
    data = np.random.default_rng(0).normal(size=(5, 2))
    with pytest.raises(InvalidParameterError):
        build_knn_graph(data, 5)
    with pytest.raises(InvalidParameterError):
        build_knn_graph(data, 0)


def test_duplicate_points_degenerate_scale():
    data = np.array([[1.0, 1.0], [1.0, 1.0], [3.0, 0.0]])
    with pytest.raises(DegenerateScaleError):
        build_knn_graph(data, 1, sigma_mode="self_tuning")


def test_fixed_mode_requires_sigma():
    data = np.random.default_rng(0).normal(size=(4, 2))
    with pytest.raises(InvalidParameterError):
        build_knn_graph(data, 2, sigma_mode="fixed")


def test_rejects_self_loops_and_nonpositive_weights():
    with pytest.raises(InvalidParameterError):
        SimilarityGraph(3, [0], [0], [1.0])
    with pytest.raises(InvalidParameterError):
        SimilarityGraph(3, [0], [1], [0.0])


# ---------------------------------------------------------------------------
# energies
# ---------------------------------------------------------------------------


def test_dirichlet_constant_is_zero():
    g = random_graph(6, seed=2)
    assert dirichlet_energy(g, np.full(6, 3.7)) == 0.0


def test_dirichlet_single_edge():
    g = SimilarityGraph(2, [0], [1], [2.0])
    assert dirichlet_energy(g, np.array([1.0, 0.0])) == pytest.approx(4.0)


def test_dirichlet_matches_double_sum():
    g = random_graph(5, seed=5)
    f = np.random.default_rng(5).normal(size=5)
    expect = ordered_pair_energy(g.edge_i, g.edge_j, g.edge_w, f, 2)
    assert dirichlet_energy(g, f) == pytest.approx(expect, rel=1e-12)


def test_tv_constant_is_zero():
    g = random_graph(6, seed=3)
    assert graph_tv(g, np.full(6, -1.25)) == 0.0


def test_tv_single_edge():
    g = SimilarityGraph(2, [0], [1], [3.0])
    assert graph_tv(g, np.array([1.0, -1.0])) == pytest.approx(12.0)


def test_tv_matches_double_sum():
    g = random_graph(6, seed=7)
    f = np.random.default_rng(7).normal(size=6)
    expect = ordered_pair_energy(g.edge_i, g.edge_j, g.edge_w, f, 1)
    assert graph_tv(g, f) == pytest.approx(expect, rel=1e-12)


def test_laplacian_constant_in_kernel():
    g = random_graph(5, seed=9)
    assert np.allclose(laplacian_apply(g, np.full(5, 2.0)), 0.0, atol=1e-14)


def test_laplacian_two_nodes():
    g = SimilarityGraph(2, [0], [1], [1.0])
    out = laplacian_apply(g, np.array([1.0, 0.0]))
    assert np.allclose(out, [1.0, -1.0])


def test_laplacian_matches_dense():
    g = random_graph(8, seed=11)
    f = np.random.default_rng(11).normal(size=8)
    L = g.laplacian().toarray()
    assert np.max(np.abs(laplacian_apply(g, f) - L @ f)) < 1e-12


def test_dirichlet_is_twice_laplacian_quadratic_form():
    for seed in range(5):
        g = random_graph(6, seed=seed)
        f = np.random.default_rng(seed).normal(size=6)
        lhs = dirichlet_energy(g, f)
        rhs = 2.0 * float(f @ laplacian_apply(g, f))
        assert lhs == pytest.approx(rhs, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(-5, 5, allow_nan=False),
    c=st.floats(-5, 5, allow_nan=False),
    seed=st.integers(0, 50),
)
def test_tv_homogeneity_and_shift(a, c, seed):
    g = random_graph(5, seed=seed)
    f = np.random.default_rng(seed).normal(size=5)
    base = graph_tv(g, f)
    assert graph_tv(g, a * f) == pytest.approx(abs(a) * base, rel=1e-9, abs=1e-9)
    assert graph_tv(g, f + c) == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_energies_invariant_under_node_permutation():
    g = random_graph(6, seed=13)
    f = np.random.default_rng(13).normal(size=6)
    perm = np.random.default_rng(14).permutation(6)
    inv = np.argsort(perm)
    g2 = SimilarityGraph(6, inv[g.edge_i], inv[g.edge_j], g.edge_w)
    f2 = np.empty(6)
    f2[inv] = f
    assert dirichlet_energy(g2, f2) == pytest.approx(dirichlet_energy(g, f), rel=1e-12)
    assert graph_tv(g2, f2) == pytest.approx(graph_tv(g, f), rel=1e-12)


def test_dimension_mismatch_errors():
    g = random_graph(4, seed=1)
    with pytest.raises(DimensionError):
        dirichlet_energy(g, np.zeros(5))
    with pytest.raises(DimensionError):
        graph_tv(g, np.zeros(3))
    with pytest.raises(DimensionError):
        laplacian_apply(g, np.zeros(6))


# ---------------------------------------------------------------------------
# edge-list round trip
# ---------------------------------------------------------------------------


def test_edge_list_round_trip(tmp_path):
    g = random_graph(9, seed=21)
    path = tmp_path / "graph.txt"
    save_edge_list(g, path)
    g2 = load_edge_list(path, n_nodes=9)
    assert g2.n_nodes == 9
    assert np.array_equal(g.edge_i, g2.edge_i)
    assert np.array_equal(g.edge_j, g2.edge_j)
    assert np.array_equal(g.edge_w, g2.edge_w)  # full-precision decimals


def test_edge_list_infers_node_count(tmp_path):
    g = SimilarityGraph(4, [0, 2], [1, 3], [0.5, 1.5])
    path = tmp_path / "g.txt"
    save_edge_list(g, path)
    assert load_edge_list(path).n_nodes == 4
