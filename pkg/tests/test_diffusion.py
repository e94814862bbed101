import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from iteralign.diffusion import (DiffusionConfig, DiffusionKind, DiffusionNumericError,
                                 IsolatedNodeError, build_diffusion_matrix, diffuse,
                                 init_features_anchored, init_features_identity)
from iteralign.graph import Graph, erdos_renyi

from graph_factory import path_graph, random_connected_graph

R2 = 1 / np.sqrt(2)


def dense_q(graph, kind):
    """Reference diffusion matrix from a dense adjacency."""
    a = graph.adjacency.toarray()
    d = a.sum(axis=1)
    if kind == "rw":
        return a / d[:, None]
    s = a / np.sqrt(np.outer(d, d))
    return s + np.eye(len(d)) if kind == "sym-selfloop" else s


def test_random_walk_path():
    q = build_diffusion_matrix(path_graph(3), "rw").toarray()
    np.testing.assert_allclose(q, [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]], rtol=1e-6)


def test_symmetric_path():
    q = build_diffusion_matrix(path_graph(3), DiffusionKind.SYMMETRIC).toarray()
    np.testing.assert_allclose(q, [[0, R2, 0], [R2, 0, R2], [0, R2, 0]], rtol=1e-6)


def test_self_loop_path():
    q = build_diffusion_matrix(path_graph(3), "sym-selfloop").toarray()
    np.testing.assert_allclose(q, [[1, R2, 0], [R2, 1, R2], [0, R2, 1]], rtol=1e-6)


@pytest.mark.parametrize("kind", ["rw", "sym", "sym-selfloop"])
def test_sparsity_pattern_and_symmetry(kind, rng):
    g = random_connected_graph(25, 0.15, rng)
    q = build_diffusion_matrix(g, kind)
    pattern = g.adjacency.toarray() != 0
    if kind == "sym-selfloop":
        pattern |= np.eye(g.node_count, dtype=bool)
    assert ((q.toarray() != 0) == pattern).all()
    if kind != "rw":
        np.testing.assert_allclose(q.toarray(), q.toarray().T, atol=1e-7)
    assert q.dtype == np.float32


def test_isolated_node_rejected():
    with pytest.raises(IsolatedNodeError, match="perturbation"):
        build_diffusion_matrix(Graph(3, [(0, 1)]), "sym")


def test_identity_init():
    np.testing.assert_array_equal(init_features_identity(path_graph(3)).toarray(), np.eye(3))
    np.testing.assert_array_equal(init_features_identity(Graph(1)).toarray(), [[1]])


def test_anchored_init_single_pair():
    hs, ht = init_features_anchored(path_graph(3), path_graph(4), [(1, 2)])
    assert hs.shape == (3, 1) and ht.shape == (4, 1)
    np.testing.assert_array_equal(hs.toarray().ravel(), [0, 1, 0])
    np.testing.assert_array_equal(ht.toarray().ravel(), [0, 0, 1, 0])


def test_anchored_init_shared_basis():
    g = path_graph(5)
    hs, ht = init_features_anchored(g, g, [(0, 0), (3, 3)])
    hs, ht = hs.toarray(), ht.toarray()
    assert hs.shape == (5, 2)
    np.testing.assert_array_equal(hs, ht)
    assert np.count_nonzero(hs.any(axis=1)) == 2
    np.testing.assert_array_equal(hs[[0, 3]], np.eye(2))


def test_anchored_init_errors():
    g = path_graph(3)
    with pytest.raises(ValueError, match="at least one anchor"):
        init_features_anchored(g, g, [])
    with pytest.raises(ValueError, match="out of range"):
        init_features_anchored(g, g, [(0, 5)])


def test_diffuse_one_step_path():
    q = build_diffusion_matrix(path_graph(3), "sym-selfloop")
    h = diffuse(q, init_features_identity(path_graph(3)), 1)
    np.testing.assert_allclose(h[0], [1, R2, 0], rtol=1e-6)


def test_diffuse_two_steps_path():
    q = build_diffusion_matrix(path_graph(3), "sym-selfloop")
    h = diffuse(q, init_features_identity(path_graph(3)), 2)
    # (Q^2) row 0 by hand: [1 + 1/2, 2/sqrt(2), 1/2].
    np.testing.assert_allclose(h[0], [1.5, np.sqrt(2), 0.5], rtol=1e-6)


@pytest.mark.parametrize("kind", ["rw", "sym", "sym-selfloop"])
def test_one_step_from_identity_is_q(kind, rng):
    g = random_connected_graph(12, 0.3, rng)
    q = build_diffusion_matrix(g, kind)
    np.testing.assert_array_equal(diffuse(q, init_features_identity(g), 1), q.toarray())


def test_dense_oracle_equivalence(rng):
    for _ in range(20):
        n = int(rng.integers(2, 51))
        g = random_connected_graph(n, float(rng.uniform(0.05, 0.4)), rng)
        steps = int(rng.integers(1, 11))
        for kind in ("rw", "sym", "sym-selfloop"):
            expected = np.linalg.matrix_power(dense_q(g, kind), steps)
            got = diffuse(build_diffusion_matrix(g, kind), init_features_identity(g), steps)
            np.testing.assert_allclose(got, expected, rtol=1e-4, atol=1e-4 * np.abs(expected).max())


def test_dense_and_sparse_h0_agree(rng):
    g = random_connected_graph(15, 0.3, rng)
    q = build_diffusion_matrix(g, "sym")
    h0 = rng.random((15, 4)).astype(np.float32)
    np.testing.assert_allclose(diffuse(q, h0, 3), diffuse(q, sp.csr_matrix(h0), 3), rtol=1e-6)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 30), seed=st.integers(0, 2**16), steps=st.integers(1, 8),
       kind=st.sampled_from(["rw", "sym", "sym-selfloop"]))
def test_permutation_equivariance(n, seed, steps, kind):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(n, 0.25, rng)
    perm = rng.permutation(n)
    h = diffuse(build_diffusion_matrix(g, kind), init_features_identity(g), steps)
    gp = g.permute(perm)
    # P H0 with H0 = I: row perm[i] holds e_i.
    p = np.zeros((n, n), dtype=np.float32)
    p[perm, np.arange(n)] = 1
    hp = diffuse(build_diffusion_matrix(gp, kind), p, steps)
    expected = np.empty_like(h)
    expected[perm] = h
    np.testing.assert_allclose(hp, expected, rtol=1e-5, atol=1e-5 * np.abs(h).max())


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**16), steps=st.integers(1, 12))
def test_random_walk_rows_sum_to_one(n, seed, steps):
    g = random_connected_graph(n, 0.2, np.random.default_rng(seed))
    h = diffuse(build_diffusion_matrix(g, "rw"), init_features_identity(g), steps)
    np.testing.assert_allclose(h.sum(axis=1), 1.0, atol=1e-5)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2**16), steps=st.integers(1, 30))
def test_symmetric_values_bounded(n, seed, steps):
    g = random_connected_graph(n, 0.2, np.random.default_rng(seed))
    h = diffuse(build_diffusion_matrix(g, "sym"), init_features_identity(g), steps)
    assert np.abs(h).max() <= 1 + 1e-5


def test_diffuse_errors():
    q = build_diffusion_matrix(path_graph(3), "sym")
    with pytest.raises(ValueError, match="mismatch"):
        diffuse(q, np.eye(4, dtype=np.float32), 2)
    with pytest.raises(ValueError):
        diffuse(q, np.eye(3, dtype=np.float32), 0)
    with pytest.raises(ValueError, match="square"):
        diffuse(sp.csr_matrix(np.ones((2, 3))), np.eye(3), 1)


def test_non_finite_reported_with_step():
    q = sp.csr_matrix(np.full((2, 2), 1e30, dtype=np.float32))
    with pytest.raises(DiffusionNumericError, match="step 2"):
        diffuse(q, np.eye(2, dtype=np.float32), 3)


def test_output_is_float32():
    g = erdos_renyi(10, 0.4, 0)
    h = diffuse(build_diffusion_matrix(g, "sym"), init_features_identity(g), 3)
    assert h.dtype == np.float32 and isinstance(h, np.ndarray)


def test_config_validation():
    assert DiffusionConfig().kind is DiffusionKind.SYMMETRIC_SELF_LOOP
    assert DiffusionConfig(kind="rw").kind is DiffusionKind.RANDOM_WALK
    with pytest.raises(ValueError):
        DiffusionConfig(steps=0)
    with pytest.raises(ValueError):
        DiffusionConfig(kind="heat")
