import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from iteralign.matching import (InfeasibleMatchingError, Matching, SparseDistanceMatrix,
                                brute_force_match, euclidean, fast_match, optimal_match,
                                pairwise_distances, sparsify_rows)


def test_distance_examples():
    assert pairwise_distances(np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]]))[0, 0] == 5.0
    x = np.array([[0.25, 0.5]])
    assert pairwise_distances(x, x)[0, 0] == 0.0
    np.testing.assert_allclose(pairwise_distances(np.eye(2), np.eye(2)),
                               [[0, math.sqrt(2)], [math.sqrt(2), 0]])


def test_distance_selection_and_errors():
    hs = np.arange(12, dtype=float).reshape(4, 3)
    d = pairwise_distances(hs, hs, candidates=[3, 0], pool=[1])
    np.testing.assert_allclose(d, cdist(hs[[3, 0]], hs[[1]]))
    with pytest.raises(ValueError, match="dimension"):
        pairwise_distances(np.ones((2, 2)), np.ones((2, 3)))
    with pytest.raises(ValueError, match="non-empty"):
        pairwise_distances(hs, hs, candidates=[])


def test_gemm_path_matches_cdist(rng):
    a = rng.random((300, 80)).astype(np.float32)
    b = np.vstack([a[:50], rng.random((70, 80)).astype(np.float32)])
    got = euclidean(a, b)
    np.testing.assert_allclose(got, cdist(a.astype(float), b.astype(float)), atol=1e-9)
    # Identical rows come out at exactly zero.
    assert (got[np.arange(50), np.arange(50)] == 0).all()


def test_sparsify_examples():
    s = sparsify_rows(np.array([[0.1, 0.5, 0.2, 0.9]]), 1)
    assert s.indices.tolist() == [0, 2]
    np.testing.assert_allclose(s.data, [0.1, 0.2])
    s = sparsify_rows(np.array([[1.0, 1.0, 1.0, 1.0]]), 1)
    assert s.indices.tolist() == [0, 1]
    s = sparsify_rows(np.array([[3.0, 1.0]]), 5)
    assert s.indices.tolist() == [1, 0]


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 8), m=st.integers(1, 12), k=st.integers(1, 7), seed=st.integers(0, 999))
def test_sparsify_matches_stable_sort(n, m, k, seed):
    rng = np.random.default_rng(seed)
    d = rng.integers(0, 4, size=(n, m)).astype(float)
    s = sparsify_rows(d, k)
    width = min(2 * k, m)
    expected = np.argsort(d, axis=1, kind="stable")[:, :width]
    assert s.indices.reshape(n, width).tolist() == expected.tolist()
    np.testing.assert_array_equal(s.toarray()[np.arange(n)[:, None], expected],
                                  np.take_along_axis(d, expected, axis=1))


def test_optimal_examples():
    d = np.array([[1.0, 2.0], [2.0, 1.0]])
    m = optimal_match(d, 2)
    assert m.pairs() == [(0, 0, 1.0), (1, 1, 1.0)] and m.total == 2.0
    assert [p[:2] for p in optimal_match(d, 1).pairs()] == [(0, 0)]
    assert optimal_match(np.array([[0.0]]), 1).pairs() == [(0, 0, 0.0)]
    assert len(optimal_match(d, 0)) == 0


def test_optimal_prefers_global_over_greedy():
    # Greedy would take (0, 0) at 1 and be forced into (1, 1) at 10.
    d = np.array([[1.0, 2.0], [2.0, 10.0]])
    assert optimal_match(d, 2).total == 4.0


def test_optimal_rectangular_full_matches_lsa(rng):
    for _ in range(50):
        n, m = rng.integers(1, 30, size=2)
        d = rng.random((n, m))
        r, c = linear_sum_assignment(d)
        assert optimal_match(d, min(n, m)).total == pytest.approx(d[r, c].sum(), abs=1e-9)


def _instance(rng, kind, n, m):
    if kind == "int":
        return rng.integers(0, 10, size=(n, m)).astype(float)
    d = rng.random((n, m))
    if kind == "sparse":
        d[rng.random((n, m)) < 0.4] = np.inf
    return d


@pytest.mark.parametrize("kind", ["int", "float", "sparse"])
def test_optimal_matches_brute_force(kind, rng):
    for _ in range(150):
        n, m = (int(x) for x in rng.integers(1, 7, size=2))
        d = _instance(rng, kind, n, m)
        for k in range(min(n, m) + 1):
            try:
                expected = brute_force_match(d, k)
            except InfeasibleMatchingError:
                with pytest.raises(InfeasibleMatchingError):
                    optimal_match(d, k)
                continue
            got = optimal_match(d, k)
            assert len(got) == k
            assert got.total == pytest.approx(expected.total, abs=1e-9)


def test_infeasible_carries_partial():
    d = np.array([[1.0, np.inf], [2.0, np.inf]])
    with pytest.raises(InfeasibleMatchingError) as info:
        optimal_match(d, 2)
    assert info.value.requested == 2
    assert info.value.partial.pairs() == [(0, 0, 1.0)]


def test_sparsified_exact_when_width_covers_pool(rng):
    for _ in range(30):
        n, m = rng.integers(2, 15, size=2)
        k = int(rng.integers(1, min(n, m) + 1))
        d = rng.random((n, m))
        width_k = max(k, (m + 1) // 2)
        assert optimal_match(sparsify_rows(d, width_k), k).total == pytest.approx(
            optimal_match(d, k).total, abs=1e-9)


def test_sparsified_is_an_upper_bound(rng):
    for _ in range(30):
        d = rng.random((20, 20))
        k = int(rng.integers(1, 10))
        try:
            sparse_total = optimal_match(sparsify_rows(d, k), k).total
        except InfeasibleMatchingError:
            continue
        assert sparse_total >= optimal_match(d, k).total - 1e-12


def test_sparse_matrix_rejects_nonfinite():
    s = SparseDistanceMatrix.from_dense(np.array([[1.0]]))
    s.data[0] = np.nan
    with pytest.raises(ValueError):
        optimal_match(s, 1)


def test_negative_costs_are_shifted():
    d = np.array([[-3.0, 0.0], [0.0, -1.0]])
    assert optimal_match(d, 2).total == -4.0


def test_brute_force_limits():
    assert len(brute_force_match(np.ones((3, 3)), 0)) == 0
    with pytest.raises(ValueError, match="limited"):
        brute_force_match(np.ones((11, 2)), 1)
    with pytest.raises(InfeasibleMatchingError):
        brute_force_match(np.ones((2, 3)), 3)


def test_brute_force_tie_break_lexicographic():
    d = np.zeros((2, 2))
    assert brute_force_match(d, 1).pairs() == [(0, 0, 0.0)]
    assert [p[:2] for p in brute_force_match(d, 2).pairs()] == [(0, 0), (1, 1)]


def test_fast_examples():
    hs = np.array([[0.0], [10.0]])
    ht = np.array([[0.1], [9.0]])
    m = fast_match(hs, ht, [0, 1], [0, 1], 2)
    assert [p[:2] for p in m.pairs()] == [(0, 0), (1, 1)]
    np.testing.assert_allclose(m.distances, [0.1, 1.0])


def test_fast_deduplicates_targets():
    hs = np.array([[0.0], [0.2], [5.0]])
    ht = np.array([[0.1], [100.0]])
    m = fast_match(hs, ht, [0, 1, 2], [0, 1], 3)
    # Sources 0 and 1 both propose target 0; source 0 is nearer in a tie, and
    # source 2 also proposes target 0 but is much further.
    assert [p[:2] for p in m.pairs()] == [(0, 0)]


def test_fast_tie_break_lowest_indices():
    hs = np.zeros((3, 2))
    ht = np.zeros((8, 2))
    m = fast_match(hs, ht, [0, 1, 2], np.arange(8), 3)
    assert [p[:2] for p in m.pairs()] == [(0, 0)]
    hs = np.zeros((2, 40))
    ht = np.zeros((3, 40))
    assert [p[:2] for p in fast_match(hs, ht, [0, 1], [0, 1, 2], 2).pairs()] == [(0, 0)]


def test_fast_returns_node_ids():
    hs = np.array([[9.0], [0.0], [1.0]])
    ht = np.array([[5.0], [1.0], [0.0]])
    m = fast_match(hs, ht, [2, 1], [2, 1], 1)
    assert [p[:2] for p in m.pairs()] == [(1, 2)]


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 25), m=st.integers(1, 25), dim=st.sampled_from([2, 8, 40]),
       seed=st.integers(0, 9999))
def test_fast_never_beats_optimal(n, m, dim, seed):
    rng = np.random.default_rng(seed)
    hs, ht = rng.random((n, dim)), rng.random((m, dim))
    fast = fast_match(hs, ht, np.arange(n), np.arange(m), min(n, m))
    k = len(fast)
    opt = optimal_match(pairwise_distances(hs, ht), k)
    assert fast.total >= opt.total - 1e-9
    assert len(set(fast.targets.tolist())) == k


def test_matching_invariants():
    with pytest.raises(ValueError, match="one-to-one"):
        Matching.from_pairs([(0, 1, 0.0), (0, 2, 0.0)])
    m = Matching.from_pairs([(2, 0, 1.0), (1, 3, 2.0)])
    assert m.pairs() == [(1, 3, 2.0), (2, 0, 1.0)]
    assert m.remap(np.array([10, 11, 12]), np.array([5, 6, 7, 8])).pairs() == [
        (11, 8, 2.0), (12, 5, 1.0)]
