"""Cross-graph distances and size-K node matchings.

Two strategies are provided. :func:`optimal_match` solves the partial
rectangular assignment problem exactly on a row-sparsified distance matrix;
:func:`fast_match` pairs each source with its nearest target and keeps the
K closest pairs. :func:`brute_force_match` is an exhaustive reference used
by the tests.
"""

from __future__ import annotations

import functools
import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

# Above this dimension the KD-tree degrades; brute-force scans are used instead.
KDTREE_MAX_DIM = 30
_CHUNK_ROWS = 1024


class InfeasibleMatchingError(RuntimeError):
    """No one-to-one matching of the requested size exists among finite entries.

    ``partial`` holds the optimal matching of the largest feasible size.
    """

    def __init__(self, requested: int, partial: "Matching"):
        self.requested = requested
        self.partial = partial
        super().__init__(f"no matching of size {requested} exists; "
                         f"largest feasible size is {len(partial)}")


@dataclass(frozen=True)
class Matching:
    """One-to-one pairs ``(sources[i], targets[i])`` at ``distances[i]``."""

    sources: np.ndarray
    targets: np.ndarray
    distances: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.sources, dtype=np.int64).reshape(-1)
        t = np.asarray(self.targets, dtype=np.int64).reshape(-1)
        d = np.asarray(self.distances, dtype=np.float64).reshape(-1)
        if not (s.shape == t.shape == d.shape):
            raise ValueError("sources, targets and distances must have equal length")
        if len(np.unique(s)) != len(s) or len(np.unique(t)) != len(t):
            raise ValueError("matching is not one-to-one")
        order = np.lexsort((t, s))
        object.__setattr__(self, "sources", s[order])
        object.__setattr__(self, "targets", t[order])
        object.__setattr__(self, "distances", d[order])

    @classmethod
    def empty(cls) -> "Matching":
        z = np.zeros(0)
        return cls(z, z, z)

    @classmethod
    def from_pairs(cls, pairs) -> "Matching":
        pairs = list(pairs)
        if not pairs:
            return cls.empty()
        s, t, d = zip(*pairs)
        return cls(np.array(s), np.array(t), np.array(d))

    def __len__(self) -> int:
        return int(self.sources.shape[0])

    @property
    def total(self) -> float:
        return math.fsum(self.distances.tolist())

    def pairs(self) -> list[tuple[int, int, float]]:
        return list(zip(self.sources.tolist(), self.targets.tolist(),
                        self.distances.tolist()))

    def remap(self, source_ids, target_ids) -> "Matching":
        """Translate local row/column positions into node ids."""
        source_ids = np.asarray(source_ids)
        target_ids = np.asarray(target_ids)
        return Matching(source_ids[self.sources], target_ids[self.targets], self.distances)


@dataclass(frozen=True)
class SparseDistanceMatrix:
    """Row-sparse distances in CSR layout; absent entries are +inf.

    Candidates within a row are sorted by ascending distance, ties by
    ascending column.
    """

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple[int, int]

    @classmethod
    def from_dense(cls, d: np.ndarray) -> "SparseDistanceMatrix":
        """Keep every finite entry of ``d``."""
        d = np.asarray(d, dtype=np.float64)
        indptr = [0]
        indices, data = [], []
        for row in d:
            cols = np.flatnonzero(np.isfinite(row))
            cols = cols[np.argsort(row[cols], kind="stable")]
            indices.append(cols)
            data.append(row[cols])
            indptr.append(indptr[-1] + cols.size)
        return cls(np.asarray(indptr, dtype=np.int64),
                   np.concatenate(indices).astype(np.int64) if indices else np.zeros(0, np.int64),
                   np.concatenate(data) if data else np.zeros(0),
                   (int(d.shape[0]), int(d.shape[1])))

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def toarray(self) -> np.ndarray:
        out = np.full(self.shape, np.inf)
        for i in range(self.shape[0]):
            cols, vals = self.row(i)
            out[i, cols] = vals
        return out


def euclidean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense Euclidean distance block in float64.

    Uses the ``|a|^2 + |b|^2 - 2ab`` expansion; entries small enough for the
    expansion to lose all precision are recomputed from explicit differences,
    so identical rows still come out at exactly zero.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] <= KDTREE_MAX_DIM or a.shape[0] * b.shape[0] <= 64:
        return cdist(a, b)
    na = np.einsum("ij,ij->i", a, a)
    nb = np.einsum("ij,ij->i", b, b)
    d2 = na[:, None] + nb[None, :] - 2.0 * (a @ b.T)
    scale = na[:, None] + nb[None, :]
    suspect = np.argwhere(d2 <= 1e-8 * scale)
    np.maximum(d2, 0.0, out=d2)
    out = np.sqrt(d2, out=d2)
    if suspect.size:
        i, j = suspect[:, 0], suspect[:, 1]
        out[i, j] = np.linalg.norm(a[i] - b[j], axis=1)
    return out


def pairwise_distances(hs: np.ndarray, ht: np.ndarray, candidates=None,
                       pool=None) -> np.ndarray:
    """Euclidean distances between selected source and target embeddings.

    ``D[i, j] = ||hs[candidates[i]] - ht[pool[j]]||``, computed in float64.
    """
    if hs.shape[1] != ht.shape[1]:
        raise ValueError(f"feature dimension mismatch: {hs.shape[1]} vs {ht.shape[1]}")
    a = hs if candidates is None else hs[np.asarray(candidates, dtype=np.int64)]
    b = ht if pool is None else ht[np.asarray(pool, dtype=np.int64)]
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("candidate and pool sets must be non-empty")
    return euclidean(a, b)


def sparsify_rows(d: np.ndarray, k: int) -> SparseDistanceMatrix:
    """Keep the ``min(2k, n_cols)`` smallest entries of every row."""
    if k < 1:
        raise ValueError("k must be >= 1")
    d = np.asarray(d, dtype=np.float64)
    n, m = d.shape
    width = min(2 * k, m)
    if width == m:
        order = np.argsort(d, axis=1, kind="stable")
    else:
        # Entries below the width-th smallest value, then ties at that value
        # in ascending column order.
        kth = np.partition(d, width - 1, axis=1)[:, width - 1:width]
        less = d < kth
        room = width - less.sum(axis=1, keepdims=True)
        equal = d == kth
        keep = less | (equal & (np.cumsum(equal, axis=1) <= room))
        rows, cols = np.nonzero(keep)
        vals = d[rows, cols]
        order = cols[np.lexsort((cols, vals, rows))].reshape(n, width)
    vals = np.take_along_axis(d, order, axis=1)
    indptr = np.arange(n + 1, dtype=np.int64) * width
    return SparseDistanceMatrix(indptr, order.reshape(-1).astype(np.int64),
                                vals.reshape(-1), (n, m))


def optimal_match(d: SparseDistanceMatrix | np.ndarray, k: int) -> Matching:
    """Minimum-total-distance one-to-one matching with exactly ``k`` pairs.

    Successive shortest augmenting paths with Dijkstra on reduced costs
    (Jonker-Volgenant style dual potentials). Every free column drains into a
    zero-cost sink, which plays the part of the dummy padding for the
    rectangular case, and the search stops after ``k`` augmentations. Each
    augmentation preserves optimality, so the intermediate matching of size
    ``i`` is optimal among all size-``i`` matchings.

    Raises
    ------
    InfeasibleMatchingError
        If the finite entries admit fewer than ``k`` disjoint pairs.
    """
    if not isinstance(d, SparseDistanceMatrix):
        d = SparseDistanceMatrix.from_dense(d)
    n_rows, n_cols = d.shape
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return Matching.empty()

    finite = np.isfinite(d.data)
    if not finite.all():
        raise ValueError("SparseDistanceMatrix entries must be finite")
    shift = float(d.data.min()) if d.data.size else 0.0
    shift = min(shift, 0.0)

    adj_cols = [d.indices[d.indptr[i]:d.indptr[i + 1]].tolist() for i in range(n_rows)]
    adj_cost = [(d.data[d.indptr[i]:d.indptr[i + 1]] - shift).tolist() for i in range(n_rows)]
    edge_row = np.repeat(np.arange(n_rows), np.diff(d.indptr))
    edge_col = d.indices
    edge_cost = d.data - shift

    inf = math.inf
    row_match = [-1] * n_rows
    col_match = [-1] * n_cols
    match_cost = [0.0] * n_rows
    pot_row = [0.0] * n_rows
    pot_col = [0.0] * n_cols
    pot_sink = 0.0
    sink = n_rows + n_cols
    matched = 0

    while matched < k:
        dist_row = [inf] * n_rows
        dist_col = [inf] * n_cols
        pred_col = [-1] * n_cols        # row that reached this column
        pred_cost = [0.0] * n_cols
        done_rows: list[int] = []
        done_cols: list[int] = []
        dist_sink = inf
        sink_pred = -1
        popped_row = [False] * n_rows
        popped_col = [False] * n_cols
        # All free rows sit at distance zero; relax their edges in one batch.
        free = np.fromiter((m == -1 for m in row_match), dtype=bool, count=n_rows)
        sel = free[edge_row]
        e_row, e_col, e_cost = edge_row[sel], edge_col[sel], edge_cost[sel]
        red = e_cost + np.asarray(pot_row)[e_row] - np.asarray(pot_col)[e_col]
        np.maximum(red, 0.0, out=red)
        order = np.lexsort((e_row, red, e_col))
        sorted_cols = e_col[order]
        first = np.ones(order.size, dtype=bool)
        first[1:] = sorted_cols[1:] != sorted_cols[:-1]
        best = order[first]
        heap: list[tuple[float, int]] = []
        for c, r, dc, cost in zip(e_col[best].tolist(), e_row[best].tolist(),
                                  red[best].tolist(), e_cost[best].tolist()):
            dist_col[c] = dc
            pred_col[c] = r
            pred_cost[c] = cost
            heap.append((dc, n_rows + c))
        heapq.heapify(heap)
        for r in np.flatnonzero(free).tolist():
            dist_row[r] = 0.0
            popped_row[r] = True
            done_rows.append(r)
        reached_sink = False

        while heap:
            dv, node = heapq.heappop(heap)
            if node == sink:
                reached_sink = True
                break
            if node < n_rows:
                r = node
                if popped_row[r] or dv > dist_row[r]:
                    continue
                popped_row[r] = True
                done_rows.append(r)
                base = dv + pot_row[r]
                own = row_match[r]
                for c, cost in zip(adj_cols[r], adj_cost[r]):
                    if c == own or popped_col[c]:
                        continue
                    red = base + cost - pot_col[c]
                    if red < dv:
                        red = dv
                    if red < dist_col[c]:
                        dist_col[c] = red
                        pred_col[c] = r
                        pred_cost[c] = cost
                        heapq.heappush(heap, (red, n_rows + c))
            else:
                c = node - n_rows
                if popped_col[c] or dv > dist_col[c]:
                    continue
                popped_col[c] = True
                done_cols.append(c)
                owner = col_match[c]
                if owner == -1:
                    nd = dv + pot_col[c] - pot_sink
                    if nd < dv:
                        nd = dv
                    if nd < dist_sink:
                        dist_sink = nd
                        sink_pred = c
                        heapq.heappush(heap, (nd, sink))
                else:
                    nd = dv - match_cost[owner] + pot_col[c] - pot_row[owner]
                    if nd < dv:
                        nd = dv
                    if nd < dist_row[owner]:
                        dist_row[owner] = nd
                        heapq.heappush(heap, (nd, owner))

        if not reached_sink:
            break

        # Potential update p += min(d, d_sink) keeps reduced costs non-negative.
        for r in range(n_rows):
            pot_row[r] += dist_sink
        for r in done_rows:
            pot_row[r] += dist_row[r] - dist_sink
        for c in range(n_cols):
            pot_col[c] += dist_sink
        for c in done_cols:
            pot_col[c] += dist_col[c] - dist_sink
        pot_sink += dist_sink

        c = sink_pred
        while True:
            r = pred_col[c]
            prev = row_match[r]
            row_match[r] = c
            col_match[c] = r
            match_cost[r] = pred_cost[c]
            if prev == -1:
                break
            c = prev
        matched += 1

    rows = [r for r in range(n_rows) if row_match[r] != -1]
    result = Matching(np.array(rows, dtype=np.int64),
                      np.array([row_match[r] for r in rows], dtype=np.int64),
                      np.array([match_cost[r] + shift for r in rows]))
    if matched < k:
        raise InfeasibleMatchingError(k, result)
    return result


@functools.lru_cache(maxsize=256)
def _enumeration(n: int, m: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    rows = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
    cols = np.array(list(itertools.permutations(range(m), k)), dtype=np.int64)
    return rows, cols


def brute_force_match(d: np.ndarray, k: int, max_side: int = 10) -> Matching:
    """Exhaustive minimum-cost size-``k`` matching for small matrices.

    Ties are resolved towards the lexicographically smallest sorted pair list.
    Infinite entries are treated as forbidden.
    """
    d = np.asarray(d, dtype=np.float64)
    n, m = d.shape
    if n > max_side or m > max_side:
        raise ValueError(f"brute force is limited to {max_side}x{max_side}, got {n}x{m}")
    if k == 0:
        return Matching.empty()
    if k > min(n, m):
        raise InfeasibleMatchingError(k, Matching.empty())
    rows, cols = _enumeration(n, m, k)
    cost = np.zeros((rows.shape[0], cols.shape[0]))
    for t in range(k):
        cost += d[rows[:, t]][:, cols[:, t]]
    best = cost.min()
    if not np.isfinite(best):
        raise InfeasibleMatchingError(k, Matching.empty())
    ties = np.argwhere(cost == best)
    keys = np.empty((ties.shape[0], 2 * k), dtype=np.int64)
    keys[:, 0::2] = rows[ties[:, 0]]
    keys[:, 1::2] = cols[ties[:, 1]]
    i, j = ties[np.lexsort(keys.T[::-1])[0]]
    return Matching(rows[i], cols[j], d[rows[i], cols[j]])


def _nearest(hs: np.ndarray, ht: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest ``ht`` row for each ``hs`` row; ties go to the lower index."""
    n_pool = ht.shape[0]
    if hs.shape[1] <= KDTREE_MAX_DIM:
        kk = min(4, n_pool)
        dist, idx = cKDTree(ht).query(hs, k=kk)
        dist = dist.reshape(hs.shape[0], kk)
        idx = idx.reshape(hs.shape[0], kk)
        # Among the returned neighbours at the minimum distance, take the lowest index.
        masked = np.where(dist == dist[:, :1], idx, n_pool)
        best = masked.min(axis=1)
        best_d = dist[:, 0].copy()
        # If every returned neighbour ties, lower-indexed ties may be missing.
        crowded = np.flatnonzero(dist[:, -1] == dist[:, 0]) if kk < n_pool else []
        for i in crowded:
            row = euclidean(hs[i:i + 1], ht)[0]
            best[i] = int(np.flatnonzero(row == row.min())[0])
            best_d[i] = row[best[i]]
        return best, best_d
    best = np.empty(hs.shape[0], dtype=np.int64)
    best_d = np.empty(hs.shape[0])
    for lo in range(0, hs.shape[0], _CHUNK_ROWS):
        block = euclidean(hs[lo:lo + _CHUNK_ROWS], ht)
        j = block.argmin(axis=1)
        best[lo:lo + _CHUNK_ROWS] = j
        best_d[lo:lo + _CHUNK_ROWS] = block[np.arange(block.shape[0]), j]
    return best, best_d


def fast_match(hs: np.ndarray, ht: np.ndarray, candidates, pool, k: int) -> Matching:
    """Nearest-neighbour matching followed by top-``k`` selection.

    Every candidate source proposes its nearest pool target. When several
    sources propose the same target only the closest proposal survives; the
    ``k`` smallest surviving distances are returned. Indices in the result
    are node ids, not positions in ``candidates`` / ``pool``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if hs.shape[1] != ht.shape[1]:
        raise ValueError(f"feature dimension mismatch: {hs.shape[1]} vs {ht.shape[1]}")
    candidates = np.asarray(candidates, dtype=np.int64)
    pool = np.asarray(pool, dtype=np.int64)
    if candidates.size == 0 or pool.size == 0:
        return Matching.empty()
    a = hs[candidates].astype(np.float64)
    b = ht[pool].astype(np.float64)
    nn, nn_d = _nearest(a, b)
    src, tgt = candidates, pool[nn]
    # Sort by (distance, source, target) so first occurrence per target wins.
    order = np.lexsort((tgt, src, nn_d))
    _, first = np.unique(tgt[order], return_index=True)
    keep = order[first]
    keep = keep[np.lexsort((tgt[keep], src[keep], nn_d[keep]))][:k]
    return Matching(src[keep], tgt[keep], nn_d[keep])
