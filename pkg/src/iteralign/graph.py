"""Plain undirected graphs, edge-list ingestion and edge-removal noise."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class GraphParseError(ValueError):
    """Raised for malformed edge-list or correspondence input."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class PerturbationInfeasible(RuntimeError):
    """Raised when edges cannot be removed without isolating a node."""


@dataclass(frozen=True)
class NodeLabelMap:
    """Bijection between external node labels and dense internal indices."""

    labels: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index = {label: i for i, label in enumerate(self.labels)}
        if len(index) != len(self.labels):
            raise ValueError("node labels must be unique")
        object.__setattr__(self, "_index", index)

    @classmethod
    def identity(cls, n: int) -> "NodeLabelMap":
        return cls(tuple(str(i) for i in range(n)))

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def index(self, label: str) -> int:
        return self._index[label]

    def label(self, index: int) -> str:
        return self.labels[index]


class Graph:
    """Immutable undirected simple graph stored as a CSR adjacency matrix.

    Parameters
    ----------
    node_count : int
        Number of nodes; indices are ``0 .. node_count - 1``.
    edges : iterable of (int, int)
        Undirected edges. Self-loops and duplicates are dropped.
    """

    def __init__(self, node_count: int, edges: Iterable[tuple[int, int]] = ()):
        if node_count < 0:
            raise ValueError("node_count must be non-negative")
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= node_count):
            raise ValueError("edge endpoint out of range")
        arr = arr[arr[:, 0] != arr[:, 1]]
        arr = np.sort(arr, axis=1)
        arr = np.unique(arr, axis=0) if arr.size else arr
        self._node_count = int(node_count)
        self._edges = arr
        self._edges.setflags(write=False)

        rows = np.concatenate([arr[:, 0], arr[:, 1]])
        cols = np.concatenate([arr[:, 1], arr[:, 0]])
        data = np.ones(rows.shape[0], dtype=np.float64)
        adj = sp.csr_matrix((data, (rows, cols)), shape=(node_count, node_count))
        adj.sort_indices()
        self._adjacency = adj
        self._degrees = np.diff(adj.indptr).astype(np.int64)
        self._degrees.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self._node_count

    @property
    def edge_count(self) -> int:
        return int(self._edges.shape[0])

    @property
    def edges(self) -> np.ndarray:
        """``(|E|, 2)`` array of edges with ``u < v``, lexicographically sorted."""
        return self._edges

    @property
    def adjacency(self) -> sp.csr_matrix:
        # Copy so callers cannot mutate the cached matrix.
        return self._adjacency.copy()

    @property
    def degrees(self) -> np.ndarray:
        return self._degrees

    def neighbors(self, node: int) -> np.ndarray:
        a = self._adjacency
        return a.indices[a.indptr[node]:a.indptr[node + 1]]

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self._edges}

    def permute(self, perm: np.ndarray) -> "Graph":
        """Relabel node ``i`` as ``perm[i]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self._node_count)):
            raise ValueError("perm must be a permutation of range(node_count)")
        return Graph(self._node_count, perm[self._edges])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self._node_count == other._node_count
                and np.array_equal(self._edges, other._edges))

    def __hash__(self) -> int:
        return hash((self._node_count, self._edges.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(nodes={self.node_count}, edges={self.edge_count})"


@dataclass(frozen=True)
class GroundTruth:
    """One-to-one set of (source index, target index) correspondences."""

    sources: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        s = np.asarray(self.sources, dtype=np.int64)
        t = np.asarray(self.targets, dtype=np.int64)
        if s.shape != t.shape or s.ndim != 1:
            raise ValueError("sources and targets must be 1-D arrays of equal length")
        if len(np.unique(s)) != len(s):
            raise ValueError("duplicate source index in ground truth")
        if len(np.unique(t)) != len(t):
            raise ValueError("duplicate target index in ground truth")
        object.__setattr__(self, "sources", s)
        object.__setattr__(self, "targets", t)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "GroundTruth":
        pairs = list(pairs)
        if not pairs:
            return cls(np.zeros(0, np.int64), np.zeros(0, np.int64))
        s, t = zip(*pairs)
        return cls(np.array(s), np.array(t))

    def __len__(self) -> int:
        return int(self.sources.shape[0])

    def pairs(self) -> set[tuple[int, int]]:
        return set(zip(self.sources.tolist(), self.targets.tolist()))


def _read_text(source: str | TextIO) -> TextIO:
    return io.StringIO(source) if isinstance(source, str) else source


def _data_lines(stream: TextIO):
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield line_no, line.split()


def parse_edge_list(text: str | TextIO) -> tuple[Graph, NodeLabelMap]:
    """Parse a whitespace-separated edge list.

    Labels are arbitrary strings, remapped to dense indices in order of first
    appearance. Self-loops and repeated edges are dropped and logged.

    Examples
    --------
    >>> g, labels = parse_edge_list("0 1\\n1 2")
    >>> g.degrees.tolist()
    [1, 2, 1]
    """
    index: dict[str, int] = {}
    edges: list[tuple[int, int]] = []
    for line_no, parts in _data_lines(_read_text(text)):
        if len(parts) < 2:
            raise GraphParseError(f"expected two node labels, got {len(parts)}", line_no)
        # Extra columns (weights, timestamps) are ignored.
        ends = []
        for label in parts[:2]:
            if label not in index:
                index[label] = len(index)
            ends.append(index[label])
        edges.append((ends[0], ends[1]))
    if not index:
        raise GraphParseError("edge list is empty")
    graph = Graph(len(index), edges)
    dropped = len(edges) - graph.edge_count
    if dropped:
        logger.info("dropped %d self-loop or duplicate edge lines", dropped)
    labels = NodeLabelMap(tuple(index))
    return graph, labels


def read_edge_list(path) -> tuple[Graph, NodeLabelMap]:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh)


def parse_correspondences(text: str | TextIO, source_labels: NodeLabelMap,
                          target_labels: NodeLabelMap) -> GroundTruth:
    """Parse ``source_label target_label`` lines into a :class:`GroundTruth`."""
    sources: list[int] = []
    targets: list[int] = []
    seen_s: set[int] = set()
    seen_t: set[int] = set()
    for line_no, parts in _data_lines(_read_text(text)):
        if len(parts) < 2:
            raise GraphParseError(f"expected two node labels, got {len(parts)}", line_no)
        a, b = parts[:2]
        if a not in source_labels:
            raise GraphParseError(f"unknown source label {a!r}", line_no)
        if b not in target_labels:
            raise GraphParseError(f"unknown target label {b!r}", line_no)
        u, v = source_labels.index(a), target_labels.index(b)
        if u in seen_s:
            raise GraphParseError(f"duplicate source label {a!r}", line_no)
        if v in seen_t:
            raise GraphParseError(f"duplicate target label {b!r}", line_no)
        seen_s.add(u)
        seen_t.add(v)
        sources.append(u)
        targets.append(v)
    return GroundTruth(np.array(sources, dtype=np.int64), np.array(targets, dtype=np.int64))


def read_correspondences(path, source_labels: NodeLabelMap,
                         target_labels: NodeLabelMap) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        return parse_correspondences(fh, source_labels, target_labels)


def format_edge_list(graph: Graph, labels: NodeLabelMap | None = None) -> str:
    labels = labels or NodeLabelMap.identity(graph.node_count)
    return "".join(f"{labels.label(u)}\t{labels.label(v)}\n" for u, v in graph.edges)


def perturb_edges(graph: Graph, ratio: float, seed: int) -> Graph:
    """Remove ``floor(ratio * |E|)`` edges uniformly at random.

    A sampled edge is rejected when removing it would leave an endpoint with
    degree zero. After ``100 * n_remove`` rejections the ratio is declared
    infeasible.
    """
    if not 0.0 <= ratio < 1.0:
        raise ValueError("ratio must lie in [0, 1)")
    n_edges = graph.edge_count
    n_remove = int(np.floor(ratio * n_edges))
    if n_remove == 0:
        return graph

    rng = np.random.default_rng(seed)
    degrees = graph.degrees.copy()
    edges = graph.edges
    alive = np.ones(n_edges, dtype=bool)
    # Swap-remove pool of surviving edge ids, so sampling stays uniform.
    pool = np.arange(n_edges)
    pool_size = n_edges
    removed = 0
    rejections = 0
    max_rejections = 100 * n_remove
    while removed < n_remove:
        slot = int(rng.integers(pool_size))
        e = pool[slot]
        u, v = edges[e]
        if degrees[u] <= 1 or degrees[v] <= 1:
            rejections += 1
            if rejections >= max_rejections:
                raise PerturbationInfeasible(
                    f"removed {removed} of {n_remove} edges before {rejections} "
                    "rejected attempts; ratio would isolate nodes")
            continue
        degrees[u] -= 1
        degrees[v] -= 1
        alive[e] = False
        pool_size -= 1
        pool[slot], pool[pool_size] = pool[pool_size], pool[slot]
        removed += 1
    return Graph(graph.node_count, edges[alive])


def erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """G(n, p) random graph; isolated nodes are attached to a random neighbour."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    deg = np.zeros(n, dtype=np.int64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    for u in np.flatnonzero(deg == 0):
        v = int(rng.integers(n - 1))
        v += v >= u
        edges.append((int(u), v))
        deg[u] += 1
        deg[v] += 1
    return Graph(n, edges)


def permuted_pair(graph: Graph, seed: int) -> tuple[Graph, GroundTruth]:
    """Random relabelling of ``graph`` with the matching ground truth."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(graph.node_count)
    truth = GroundTruth(np.arange(graph.node_count), perm)
    return graph.permute(perm), truth
