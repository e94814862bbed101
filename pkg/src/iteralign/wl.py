"""1-WL colour refinement and the structural upper bound on alignment accuracy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class ColorAssignment:
    colors: np.ndarray
    rounds: int

    @property
    def n_classes(self) -> int:
        return int(self.colors.max()) + 1 if self.colors.size else 0

    def classes(self) -> list[np.ndarray]:
        order = np.argsort(self.colors, kind="stable")
        bounds = np.flatnonzero(np.diff(self.colors[order])) + 1
        return np.split(order, bounds) if order.size else []


def _canonical(signatures: list) -> np.ndarray:
    # Ids follow the sorted order of signatures, so relabelling the graph
    # only permutes the colour vector.
    table = {sig: i for i, sig in enumerate(sorted(set(signatures)))}
    return np.fromiter((table[s] for s in signatures), dtype=np.int64,
                       count=len(signatures))


def wl_refine(graph: Graph, max_rounds: int | None = None) -> ColorAssignment:
    """Refine a uniform colouring until the partition stops splitting.

    Each round maps a node to ``(colour, sorted neighbour colours)``. Refinement
    only ever splits classes, so an unchanged class count means the fixed
    point is reached.
    """
    n = graph.node_count
    colors = np.zeros(n, dtype=np.int64)
    if n == 0:
        return ColorAssignment(colors, 0)
    adj = graph.adjacency
    indptr, indices = adj.indptr, adj.indices
    limit = n if max_rounds is None else max_rounds
    n_classes = 1
    rounds = 0
    while rounds < limit:
        neigh = colors[indices]
        sigs = []
        for v in range(n):
            block = np.sort(neigh[indptr[v]:indptr[v + 1]])
            sigs.append((int(colors[v]), tuple(block.tolist())))
        new = _canonical(sigs)
        rounds += 1
        new_classes = int(new.max()) + 1
        colors = new
        if new_classes == n_classes:
            break
        n_classes = new_classes
    return ColorAssignment(colors, rounds)


def class_count(graph: Graph) -> int:
    return wl_refine(graph).n_classes


def graph_bound(graph: Graph) -> float:
    """Fraction of nodes that WL can tell apart: ``#classes / |V|``."""
    if graph.node_count == 0:
        raise ValueError("bound is undefined for an empty graph")
    return class_count(graph) / graph.node_count


def tub(source: Graph, target: Graph) -> float:
    """Theoretical upper bound on structure-only Hits@1 for a graph pair."""
    return min(graph_bound(source), graph_bound(target))
