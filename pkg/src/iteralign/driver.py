"""The iterative alignment loop.

Every iteration re-initialises node features, diffuses them, post-processes
the result and matches up to ``K`` new node pairs. The first iteration starts
from one-hot identity features on high-degree nodes only; later iterations
seed diffusion with the anchors found so far, sharing one basis vector per
anchor pair across both graphs.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .diffusion import (DiffusionConfig, build_diffusion_matrix, diffuse,
                        init_features_anchored, init_features_identity)
from .features import PostprocessConfig, postprocess
from .graph import Graph
from .matching import (InfeasibleMatchingError, Matching, fast_match,
                       optimal_match, pairwise_distances, sparsify_rows)

logger = logging.getLogger(__name__)


class Strategy(str, enum.Enum):
    OPTIMAL = "optimal"
    FAST = "fast"


@dataclass(frozen=True)
class AlignConfig:
    strategy: Strategy = Strategy.OPTIMAL
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    postprocess: PostprocessConfig = field(default_factory=PostprocessConfig)
    k_per_iter: int = 20
    first_iter_degree_threshold: int = 6
    max_iterations: int = 10_000
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.k_per_iter < 1:
            raise ValueError("k_per_iter must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def as_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "diffusion": self.diffusion.kind.value,
            "steps": self.diffusion.steps,
            "normalize": self.postprocess.normalize,
            "reorder_anchored": self.postprocess.reorder_anchored,
            "k_per_iter": self.k_per_iter,
            "first_iter_degree_threshold": self.first_iter_degree_threshold,
            "max_iterations": self.max_iterations,
            "seed": self.seed,
        }


class Anchor(NamedTuple):
    source: int
    target: int
    iteration: int
    distance: float


class AnchorSet:
    """Append-only, one-to-one list of anchor pairs."""

    def __init__(self) -> None:
        self._anchors: list[Anchor] = []
        self._sources: set[int] = set()
        self._targets: set[int] = set()

    def extend(self, matching: Matching, iteration: int) -> None:
        for s, t, d in matching.pairs():
            if s in self._sources or t in self._targets:
                raise ValueError(f"node already anchored: ({s}, {t})")
            self._anchors.append(Anchor(s, t, iteration, d))
            self._sources.add(s)
            self._targets.add(t)

    def __len__(self) -> int:
        return len(self._anchors)

    def __iter__(self):
        return iter(self._anchors)

    def __getitem__(self, i):
        return self._anchors[i]

    def pairs(self) -> np.ndarray:
        return np.array([(a.source, a.target) for a in self._anchors],
                        dtype=np.int64).reshape(-1, 2)

    def matched_sources(self) -> set[int]:
        return set(self._sources)

    def matched_targets(self) -> set[int]:
        return set(self._targets)

    def to_matching(self) -> Matching:
        return Matching.from_pairs((a.source, a.target, a.distance) for a in self._anchors)


@dataclass
class AlignmentResult:
    matching: Matching
    anchors: AnchorSet
    iteration_counts: list[int]
    termination: str
    config: AlignConfig
    source: Graph
    target: Graph
    first_pass: tuple[np.ndarray, np.ndarray]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.iteration_counts)

    def final_pass(self) -> tuple[np.ndarray, np.ndarray]:
        """Embeddings from one anchored diffusion using every anchor found."""
        if len(self.anchors) == 0:
            return self.first_pass
        return anchored_embeddings(self.source, self.target, self.anchors.pairs(),
                                   self.config)


def select_high_degree_candidates(graph: Graph, threshold: int, k: int) -> np.ndarray:
    """Nodes with degree strictly above ``threshold``.

    Falls back to the ``k`` highest-degree nodes (ties by index) when no node
    clears the threshold.
    """
    deg = graph.degrees
    chosen = np.flatnonzero(deg > threshold)
    if chosen.size == 0:
        order = np.lexsort((np.arange(deg.size), -deg))
        chosen = np.sort(order[:k])
    return chosen


def identity_embeddings(source: Graph, target: Graph, config: AlignConfig):
    kind, steps = config.diffusion.kind, config.diffusion.steps
    hs = diffuse(build_diffusion_matrix(source, kind), init_features_identity(source), steps)
    ht = diffuse(build_diffusion_matrix(target, kind), init_features_identity(target), steps)
    return postprocess(hs, ht, config.postprocess)


def anchored_embeddings(source: Graph, target: Graph, anchors: np.ndarray,
                        config: AlignConfig):
    kind, steps = config.diffusion.kind, config.diffusion.steps
    hs0, ht0 = init_features_anchored(source, target, anchors)
    hs = diffuse(build_diffusion_matrix(source, kind), hs0, steps)
    ht = diffuse(build_diffusion_matrix(target, kind), ht0, steps)
    return postprocess(hs, ht, config.postprocess,
                       reorder=config.postprocess.reorder_anchored)


def match_step(hs: np.ndarray, ht: np.ndarray, candidates: np.ndarray,
               pool: np.ndarray, k: int, strategy: Strategy) -> Matching:
    """Match up to ``k`` pairs between ``candidates`` and ``pool`` (node ids)."""
    k = min(k, candidates.size, pool.size)
    if k == 0:
        return Matching.empty()
    if strategy is Strategy.FAST:
        return fast_match(hs, ht, candidates, pool, k)
    d = pairwise_distances(hs, ht, candidates, pool)
    try:
        local = optimal_match(sparsify_rows(d, k), k)
    except InfeasibleMatchingError as exc:
        logger.debug("sparsified matrix admits only %d pairs", len(exc.partial))
        local = exc.partial
    return local.remap(candidates, pool)


def _informative(h: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    # All-zero rows have not been reached by any anchor's heat yet.
    return nodes[np.any(h[nodes] != 0, axis=1)]


def run_iteralign(source: Graph, target: Graph,
                  config: AlignConfig | None = None) -> AlignmentResult:
    """Align ``source`` to ``target`` and return the accumulated anchors."""
    config = config or AlignConfig()
    if source.node_count == 0 or target.node_count == 0:
        raise ValueError("both graphs must be non-empty")
    k = config.k_per_iter
    limit = min(source.node_count, target.node_count)
    anchors = AnchorSet()
    counts: list[int] = []
    timings = {"diffusion": 0.0, "matching": 0.0}

    t0 = time.perf_counter()
    hs, ht = identity_embeddings(source, target, config)
    timings["diffusion"] += time.perf_counter() - t0
    first_pass = (hs, ht)
    cand = select_high_degree_candidates(source, config.first_iter_degree_threshold, k)
    pool = select_high_degree_candidates(target, config.first_iter_degree_threshold, k)
    t0 = time.perf_counter()
    found = match_step(hs, ht, cand, pool, k, config.strategy)
    timings["matching"] += time.perf_counter() - t0
    anchors.extend(found, 1)
    counts.append(len(found))
    termination = "zero_progress" if len(found) == 0 else "max_iterations"

    iteration = 1
    while len(found) > 0 and len(anchors) < limit and iteration < config.max_iterations:
        iteration += 1
        t0 = time.perf_counter()
        hs, ht = anchored_embeddings(source, target, anchors.pairs(), config)
        timings["diffusion"] += time.perf_counter() - t0
        src_left = np.setdiff1d(np.arange(source.node_count),
                                np.fromiter(anchors.matched_sources(), np.int64))
        tgt_left = np.setdiff1d(np.arange(target.node_count),
                                np.fromiter(anchors.matched_targets(), np.int64))
        cand = _informative(hs, src_left)
        pool = _informative(ht, tgt_left)
        if cand.size == 0 or pool.size == 0:
            # Nothing carries anchor heat; fall back to every unmatched node.
            cand, pool = src_left, tgt_left
        t0 = time.perf_counter()
        found = match_step(hs, ht, cand, pool, k, config.strategy)
        timings["matching"] += time.perf_counter() - t0
        anchors.extend(found, iteration)
        counts.append(len(found))
        logger.debug("iteration %d: +%d anchors (%d total)", iteration, len(found), len(anchors))
        if len(found) == 0:
            termination = "zero_progress"

    if len(anchors) >= limit:
        termination = "complete"
    return AlignmentResult(
        matching=anchors.to_matching(),
        anchors=anchors,
        iteration_counts=counts,
        termination=termination,
        config=config,
        source=source,
        target=target,
        first_pass=first_pass,
        timings=timings,
    )
