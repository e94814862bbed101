"""Ranking metrics (Hits@q, MRR) and serialisable evaluation reports."""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.spatial.distance import cdist

from . import wl
from .driver import AlignmentResult
from .graph import GroundTruth

RANK_MODES = ("final", "first")
DEFAULT_QS = (1, 5, 10)
_CHUNK_ROWS = 512


@dataclass(frozen=True)
class RankTable:
    """1-based rank of each true counterpart among all target nodes."""

    sources: np.ndarray
    ranks: np.ndarray

    def __len__(self) -> int:
        return int(self.ranks.shape[0])


def rank_targets(hs: np.ndarray, ht: np.ndarray, truth: GroundTruth) -> RankTable:
    """Rank every target for each ground-truth source by embedding distance.

    A rank counts the targets strictly closer than the true counterpart plus
    the equally close ones with a smaller index.
    """
    ranks = np.empty(len(truth), dtype=np.int64)
    ht64 = ht.astype(np.float64)
    cols = np.arange(ht.shape[0])
    for lo in range(0, len(truth), _CHUNK_ROWS):
        src = truth.sources[lo:lo + _CHUNK_ROWS]
        tgt = truth.targets[lo:lo + _CHUNK_ROWS]
        d = cdist(hs[src].astype(np.float64), ht64)
        own = d[np.arange(src.size), tgt][:, None]
        better = (d < own) | ((d == own) & (cols[None, :] < tgt[:, None]))
        ranks[lo:lo + _CHUNK_ROWS] = better.sum(axis=1) + 1
    return RankTable(truth.sources.copy(), ranks)


def build_rank_table(result: AlignmentResult, truth: GroundTruth,
                     mode: str = "final") -> RankTable:
    """Rank table from the final anchored pass or the first identity pass."""
    if mode not in RANK_MODES:
        raise ValueError(f"mode must be one of {RANK_MODES}")
    hs, ht = result.final_pass() if mode == "final" else result.first_pass
    return rank_targets(hs, ht, truth)


def hits_at_q(table: RankTable | Iterable[int], q: int) -> float:
    if q < 1:
        raise ValueError("q must be >= 1")
    ranks = _ranks(table)
    if ranks.size == 0:
        raise ValueError("empty rank table")
    return float(np.count_nonzero(ranks <= q)) / ranks.size


def mrr(table: RankTable | Iterable[int]) -> float:
    """Mean reciprocal rank, summed exactly and rounded once."""
    ranks = _ranks(table)
    if ranks.size == 0:
        raise ValueError("empty rank table")
    values, counts = np.unique(ranks, return_counts=True)
    total = sum(Fraction(int(c), int(v)) for v, c in zip(values, counts))
    return float(total / ranks.size)


def _ranks(table) -> np.ndarray:
    if isinstance(table, RankTable):
        return table.ranks
    ranks = np.asarray(list(table), dtype=np.int64)
    if ranks.size and ranks.min() < 1:
        raise ValueError("ranks are 1-based")
    return ranks


def matching_accuracy(result: AlignmentResult, truth: GroundTruth) -> float:
    """Fraction of ground-truth pairs recovered exactly by the matching."""
    if len(truth) == 0:
        raise ValueError("empty ground truth")
    found = set(zip(result.matching.sources.tolist(), result.matching.targets.tolist()))
    return len(found & truth.pairs()) / len(truth)


@dataclass
class EvalReport:
    hits: dict[int, float]
    mrr: float | None
    tub: float
    matching_accuracy: float | None
    matching_size: int
    config: dict
    metadata: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "hits": {str(q): v for q, v in sorted(self.hits.items())},
            "mrr": self.mrr,
            "tub": self.tub,
            "matching_accuracy": self.matching_accuracy,
            "matching_size": self.matching_size,
            "config": self.config,
            "metadata": self.metadata,
        }
        if include_timings:
            out["timings"] = self.timings
        return out

    def to_json(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_dict(include_timings), sort_keys=True, indent=2) + "\n"

    def csv_row(self, extra: Mapping | None = None) -> dict:
        row = dict(extra or {})
        row.update({f"hits@{q}": v for q, v in sorted(self.hits.items())})
        row.update({"mrr": self.mrr, "tub": self.tub,
                    "matching_accuracy": self.matching_accuracy,
                    "matching_size": self.matching_size})
        row.update(self.config)
        return row


def csv_text(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def evaluate(result: AlignmentResult, truth: GroundTruth | None, qs=DEFAULT_QS,
             rank_mode: str = "final", tub_value: float | None = None) -> EvalReport:
    """Score ``result`` against ``truth``.

    Without ground truth only the matching size, TUB and run metadata are
    reported.
    """
    if tub_value is None:
        tub_value = wl.tub(result.source, result.target)
    hs, ht = result.first_pass
    metadata = {
        "rank_mode": rank_mode,
        "rank_mode_risk": "final anchored pass ranks candidates; "
                          "iteration-1 ranking is the alternative protocol"
                          if rank_mode == "final" else
                          "iteration-1 identity embeddings rank candidates",
        "padded": result.source.node_count != result.target.node_count,
        "padding_risk": "unequal graph sizes: iteration-1 rows were left-padded with zeros"
                        if result.source.node_count != result.target.node_count else None,
        "termination": result.termination,
        "iterations": result.iterations,
        "iteration_counts": list(result.iteration_counts),
        "feature_dim_first_pass": int(hs.shape[1]),
        "truth_size": len(truth) if truth is not None else 0,
    }
    if truth is None or len(truth) == 0:
        hits, mrr_value, accuracy = {}, None, None
    else:
        table = build_rank_table(result, truth, rank_mode)
        hits = {q: hits_at_q(table, q) for q in qs}
        mrr_value = mrr(table)
        accuracy = matching_accuracy(result, truth)
    return EvalReport(
        hits=hits,
        mrr=mrr_value,
        tub=tub_value,
        matching_accuracy=accuracy,
        matching_size=len(result.matching),
        config=result.config.as_dict(),
        metadata=metadata,
        timings=dict(result.timings),
    )
