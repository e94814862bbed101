import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iteralign.driver import run_iteralign
from iteralign.evaluation import (EvalReport, csv_text, evaluate, hits_at_q, mrr,
                                  rank_targets)
from iteralign.graph import GroundTruth, erdos_renyi, permuted_pair

rank_lists = st.lists(st.integers(1, 50), min_size=1, max_size=40)


def test_hits_examples():
    ranks = [1, 2, 3, 7]
    assert hits_at_q(ranks, 1) == 0.25
    assert hits_at_q(ranks, 5) == 0.75
    assert hits_at_q(ranks, 10) == 1.0


def test_mrr_examples():
    assert mrr([1, 2]) == 0.75
    assert mrr([4]) == 0.25


def test_empty_and_bad_q():
    with pytest.raises(ValueError, match="empty"):
        hits_at_q([], 1)
    with pytest.raises(ValueError, match="empty"):
        mrr([])
    with pytest.raises(ValueError):
        hits_at_q([1], 0)


def test_rank_ties_go_to_lower_index():
    hs = np.array([[0.0]])
    ht = np.array([[1.0], [0.0], [0.0]])
    table = rank_targets(hs, ht, GroundTruth.from_pairs([(0, 2)]))
    assert table.ranks.tolist() == [2]
    table = rank_targets(hs, ht, GroundTruth.from_pairs([(0, 1)]))
    assert table.ranks.tolist() == [1]


def test_rank_oracle(rng):
    hs, ht = rng.random((30, 4)), rng.random((35, 4))
    truth = GroundTruth(np.arange(30), rng.permutation(35)[:30])
    table = rank_targets(hs, ht, truth)
    for s, t, r in zip(truth.sources, truth.targets, table.ranks):
        d = np.linalg.norm(ht - hs[s], axis=1)
        order = sorted(range(35), key=lambda j: (d[j], j))
        assert order.index(t) + 1 == r


@given(rank_lists)
def test_hits_monotone_in_q(ranks):
    values = [hits_at_q(ranks, q) for q in range(1, 52)]
    assert values == sorted(values) and values[-1] == 1.0


@given(rank_lists)
def test_mrr_bounds(ranks):
    assert hits_at_q(ranks, 1) <= mrr(ranks) <= 1.0


def _report():
    g = erdos_renyi(40, 0.15, seed=1)
    h, truth = permuted_pair(g, seed=2)
    return evaluate(run_iteralign(g, h), truth)


def test_report_json_roundtrip():
    report = _report()
    data = json.loads(report.to_json())
    assert set(data) == {"hits", "mrr", "tub", "matching_accuracy", "matching_size",
                         "config", "metadata"}
    assert set(data["hits"]) == {"1", "5", "10"}
    assert data["metadata"]["rank_mode"] == "final"
    assert data["metadata"]["padded"] is False
    assert "timings" in json.loads(report.to_json(include_timings=True))
    assert report.to_json() == _report().to_json()


def test_report_csv():
    report = _report()
    text = csv_text([report.csv_row({"ratio": 0.0}), report.csv_row({"ratio": 0.1})])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 2 and rows[1]["ratio"] == "0.1"
    assert float(rows[0]["hits@1"]) == report.hits[1]
    assert csv_text([]) == ""


def test_evaluate_without_truth():
    g = erdos_renyi(20, 0.3, seed=3)
    report = evaluate(run_iteralign(g, g), None)
    assert report.hits == {} and report.mrr is None and report.matching_accuracy is None
    assert report.matching_size == 20


def test_first_rank_mode_and_padding_metadata():
    g = erdos_renyi(20, 0.3, seed=3)
    h = erdos_renyi(24, 0.3, seed=4)
    truth = GroundTruth(np.arange(5), np.arange(5))
    report = evaluate(run_iteralign(g, h), truth, rank_mode="first")
    assert report.metadata["padded"] is True
    assert report.metadata["feature_dim_first_pass"] == 24
    assert report.metadata["rank_mode"] == "first"
    with pytest.raises(ValueError):
        evaluate(run_iteralign(g, h), truth, rank_mode="middle")


def test_report_is_plain_dataclass():
    r = EvalReport(hits={1: 0.5}, mrr=0.5, tub=1.0, matching_accuracy=0.5,
                   matching_size=2, config={"k": 1})
    assert r.csv_row()["k"] == 1
