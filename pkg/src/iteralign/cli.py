"""Command-line entry point: ``iteralign {align,tub,perturb,bench,replay}``."""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import __version__, wl
from .diffusion import DiffusionConfig, DiffusionNumericError, IsolatedNodeError
from .driver import AlignConfig, Strategy, run_iteralign
from .evaluation import RANK_MODES, csv_text, evaluate
from .features import PostprocessConfig
from .graph import (GraphParseError, PerturbationInfeasible,
                    erdos_renyi, format_edge_list, perturb_edges, permuted_pair,
                    read_correspondences, read_edge_list)
from .matching import InfeasibleMatchingError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger("iteralign")

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE = 0, 1, 2
THREADS_ENV = "ITERALIGN_THREADS"


class BenchConfigError(ValueError):
    pass


def _threads():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return nullcontext()
    return threadpool_limits(limits=int(value))


def _align_config(opts: dict) -> AlignConfig:
    return AlignConfig(
        strategy=Strategy(opts["strategy"]),
        diffusion=DiffusionConfig(kind=opts["diffusion"], steps=opts["steps"]),
        postprocess=PostprocessConfig(normalize=opts["normalize"],
                                      reorder_anchored=opts["reorder_anchored"]),
        k_per_iter=opts["k"],
        first_iter_degree_threshold=opts["degree_threshold"],
        max_iterations=opts["max_iters"],
        seed=opts["seed"],
    )


def _load_pair(opts: dict):
    gs, ls = read_edge_list(opts["source"])
    gt, lt = read_edge_list(opts["target"])
    truth = None
    if opts.get("truth"):
        truth = read_correspondences(opts["truth"], ls, lt)
    return gs, ls, gt, lt, truth


def _apply_noise(gs, gt, opts: dict):
    # Source and target draw from distinct streams of the same seed.
    if opts.get("source_noise"):
        gs = perturb_edges(gs, opts["source_noise"], opts["seed"])
    if opts.get("noise"):
        gt = perturb_edges(gt, opts["noise"], opts["seed"] + 1)
    return gs, gt


def run_align(opts: dict):
    """Load, optionally perturb, align and evaluate; returns (report, pairs, timings)."""
    t0 = time.perf_counter()
    gs, ls, gt, lt, truth = _load_pair(opts)
    gs, gt = _apply_noise(gs, gt, opts)
    t_load = time.perf_counter() - t0
    config = _align_config(opts)
    with _threads():
        result = run_iteralign(gs, gt, config)
        t0 = time.perf_counter()
        report = evaluate(result, truth, rank_mode=opts["rank_mode"])
        t_eval = time.perf_counter() - t0
    report.metadata["noise"] = {"source": opts.get("source_noise", 0.0),
                                "target": opts.get("noise", 0.0)}
    pairs = "".join(f"{ls.label(s)}\t{lt.label(t)}\n"
                    for s, t, _ in result.matching.pairs())
    timings = {"load": t_load, **result.timings, "evaluation": t_eval}
    return report, pairs, timings


def _align_opts(args) -> dict:
    return {
        "source": args.source,
        "target": args.target,
        "truth": args.truth,
        "strategy": args.strategy,
        "steps": args.steps,
        "k": args.k,
        "diffusion": args.diffusion,
        "normalize": args.normalize,
        "reorder_anchored": args.reorder_anchored,
        "degree_threshold": args.degree_threshold,
        "max_iters": args.max_iters,
        "seed": args.seed,
        "noise": args.noise,
        "source_noise": args.source_noise,
        "rank_mode": args.rank_mode,
    }


def _write_align_outputs(opts: dict, out: str | None) -> int:
    report, pairs, timings = run_align(opts)
    text = report.to_json()
    if out is None:
        sys.stdout.write(text)
        return EXIT_OK
    out_path = Path(out)
    out_path.write_text(text, encoding="utf-8")
    Path(f"{out}.pairs.tsv").write_text(pairs, encoding="utf-8")
    manifest = {
        "tool": "iteralign",
        "version": __version__,
        "command": "align",
        "options": opts,
        "config": report.config,
        "timings": timings,
    }
    Path(f"{out}.manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"matched {report.matching_size} pairs; report written to {out_path}",
          file=sys.stderr)
    return EXIT_OK


def cmd_align(args) -> int:
    return _write_align_outputs(_align_opts(args), args.out)


def cmd_replay(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    if manifest.get("command") != "align":
        raise BenchConfigError("manifest does not describe an align run")
    return _write_align_outputs(manifest["options"], args.out)


def cmd_tub(args) -> int:
    gs, _ = read_edge_list(args.source)
    gt, _ = read_edge_list(args.target)
    cs, ct = wl.class_count(gs), wl.class_count(gt)
    out = {
        "source": {"nodes": gs.node_count, "classes": cs, "bound": cs / gs.node_count},
        "target": {"nodes": gt.node_count, "classes": ct, "bound": ct / gt.node_count},
        "tub": min(cs / gs.node_count, ct / gt.node_count),
    }
    sys.stdout.write(json.dumps(out, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def cmd_perturb(args) -> int:
    graph, labels = read_edge_list(args.graph)
    noisy = perturb_edges(graph, args.ratio, args.seed)
    Path(args.out).write_text(format_edge_list(noisy, labels), encoding="utf-8")
    print(f"removed {graph.edge_count - noisy.edge_count} edges "
          f"({noisy.edge_count} remain)")
    return EXIT_OK


SWEEP_DEFAULTS = {
    "strategy": ["optimal"],
    "diffusion": ["sym-selfloop"],
    "steps": [5],
    "k": [20],
    "ratios": [0.0],
    "seeds": [0],
    "normalize": ["auto"],
}


def load_bench_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise BenchConfigError(f"{path}: {exc}") from None
    sweep = doc.get("sweep")
    if not isinstance(sweep, dict) or not sweep:
        raise BenchConfigError(f"{path}: missing or empty [sweep] table")
    unknown = set(sweep) - set(SWEEP_DEFAULTS)
    if unknown:
        raise BenchConfigError(f"{path}: unknown sweep keys {sorted(unknown)}")
    grid = {}
    for key, default in SWEEP_DEFAULTS.items():
        values = sweep.get(key, default)
        if not isinstance(values, list):
            values = [values]
        if not values:
            raise BenchConfigError(f"{path}: sweep list {key!r} is empty")
        grid[key] = values
    base = path.parent
    if "synthetic" in doc:
        syn = doc["synthetic"]
        inputs = {"synthetic": {"nodes": int(syn["nodes"]), "p": float(syn["p"]),
                                "seed": int(syn.get("seed", 0))}}
    else:
        try:
            inputs = {k: str(base / doc[k]) for k in ("source", "target")}
        except KeyError as exc:
            raise BenchConfigError(f"{path}: missing input {exc}") from None
        inputs["truth"] = str(base / doc["truth"]) if "truth" in doc else None
    options = {
        "max_iters": int(doc.get("max_iters", 10_000)),
        "degree_threshold": int(doc.get("degree_threshold", 6)),
        "reorder_anchored": bool(doc.get("reorder_anchored", False)),
        "rank_mode": doc.get("rank_mode", "final"),
    }
    return {"inputs": inputs, "grid": grid, "options": options}


def _bench_inputs(inputs: dict):
    if "synthetic" in inputs:
        syn = inputs["synthetic"]
        gs = erdos_renyi(syn["nodes"], syn["p"], syn["seed"])
        gt, truth = permuted_pair(gs, syn["seed"] + 1)
        return gs, gt, truth
    gs, ls = read_edge_list(inputs["source"])
    gt, lt = read_edge_list(inputs["target"])
    truth = read_correspondences(inputs["truth"], ls, lt) if inputs["truth"] else None
    return gs, gt, truth


def bench_runs(bench: dict) -> list[dict]:
    grid = bench["grid"]
    keys = list(grid)
    runs = []
    for values in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, values))
        if point["normalize"] == "auto":
            point["normalize"] = point["ratios"] > 0
        runs.append(point)
    return runs


def _bench_one(bench: dict, point: dict) -> dict:
    gs, gt, truth = _bench_inputs(bench["inputs"])
    opts = dict(bench["options"], strategy=point["strategy"], diffusion=point["diffusion"],
                steps=int(point["steps"]), k=int(point["k"]),
                normalize=bool(point["normalize"]), seed=int(point["seeds"]))
    if point["ratios"]:
        gt = perturb_edges(gt, float(point["ratios"]), opts["seed"] + 1)
    result = run_iteralign(gs, gt, _align_config(opts))
    report = evaluate(result, truth, rank_mode=opts["rank_mode"])
    return report.csv_row({"ratio": point["ratios"], "run_seed": point["seeds"]})


def cmd_bench(args) -> int:
    bench = load_bench_config(args.config)
    runs = bench_runs(bench)
    with _threads():
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(_bench_one, [bench] * len(runs), runs))
        else:
            rows = [_bench_one(bench, point) for point in runs]
    text = csv_text(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"{len(rows)} runs written to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_pair_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--source", required=True, help="source graph edge list")
    p.add_argument("--target", required=True, help="target graph edge list")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iteralign",
                                     description="Unsupervised plain graph alignment.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align two graphs and write a report")
    _add_pair_args(p)
    p.add_argument("--truth", help="ground-truth correspondence file")
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="optimal")
    p.add_argument("--steps", type=int, default=5, help="diffusion steps T")
    p.add_argument("--k", type=int, default=20, help="pairs matched per iteration")
    p.add_argument("--diffusion", choices=["rw", "sym", "sym-selfloop"], default="sym-selfloop")
    p.add_argument("--normalize", action="store_true", help="L2-normalise embeddings")
    p.add_argument("--reorder-anchored", action="store_true",
                   help="also sort anchored embeddings (iterations >= 2)")
    p.add_argument("--degree-threshold", type=int, default=6)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0,
                   help="fraction of target edges to remove before aligning")
    p.add_argument("--source-noise", type=float, default=0.0,
                   help="fraction of source edges to remove before aligning")
    p.add_argument("--rank-mode", choices=RANK_MODES, default="final")
    p.add_argument("--out", help="report path; pairs and manifest are written beside it")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("tub", help="WL equivalence classes and the accuracy upper bound")
    _add_pair_args(p)
    p.set_defaults(func=cmd_tub)

    p = sub.add_parser("perturb", help="remove edges without isolating nodes")
    p.add_argument("--graph", required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("bench", help="run a parameter sweep and emit CSV")
    p.add_argument("--config", required=True, help="TOML sweep specification")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("replay", help="re-run an align manifest")
    p.add_argument("manifest")
    p.add_argument("--out", help="report path (default: stdout)")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, GraphParseError, BenchConfigError, json.JSONDecodeError, KeyError) as exc:
        print(f"iteralign: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PerturbationInfeasible, IsolatedNodeError, InfeasibleMatchingError,
            DiffusionNumericError, ValueError) as exc:
        print(f"iteralign: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
