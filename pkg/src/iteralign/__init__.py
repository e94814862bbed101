"""Unsupervised plain graph alignment with heat diffusion and iterative anchors.

Typical use::

    from iteralign import parse_edge_list, run_iteralign, AlignConfig

    gs, _ = parse_edge_list(open("source.edges").read())
    gt, _ = parse_edge_list(open("target.edges").read())
    result = run_iteralign(gs, gt, AlignConfig(k_per_iter=20))
"""

from .diffusion import (DiffusionConfig, DiffusionKind, build_diffusion_matrix, diffuse,
                        init_features_anchored, init_features_identity)
from .driver import (AlignConfig, AlignmentResult, AnchorSet, Strategy, run_iteralign,
                     select_high_degree_candidates)
from .evaluation import (EvalReport, RankTable, build_rank_table, evaluate, hits_at_q,
                         matching_accuracy, mrr, rank_targets)
from .features import PostprocessConfig, normalize_rows, pad_to_common_dim, reorder_rows
from .graph import (Graph, GraphParseError, GroundTruth, NodeLabelMap, PerturbationInfeasible,
                    erdos_renyi, parse_correspondences, parse_edge_list, perturb_edges,
                    permuted_pair, read_correspondences, read_edge_list)
from .matching import (InfeasibleMatchingError, Matching, SparseDistanceMatrix,
                       brute_force_match, fast_match, optimal_match, pairwise_distances,
                       sparsify_rows)
from .wl import ColorAssignment, tub, wl_refine

__version__ = "0.1.0"

__all__ = [
    "AlignConfig", "AlignmentResult", "AnchorSet", "ColorAssignment", "DiffusionConfig",
    "DiffusionKind", "EvalReport", "Graph", "GraphParseError", "GroundTruth",
    "InfeasibleMatchingError", "Matching", "NodeLabelMap", "PerturbationInfeasible",
    "PostprocessConfig", "RankTable", "SparseDistanceMatrix", "Strategy",
    "brute_force_match", "build_diffusion_matrix", "build_rank_table", "diffuse",
    "erdos_renyi", "evaluate", "fast_match", "hits_at_q", "init_features_anchored",
    "init_features_identity", "matching_accuracy", "mrr", "normalize_rows",
    "optimal_match", "pad_to_common_dim", "pairwise_distances", "parse_correspondences",
    "parse_edge_list", "permuted_pair", "perturb_edges", "rank_targets",
    "read_correspondences", "read_edge_list", "reorder_rows", "run_iteralign",
    "select_high_degree_candidates", "sparsify_rows", "tub", "wl_refine",
]
