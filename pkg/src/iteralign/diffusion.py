"""Discrete heat diffusion on graphs.

The continuous process ``dH/dt = -L H`` is integrated with explicit Euler at
a unit step, so ``T`` steps amount to ``H_T = Q^T H_0`` for a one-step
propagation matrix ``Q``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .graph import Graph

FLOAT = np.float32


class DiffusionKind(str, enum.Enum):
    RANDOM_WALK = "rw"
    SYMMETRIC = "sym"
    SYMMETRIC_SELF_LOOP = "sym-selfloop"


class IsolatedNodeError(ValueError):
    pass


class DiffusionNumericError(FloatingPointError):
    pass


@dataclass(frozen=True)
class DiffusionConfig:
    kind: DiffusionKind = DiffusionKind.SYMMETRIC_SELF_LOOP
    steps: int = 5

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DiffusionKind(self.kind))
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


def build_diffusion_matrix(graph: Graph, kind: DiffusionKind | str) -> sp.csr_matrix:
    """One-step diffusion matrix ``Q`` of ``graph``.

    ``rw`` gives ``D^-1 A``, ``sym`` gives ``D^-1/2 A D^-1/2`` and
    ``sym-selfloop`` gives ``I + D^-1/2 A D^-1/2``.
    """
    kind = DiffusionKind(kind)
    deg = graph.degrees
    isolated = np.flatnonzero(deg == 0)
    if isolated.size:
        raise IsolatedNodeError(
            f"{isolated.size} isolated node(s), e.g. {isolated[0]}; diffusion "
            "needs every degree >= 1 (check perturbation feasibility)")
    adj = graph.adjacency.astype(np.float64)
    if kind is DiffusionKind.RANDOM_WALK:
        q = sp.diags(1.0 / deg) @ adj
    else:
        inv_sqrt = sp.diags(1.0 / np.sqrt(deg))
        q = inv_sqrt @ adj @ inv_sqrt
        if kind is DiffusionKind.SYMMETRIC_SELF_LOOP:
            q = q + sp.identity(graph.node_count, format="csr")
    q = sp.csr_matrix(q, dtype=FLOAT)
    q.sort_indices()
    return q


def init_features_identity(graph: Graph) -> sp.csr_matrix:
    """One-hot initial features, ``H_0 = I``."""
    return sp.identity(graph.node_count, dtype=FLOAT, format="csr")


def init_features_anchored(source: Graph, target: Graph,
                           anchors: Sequence[tuple[int, int]]
                           ) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Shared one-hot features for anchor pairs, zero rows elsewhere.

    The ``i``-th anchor pair ``(u, v)`` receives basis vector ``e_i`` in
    both graphs, so the feature columns of the two graphs line up.
    """
    anchors = np.asarray(anchors, dtype=np.int64).reshape(-1, 2)
    if anchors.shape[0] == 0:
        raise ValueError("anchored initialisation needs at least one anchor; "
                         "use init_features_identity")
    k = anchors.shape[0]
    u, v = anchors[:, 0], anchors[:, 1]
    if u.min() < 0 or u.max() >= source.node_count:
        raise ValueError("anchor source index out of range")
    if v.min() < 0 or v.max() >= target.node_count:
        raise ValueError("anchor target index out of range")
    cols = np.arange(k)
    ones = np.ones(k, dtype=FLOAT)
    hs = sp.csr_matrix((ones, (u, cols)), shape=(source.node_count, k))
    ht = sp.csr_matrix((ones, (v, cols)), shape=(target.node_count, k))
    return hs, ht


def diffuse(q: sp.spmatrix, h0, steps: int) -> np.ndarray:
    """Return ``Q^steps @ h0`` as a dense float32 array.

    Computed as ``steps`` successive sparse-dense products; the matrix power
    is never formed.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if q.shape[0] != q.shape[1]:
        raise ValueError(f"diffusion matrix must be square, got {q.shape}")
    if q.shape[1] != h0.shape[0]:
        raise ValueError(f"dimension mismatch: Q is {q.shape}, H0 has {h0.shape[0]} rows")
    q = sp.csr_matrix(q, dtype=FLOAT)
    # First product keeps H0's sparsity; densify afterwards.
    h = q @ h0
    h = h.toarray() if sp.issparse(h) else np.asarray(h)
    h = np.ascontiguousarray(h, dtype=FLOAT)
    _check_finite(h, 1)
    for step in range(2, steps + 1):
        h = q @ h
        _check_finite(h, step)
    return h


def _check_finite(h: np.ndarray, step: int) -> None:
    if not np.isfinite(h).all():
        raise DiffusionNumericError(f"non-finite feature values after step {step}")
