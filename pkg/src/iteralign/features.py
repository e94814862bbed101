"""Post-processing that makes independently diffused embeddings comparable."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PostprocessConfig:
    normalize: bool = False
    # Anchored embeddings share one column per anchor pair across both graphs,
    # so sorting them discards the correspondence; off unless requested.
    reorder_anchored: bool = False


def reorder_rows(h: np.ndarray) -> np.ndarray:
    """Sort every row ascending.

    The sorted profile ignores which column carries which value, which is
    exactly the information that differs between two independently labelled
    graphs.
    """
    return np.sort(np.asarray(h), axis=1)


def normalize_rows(h: np.ndarray) -> np.ndarray:
    """Scale each non-zero row to unit L2 norm; zero rows stay zero."""
    h = np.asarray(h)
    norms = np.linalg.norm(h.astype(np.float64), axis=1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    return (h / safe).astype(h.dtype, copy=False)


def pad_to_common_dim(hs: np.ndarray, ht: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left-pad the narrower matrix with zero columns.

    Rows are expected to be sorted ascending, so left padding keeps the large
    tail entries of both matrices aligned.
    """
    width = max(hs.shape[1], ht.shape[1])

    def pad(h):
        missing = width - h.shape[1]
        if missing == 0:
            return h
        return np.pad(h, ((0, 0), (missing, 0)))

    return pad(hs), pad(ht)


def postprocess(hs: np.ndarray, ht: np.ndarray, config: PostprocessConfig,
                reorder: bool = True) -> tuple[np.ndarray, np.ndarray]:
    if reorder:
        hs, ht = reorder_rows(hs), reorder_rows(ht)
    if config.normalize:
        hs, ht = normalize_rows(hs), normalize_rows(ht)
    return pad_to_common_dim(hs, ht)
