"""Feature triplet loss and mask confirmation loss."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import FEATURE_DIM, BinaryMask, mask_iou
from .errors import DimensionError, EmptyInputError

MAX_SUBSET = 9
DEFAULT_MARGIN = 2.0


def _stack(vectors, name):
    if len(vectors) == 0:
        raise EmptyInputError(f"{name} set is empty")
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != FEATURE_DIM:
        raise DimensionError(f"{name} vectors must have length {FEATURE_DIM}")
    return arr


def feature_similarity_losses(f_anchor, matching, nonmatching) -> tuple[float, float]:
    """Mean L1 distance from the anchor to the matching and non-matching sets.

    The L1 distance is summed over all components. Callers are responsible
    for capping set sizes (see :func:`sample_capped`).

    Returns
    -------
    (similarity, dissimilarity) : tuple of float
    """
    anchor = np.asarray(f_anchor, dtype=np.float64)
    if anchor.shape != (FEATURE_DIM,):
        raise DimensionError(f"anchor must have length {FEATURE_DIM}")
    pos = _stack(matching, "matching")
    neg = _stack(nonmatching, "nonmatching")
    l_sim = np.abs(pos - anchor).sum(axis=1).mean()
    l_dis = np.abs(neg - anchor).sum(axis=1).mean()
    return float(l_sim), float(l_dis)


def feature_triplet_loss(per_object: Sequence[tuple[float, float]], margin: float = DEFAULT_MARGIN) -> float:
    """Hinge ``max(L_sim - L_dis + margin, 0)`` averaged over objects."""
    if len(per_object) == 0:
        raise EmptyInputError("no objects to average over")
    if margin < 0:
        raise ValueError("margin must be >= 0")
    terms = np.asarray(per_object, dtype=np.float64).reshape(-1, 2)
    hinge = np.maximum(terms[:, 0] - terms[:, 1] + margin, 0.0)
    return float(hinge.mean())


def mask_confirmation_loss(candidates: Sequence[tuple[BinaryMask, BinaryMask, float]]) -> float:
    """Mean absolute gap between each mask score and its true IoU."""
    if len(candidates) == 0:
        raise EmptyInputError("no candidates")
    gaps = [abs(mask_iou(est, gt) - float(score)) for est, gt, score in candidates]
    return float(np.mean(gaps))


def sample_capped(features, rng: np.random.Generator, cap: int = MAX_SUBSET) -> list:
    """Uniform subset of at most ``cap`` items, drawn without replacement."""
    items = list(features)
    if len(items) <= cap:
        return items
    idx = np.sort(rng.choice(len(items), size=cap, replace=False))
    return [items[i] for i in idx]
