"""Deterministic k-means on 2-D points and the elbow (compactness) search."""

from __future__ import annotations

import numpy as np

MAX_ITER = 100


def farthest_point_seeds(points: np.ndarray, k: int) -> np.ndarray:
    """Start at point 0, then repeatedly take the point farthest from all seeds."""
    seeds = [0]
    d2 = ((points - points[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        j = int(np.argmax(d2))
        seeds.append(j)
        d2 = np.minimum(d2, ((points - points[j]) ** 2).sum(axis=1))
    return points[seeds].copy()


def kmeans(points, k: int, max_iter: int = MAX_ITER):
    """Lloyd iterations until the assignment stops changing.

    Returns ``(labels, centers, inertia)``; inertia is the sum of squared
    distances of each point to its assigned center.
    """
    pts = np.asarray(points, dtype=np.float64)
    centers = farthest_point_seeds(pts, k)
    labels = None
    for _ in range(max_iter):
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(k):
            members = pts[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    inertia = float(((pts - centers[labels]) ** 2).sum())
    return labels, centers, inertia


def elbow_partition(points, compactness: float, max_k: int):
    """Smallest ``k`` whose k-means inertia is within ``compactness``.

    Falls back to the largest tried ``k`` when none qualifies. Returns the
    label array (empty clusters removed, labels renumbered by first
    occurrence) and the inertia of the chosen partition.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    top = max(1, min(max_k, n))
    for k in range(1, top + 1):
        labels, _, inertia = kmeans(pts, k)
        if inertia <= compactness:
            break
    _, first = np.unique(labels, return_index=True)
    remap = {int(labels[i]): r for r, i in enumerate(sorted(first))}
    return np.array([remap[int(l)] for l in labels], dtype=int), inertia
