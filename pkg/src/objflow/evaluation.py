"""
Average endpoint error with ground-truth-magnitude bins.

Bins are lower-inclusive and upper-exclusive; the last bin is open
(``[140, inf)`` with the default edges). Dataset-level numbers are
pixel-weighted unless ``weighting="image"`` is requested.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import FlowField
from .errors import ConfigError, DimensionError, EmptyInputError

DEFAULT_BIN_EDGES = (0.0, 10.0, 60.0, 140.0)
DEFAULT_EXCLUSION_LIMIT = 2000.0


def bin_names(edges: Sequence[float]) -> list[str]:
    def fmt(x):
        return str(int(x)) if float(x).is_integer() else str(x).replace(".", "p")

    names = [f"d_{fmt(lo)}_{fmt(hi)}" for lo, hi in zip(edges[:-1], edges[1:])]
    names.append(f"d_{fmt(edges[-1])}p")
    return names


def _check_edges(edges):
    edges = tuple(float(e) for e in edges)
    if not edges or edges[0] != 0 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ConfigError(f"bin edges must start at 0 and increase strictly, got {edges}")
    return edges


@dataclass
class AeeReport:
    aee: float
    bin_aee: dict[str, float]
    bin_counts: dict[str, int]
    excluded: bool = False
    bin_edges: tuple = DEFAULT_BIN_EDGES
    n_images: int = 1

    @property
    def pixel_count(self) -> int:
        return sum(self.bin_counts.values())

    def to_dict(self) -> dict:
        def clean(x):
            return None if isinstance(x, float) and math.isnan(x) else x

        return {
            "aee": clean(self.aee),
            "bin_aee": {k: clean(v) for k, v in self.bin_aee.items()},
            "bin_counts": dict(self.bin_counts),
            "excluded": self.excluded,
            "bin_edges": list(self.bin_edges),
            "n_images": self.n_images,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AeeReport":
        def nan(x):
            return float("nan") if x is None else float(x)

        return cls(
            aee=nan(d["aee"]),
            bin_aee={k: nan(v) for k, v in d["bin_aee"].items()},
            bin_counts={k: int(v) for k, v in d["bin_counts"].items()},
            excluded=bool(d.get("excluded", False)),
            bin_edges=tuple(d.get("bin_edges", DEFAULT_BIN_EDGES)),
            n_images=int(d.get("n_images", 1)),
        )

    def csv_row(self) -> list[float]:
        return [self.aee] + [self.bin_aee[k] for k in bin_names(self.bin_edges)]


def endpoint_error(estimate: FlowField, truth: FlowField) -> np.ndarray:
    if estimate.vectors.shape != truth.vectors.shape:
        raise DimensionError(f"estimate is {estimate.width}x{estimate.height}, "
                             f"truth is {truth.width}x{truth.height}")
    diff = estimate.vectors.astype(np.float64) - truth.vectors.astype(np.float64)
    return np.hypot(diff[..., 0], diff[..., 1])


def aee(estimate: FlowField, truth: FlowField, bin_edges: Sequence[float] = DEFAULT_BIN_EDGES) -> AeeReport:
    """Mean endpoint error over valid ground-truth pixels, overall and per bin."""
    edges = _check_edges(bin_edges)
    epe = endpoint_error(estimate, truth)
    valid = truth.valid()
    if not valid.any():
        raise EmptyInputError("ground truth has no valid pixels")
    epe = epe[valid]
    mag = truth.magnitude()[valid]
    idx = np.searchsorted(np.asarray(edges), mag, side="right") - 1
    names = bin_names(edges)
    bin_aee, counts = {}, {}
    for b, name in enumerate(names):
        sel = idx == b
        counts[name] = int(sel.sum())
        bin_aee[name] = float(epe[sel].mean()) if counts[name] else float("nan")
    return AeeReport(float(epe.mean()), bin_aee, counts, False, edges)


def should_exclude(truth: FlowField, limit: float = DEFAULT_EXCLUSION_LIMIT, mode: str = "magnitude") -> bool:
    """True when the largest ground-truth flow strictly exceeds ``limit``.

    ``mode="magnitude"`` compares per-pixel vector norms, ``"component"``
    the largest absolute component.
    """
    valid = truth.valid()
    if not valid.any():
        return False
    if mode == "magnitude":
        peak = truth.magnitude()[valid].max()
    elif mode == "component":
        peak = np.abs(truth.vectors[valid]).max()
    else:
        raise ConfigError(f"unknown exclusion mode {mode!r}")
    return bool(peak > limit)


def aggregate_reports(reports: Sequence[AeeReport], weighting: str = "pixel") -> AeeReport:
    """Merge per-image reports, skipping excluded ones.

    ``"pixel"`` weights each bin by its pixel count; ``"image"`` averages
    the per-image numbers, each nonempty bin counting once per image.
    """
    kept = [r for r in reports if not r.excluded]
    if not kept:
        raise EmptyInputError("every report is excluded")
    edges = kept[0].bin_edges
    if any(tuple(r.bin_edges) != tuple(edges) for r in kept):
        raise ConfigError("reports use different bin edges")
    names = bin_names(edges)
    counts = {n: sum(r.bin_counts[n] for r in kept) for n in names}
    bin_aee = {}
    if weighting == "pixel":
        for n in names:
            total = sum(r.bin_counts[n] * r.bin_aee[n] for r in kept if r.bin_counts[n])
            bin_aee[n] = total / counts[n] if counts[n] else float("nan")
        npix = sum(counts.values())
        overall = sum(counts[n] * bin_aee[n] for n in names if counts[n]) / npix
    elif weighting == "image":
        for n in names:
            vals = [r.bin_aee[n] for r in kept if r.bin_counts[n]]
            bin_aee[n] = float(np.mean(vals)) if vals else float("nan")
        overall = float(np.mean([r.aee for r in kept]))
    else:
        raise ConfigError(f"unknown weighting {weighting!r}")
    return AeeReport(float(overall), bin_aee, counts, False, edges, sum(r.n_images for r in kept))


def csv_table(rows: Sequence[tuple[str, AeeReport]]) -> str:
    """Tables-style CSV: one row per method, overall AEE then bins."""
    if not rows:
        raise EmptyInputError("no rows")
    edges = rows[0][1].bin_edges
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "AEE"] + bin_names(edges))
    for method, rep in rows:
        writer.writerow([method] + [f"{x:.4f}" for x in rep.csv_row()])
    return buf.getvalue()
