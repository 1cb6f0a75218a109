"""Translation field rasterization and pyramid injection arithmetic."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import FlowField, InstanceCandidate, mask_centroid
from .errors import ConfigError, DimensionError, MissingLevelError, UnresolvedIdError
from .matching import MatchSet

INJECTION_LEVELS = (4, 5, 6)


def rasterize_translation_field(matches: MatchSet, ref_candidates: Sequence[InstanceCandidate],
                                tgt_candidates: Sequence[InstanceCandidate],
                                width: int, height: int) -> FlowField:
    """Piecewise-constant field from matched mask centroids.

    Every pixel of a matched reference mask receives
    ``centroid(target mask) - centroid(reference mask)``; all other pixels
    stay zero. Pairs are written in list order, so later pairs win where
    reference masks overlap.
    """
    ref_by_id = {c.id: c for c in ref_candidates}
    tgt_by_id = {c.id: c for c in tgt_candidates}
    out = np.zeros((height, width, 2), dtype=np.float32)
    for rid, tid, _ in matches.pairs:
        try:
            r, t = ref_by_id[rid], tgt_by_id[tid]
        except KeyError as exc:
            raise UnresolvedIdError(f"match refers to unknown candidate id {exc.args[0]!r}") from None
        for c in (r, t):
            if (c.mask.width, c.mask.height) != (width, height):
                raise DimensionError(f"candidate {c.id} mask is {c.mask.width}x{c.mask.height}, "
                                     f"field is {width}x{height}")
        rx, ry = mask_centroid(r.mask)
        tx, ty = mask_centroid(t.mask)
        out[r.mask.bits] = (tx - rx, ty - ry)
    return FlowField(out)


def downsample_flow(field: FlowField, level: int, mask_aware: bool = False) -> FlowField:
    """Bring a full-resolution field to pyramid ``level`` (1 = full resolution).

    Each step averages 2x2 blocks and halves the vectors. With
    ``mask_aware`` only nonzero vectors enter the block average (all-zero
    blocks stay zero). The result is kept in double precision.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    factor = 2 ** (level - 1)
    if field.width % factor or field.height % factor:
        raise DimensionError(f"{field.width}x{field.height} is not divisible by {factor} for level {level}")
    vec = field.vectors.astype(np.float64)
    for _ in range(level - 1):
        h, w = vec.shape[0] // 2, vec.shape[1] // 2
        blocks = vec.reshape(h, 2, w, 2, 2)
        if mask_aware:
            weight = np.any(blocks != 0, axis=-1, keepdims=True).astype(np.float64)
            total = weight.sum(axis=(1, 3))
            summed = (blocks * weight).sum(axis=(1, 3))
            vec = np.divide(summed, total, out=np.zeros_like(summed), where=total > 0)
        else:
            vec = blocks.mean(axis=(1, 3))
        vec = vec * 0.5
    return FlowField(vec)


@dataclass(frozen=True)
class PyramidInjectionConfig:
    alphas: Mapping[int, float] = field(default_factory=lambda: {4: 1.0, 5: 1.0, 6: 1.0})
    mask_aware: bool = False

    def __post_init__(self):
        alphas = {int(k): float(v) for k, v in dict(self.alphas).items()}
        bad = set(alphas) - set(INJECTION_LEVELS)
        if bad:
            raise ConfigError(f"injection levels must be within {INJECTION_LEVELS}, got {sorted(bad)}")
        if not all(np.isfinite(a) for a in alphas.values()):
            raise ConfigError("alpha weights must be finite")
        object.__setattr__(self, "alphas", dict(sorted(alphas.items())))

    @classmethod
    def from_dict(cls, d: dict) -> "PyramidInjectionConfig":
        unknown = set(d) - {"alphas", "mask_aware"}
        if unknown:
            raise ConfigError(f"unknown injection keys: {sorted(unknown)}")
        kwargs = {}
        if "alphas" in d:
            kwargs["alphas"] = d["alphas"]
        if "mask_aware" in d:
            kwargs["mask_aware"] = bool(d["mask_aware"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {"alphas": {str(k): v for k, v in self.alphas.items()}, "mask_aware": self.mask_aware}


def inject_translation_field(base_pyramid: Mapping[int, FlowField], dt: FlowField,
                             cfg: PyramidInjectionConfig = PyramidInjectionConfig()) -> dict[int, FlowField]:
    """Add ``alpha_s * downsample(dt, s)`` to every configured pyramid level.

    Updated levels come back in double precision; levels that are not
    configured, or whose weight is zero, are returned untouched.
    """
    missing = set(cfg.alphas) - set(base_pyramid)
    if missing:
        raise MissingLevelError(f"base pyramid lacks levels {sorted(missing)}")
    out = dict(base_pyramid)
    for level, alpha in cfg.alphas.items():
        base = base_pyramid[level]
        if alpha == 0.0:
            continue
        delta = downsample_flow(dt, level, cfg.mask_aware)
        if delta.vectors.shape != base.vectors.shape:
            raise DimensionError(f"level {level}: base is {base.width}x{base.height}, "
                                 f"downsampled field is {delta.width}x{delta.height}")
        summed = base.vectors.astype(np.float64) + alpha * delta.vectors
        out[level] = FlowField(summed)
    return out


@dataclass(frozen=True)
class FlowStats:
    max_magnitude: float
    mean_magnitude: float
    valid_pixel_count: int


def flow_stats(field: FlowField) -> FlowStats:
    valid = field.valid()
    mag = field.magnitude()[valid]
    if mag.size == 0:
        return FlowStats(0.0, 0.0, 0)
    return FlowStats(float(mag.max()), float(mag.mean()), int(mag.size))
