"""
Domain types and geometry helpers
=================================

Pixel coordinates follow the image convention used everywhere in the
package: ``x`` is the column index, ``y`` the row index, and pixel
``(x, y)`` is sampled at integer coordinates. Grids are stored row-major,
i.e. ``array[y, x]``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, EmptyInputError, ObjflowError

FEATURE_DIM = 256

# Middlebury convention: components at or above this magnitude mark an
# unknown / invalid flow sample.
UNKNOWN_FLOW_THRESH = 1e9
UNKNOWN_FLOW = 1e10


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean occupancy grid of shape ``(height, width)``."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.shape[0] == 0 or bits.shape[1] == 0:
            raise DimensionError(f"mask must be a nonempty 2-D grid, got shape {bits.shape}")
        object.__setattr__(self, "bits", _readonly(bits.astype(bool)))

    @classmethod
    def from_pixels(cls, width: int, height: int, pixels: Iterable[tuple[int, int]]) -> "BinaryMask":
        bits = np.zeros((height, width), dtype=bool)
        for x, y in pixels:
            bits[y, x] = True
        return cls(bits)

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.bits))

    def bbox(self) -> tuple[int, int, int, int]:
        """Tight ``(x_min, y_min, x_max, y_max)`` box, inclusive."""
        ys, xs = np.nonzero(self.bits)
        if xs.size == 0:
            raise EmptyInputError("bounding box of an empty mask is undefined")
        return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    __hash__ = None

    def __repr__(self):
        return f"BinaryMask({self.width}x{self.height}, area={self.area})"


def mask_iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union of two masks; 0 when both are empty."""
    if a.bits.shape != b.bits.shape:
        raise DimensionError(f"mask shapes differ: {a.bits.shape} vs {b.bits.shape}")
    union = np.count_nonzero(a.bits | b.bits)
    if union == 0:
        return 0.0
    return np.count_nonzero(a.bits & b.bits) / union


def mask_centroid(m: BinaryMask) -> tuple[float, float]:
    """Mean ``(x, y)`` of the set pixels."""
    ys, xs = np.nonzero(m.bits)
    if xs.size == 0:
        raise EmptyInputError("centroid of an empty mask is undefined")
    return float(xs.mean(dtype=np.float64)), float(ys.mean(dtype=np.float64))


# -- run-length encoding ---------------------------------------------------

def rle_encode(mask: BinaryMask) -> list[int]:
    """Alternating run lengths of 0s and 1s in row-major order.

    The first count is always the number of leading zeros (possibly 0).
    """
    flat = mask.bits.ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(counts: Sequence[int], width: int, height: int) -> BinaryMask:
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ObjflowError("negative run length in RLE")
    if sum(counts) != width * height:
        raise DimensionError(f"RLE covers {sum(counts)} pixels, expected {width * height}")
    values = np.zeros(len(counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, counts)
    return BinaryMask(flat.reshape(height, width))


# -- candidates ------------------------------------------------------------

class Frame(str, enum.Enum):
    REF = "ref"
    TGT = "tgt"


@dataclass(frozen=True, eq=False)
class InstanceCandidate:
    """One detected object proposal in either frame.

    ``bbox`` must be the tight box of ``mask``; use :meth:`from_mask` to
    have it computed.
    """

    id: int
    frame: Frame
    mask: BinaryMask
    bbox: tuple[int, int, int, int]
    objectness: float
    mask_score: float
    feature: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))
        feat = np.asarray(self.feature, dtype=np.float64)
        if feat.shape != (FEATURE_DIM,):
            raise DimensionError(f"feature must have length {FEATURE_DIM}, got shape {feat.shape}")
        object.__setattr__(self, "feature", _readonly(feat))
        bbox = tuple(int(v) for v in self.bbox)
        if bbox != self.mask.bbox():
            raise ObjflowError(f"bbox {bbox} is not the tight box {self.mask.bbox()} of the mask")
        object.__setattr__(self, "bbox", bbox)
        for name in ("objectness", "mask_score"):
            val = float(getattr(self, name))
            if not 0.0 <= val <= 1.0:
                raise ObjflowError(f"{name} must lie in [0, 1], got {val}")
            object.__setattr__(self, name, val)

    @classmethod
    def from_mask(cls, id, frame, mask, objectness, mask_score, feature):
        return cls(id, frame, mask, mask.bbox(), objectness, mask_score, feature)

    @property
    def area(self) -> int:
        return self.mask.area

    def __eq__(self, other):
        if not isinstance(other, InstanceCandidate):
            return NotImplemented
        return (
            self.id == other.id
            and self.frame == other.frame
            and self.bbox == other.bbox
            and self.objectness == other.objectness
            and self.mask_score == other.mask_score
            and self.mask == other.mask
            and bool(np.array_equal(self.feature, other.feature))
        )

    __hash__ = None

    def __repr__(self):
        return (f"InstanceCandidate(id={self.id!r}, frame={self.frame.value}, area={self.area}, "
                f"o={self.objectness:.3f}, s={self.mask_score:.3f})")


def candidate_to_dict(c: InstanceCandidate) -> dict:
    return {
        "frame": c.frame.value,
        "id": c.id,
        "bbox": list(c.bbox),
        "objectness": c.objectness,
        "mask_score": c.mask_score,
        "feature": [float(v) for v in c.feature],
        "mask_rle": rle_encode(c.mask),
    }


def candidate_from_dict(d: dict, width: int, height: int) -> InstanceCandidate:
    try:
        mask = rle_decode(d["mask_rle"], width, height)
        return InstanceCandidate(
            id=int(d["id"]),
            frame=Frame(d["frame"]),
            mask=mask,
            bbox=tuple(d["bbox"]),
            objectness=d["objectness"],
            mask_score=d["mask_score"],
            feature=d["feature"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ObjflowError):
            raise
        raise ObjflowError(f"malformed candidate record: {exc}") from exc


def dump_candidates(candidates: Iterable[InstanceCandidate], width: int, height: int) -> str:
    """Serialize a candidate set (both frames) to a JSON document."""
    doc = {
        "width": width,
        "height": height,
        "candidates": [candidate_to_dict(c) for c in candidates],
    }
    return json.dumps(doc)


def load_candidates(text: str) -> tuple[list[InstanceCandidate], list[InstanceCandidate], int, int]:
    """Parse a candidate document into ``(ref, tgt, width, height)``."""
    try:
        doc = json.loads(text)
        width, height = int(doc["width"]), int(doc["height"])
        records = doc["candidates"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ObjflowError(f"malformed candidate document: {exc}") from exc
    if width <= 0 or height <= 0:
        raise DimensionError(f"nonpositive candidate canvas {width}x{height}")
    cands = [candidate_from_dict(r, width, height) for r in records]
    ref = [c for c in cands if c.frame is Frame.REF]
    tgt = [c for c in cands if c.frame is Frame.TGT]
    return ref, tgt, width, height


# -- flow fields -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlowField:
    """Dense ``(height, width, 2)`` grid of ``(u, v)`` displacements.

    Stored as float32 unless float64 data is passed in, in which case the
    double-precision values are kept (useful for in-memory intermediates).
    Samples with a component magnitude >= ``UNKNOWN_FLOW_THRESH`` are
    treated as invalid; NaN and infinity are rejected outright.
    """

    vectors: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vectors)
        if vec.ndim != 3 or vec.shape[2] != 2 or vec.shape[0] == 0 or vec.shape[1] == 0:
            raise DimensionError(f"flow must have shape (h, w, 2), got {vec.shape}")
        if vec.dtype != np.float64:
            vec = vec.astype(np.float32)
        if not np.all(np.isfinite(vec)):
            raise ObjflowError("flow contains NaN or infinite values")
        object.__setattr__(self, "vectors", _readonly(vec))

    @classmethod
    def zeros(cls, width: int, height: int, dtype=np.float32) -> "FlowField":
        return cls(np.zeros((height, width, 2), dtype=dtype))

    @classmethod
    def constant(cls, width: int, height: int, uv, dtype=np.float32) -> "FlowField":
        vec = np.empty((height, width, 2), dtype=dtype)
        vec[...] = np.asarray(uv, dtype=dtype)
        return cls(vec)

    @property
    def width(self) -> int:
        return self.vectors.shape[1]

    @property
    def height(self) -> int:
        return self.vectors.shape[0]

    @property
    def u(self) -> np.ndarray:
        return self.vectors[..., 0]

    @property
    def v(self) -> np.ndarray:
        return self.vectors[..., 1]

    def valid(self) -> np.ndarray:
        return np.all(np.abs(self.vectors) < UNKNOWN_FLOW_THRESH, axis=-1)

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.vectors[..., 0].astype(np.float64), self.vectors[..., 1].astype(np.float64))

    def __eq__(self, other):
        if not isinstance(other, FlowField):
            return NotImplemented
        return self.vectors.shape == other.vectors.shape and bool(np.array_equal(self.vectors, other.vectors))

    __hash__ = None

    def __repr__(self):
        return f"FlowField({self.width}x{self.height}, {self.vectors.dtype})"


@dataclass(frozen=True, eq=False)
class GroundTruthObject:
    """Rigid motion ``p -> R(rotation) (p - pivot) + pivot + translation``."""

    object_id: int
    mask_ref: BinaryMask
    mask_tgt: BinaryMask
    translation: tuple[float, float]
    rotation: float
    pivot: tuple[float, float]
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.object_id < 1:
            raise ObjflowError("object ids start at 1; 0 is the background")

    def transform(self, x, y):
        """Map reference-frame points to the target frame."""
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        px, py = self.pivot
        tx, ty = self.translation
        dx, dy = np.asarray(x, dtype=np.float64) - px, np.asarray(y, dtype=np.float64) - py
        return c * dx - s * dy + px + tx, s * dx + c * dy + py + ty
