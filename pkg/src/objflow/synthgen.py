"""
Synthetic two-frame scenes with exact ground truth.

Each object is a flat-colored random star-shaped polygon moving rigidly,
``p -> R(theta) (p - c) + c + t``, with the pivot ``c`` at the centroid of its
reference-frame pixels. Objects with a higher id are drawn on top. The
background is a procedural texture translated as a whole.

Ground truth per sample:

* index maps (0 = background) and visible masks for both frames;
* the full field ``D``: rigid motion of the object visible at each
  reference pixel, background translation elsewhere;
* the translation field ``D_t``: constant per object, equal to the motion
  of the centroid of the object's visible reference pixels. Without
  occlusion this is exactly ``t``.

Translations are rounded to whole pixels so that rotation-free objects
shift by exactly their translation on the pixel grid.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from PIL import Image
from scipy import ndimage
from skimage.draw import polygon as raster_polygon

from .core import (
    FEATURE_DIM,
    BinaryMask,
    FlowField,
    Frame,
    GroundTruthObject,
    InstanceCandidate,
    dump_candidates,
    load_candidates,
    mask_centroid,
)
from .errors import ConfigError, ObjflowError, PlacementError
from .flo import load_flo, save_flo

MAX_PLACEMENT_ATTEMPTS = 100

SAMPLE_FILES = (
    "frame_ref.png",
    "frame_tgt.png",
    "index_ref.png",
    "index_tgt.png",
    "flow_full.flo",
    "flow_translation.flo",
    "candidates.json",
)


def _pair(value, name):
    lo, hi = (float(v) for v in value)
    if lo > hi:
        raise ConfigError(f"{name} is empty: {value}")
    return lo, hi


@dataclass(frozen=True)
class SceneSpec:
    """Scene recipe. Angles are in radians; rotation signs are random."""

    width: int = 512
    height: int = 512
    object_count: int = 8
    translation_range: tuple[float, float] = (50.0, 200.0)
    rotation_range: tuple[float, float] = (math.radians(40), math.radians(80))
    background_translation: tuple[float, float] = (6.0, 2.0)
    seed: int = 0
    radius_range: tuple[float, float] = (36.0, 52.0)
    allow_overlap: bool = True
    margin: int = 4

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("canvas must be nonempty")
        if self.object_count < 0:
            raise ConfigError("object_count must be >= 0")
        for name in ("translation_range", "rotation_range", "radius_range"):
            object.__setattr__(self, name, _pair(getattr(self, name), name))
        if self.translation_range[0] < 0 or self.rotation_range[0] < 0:
            raise ConfigError("translation and rotation ranges are magnitudes and must be >= 0")
        if self.radius_range[0] <= 0:
            raise ConfigError("radius_range must be positive")
        object.__setattr__(self, "background_translation",
                           tuple(float(v) for v in self.background_translation))

    @classmethod
    def small(cls, **overrides) -> "SceneSpec":
        """128 x 128 preset with motion and object size scaled down by four."""
        base = dict(width=128, height=128, object_count=3, translation_range=(12.0, 50.0),
                    radius_range=(9.0, 13.0), background_translation=(2.0, 1.0), margin=3)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        d = dict(d)
        if "rotation_range_deg" in d:
            d["rotation_range"] = tuple(math.radians(v) for v in d.pop("rotation_range_deg"))
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown scene keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}


@dataclass(frozen=True)
class CandidateNoiseSpec:
    """How synthetic detector output deviates from the ground truth.

    ``false_positive_count`` is per scene; each false positive lands in a
    random frame. Duplicates use ``duplicate_extra_erosion`` more pixels of
    erosion than the primary candidate, so they are always smaller.
    """

    feature_sigma: float = 0.02
    duplicate_rate: float = 0.0
    false_positive_count: int = 0
    mask_erosion_px: int = 1
    score_range: tuple[float, float] = (0.92, 1.0)
    seed: int = 0
    false_positive_score_range: tuple[float, float] = (0.2, 0.85)
    duplicate_extra_erosion: int = 2
    hidden_in_target: tuple[int, ...] = ()

    def __post_init__(self):
        if self.feature_sigma < 0:
            raise ConfigError("feature_sigma must be >= 0")
        if not 0 <= self.duplicate_rate <= 1:
            raise ConfigError("duplicate_rate must be a probability")
        if self.false_positive_count < 0 or self.mask_erosion_px < 0 or self.duplicate_extra_erosion < 1:
            raise ConfigError("counts and erosion widths must be nonnegative (extra erosion >= 1)")
        for name in ("score_range", "false_positive_score_range"):
            lo, hi = _pair(getattr(self, name), name)
            if lo < 0 or hi > 1:
                raise ConfigError(f"{name} must lie within [0, 1]")
            object.__setattr__(self, name, (lo, hi))
        object.__setattr__(self, "hidden_in_target", tuple(int(i) for i in self.hidden_in_target))

    @classmethod
    def from_dict(cls, d: dict) -> "CandidateNoiseSpec":
        unknown = set(d) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown noise keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}


@dataclass(frozen=True, eq=False)
class SceneTruth:
    objects: tuple[GroundTruthObject, ...]
    index_map_ref: np.ndarray
    index_map_tgt: np.ndarray
    flow_full: FlowField
    flow_translation: FlowField
    correspondences: tuple[tuple[int, int], ...]
    background_translation: tuple[float, float] = (0.0, 0.0)

    @property
    def width(self) -> int:
        return self.index_map_ref.shape[1]

    @property
    def height(self) -> int:
        return self.index_map_ref.shape[0]

    def object(self, object_id: int) -> GroundTruthObject:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(object_id)


# -- scene generation ------------------------------------------------------

def _background(width, height, params, shift=(0.0, 0.0)):
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    x = x - shift[0]
    y = y - shift[1]
    img = np.empty((height, width, 3))
    for ch, (fx, fy, px, py) in enumerate(params):
        img[..., ch] = 128 + 50 * np.sin(fx * x + px) + 50 * np.sin(fy * y + py) * np.cos(0.5 * fx * x)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def _raster(vx, vy, width, height):
    mask = np.zeros((height, width), dtype=bool)
    rr, cc = raster_polygon(vy, vx, shape=(height, width))
    mask[rr, cc] = True
    return mask


def _shift(mask, tx, ty):
    out = np.zeros_like(mask)
    ys, xs = np.nonzero(mask)
    out[ys + ty, xs + tx] = True
    return out


def _bbox_slices(mask, pad):
    ys, xs = np.nonzero(mask.any(axis=1))[0], np.nonzero(mask.any(axis=0))[0]
    h, w = mask.shape
    return (slice(max(ys[0] - pad, 0), min(ys[-1] + pad + 1, h)),
            slice(max(xs[0] - pad, 0), min(xs[-1] + pad + 1, w)))


def _touches(mask, taken, gap):
    """Whether ``mask`` grown by ``gap`` pixels (8-connected) meets ``taken``."""
    sl = _bbox_slices(mask, gap + 1)
    grow = ndimage.generate_binary_structure(2, 2)
    return bool((ndimage.binary_dilation(mask[sl], grow, gap) & taken[sl]).any())


def _inside(vx, vy, width, height, margin):
    return (vx.min() >= margin and vy.min() >= margin
            and vx.max() <= width - 1 - margin and vy.max() <= height - 1 - margin)


def _sample_motion(rng, spec):
    lo, hi = spec.rotation_range
    theta = rng.uniform(lo, hi) * (1 if rng.random() < 0.5 else -1)
    if theta == 0:
        theta = 0.0
    lo, hi = spec.translation_range
    mag = rng.uniform(lo, hi)
    phi = rng.uniform(0, 2 * np.pi)
    t = (int(round(mag * np.cos(phi))), int(round(mag * np.sin(phi))))
    return theta, t


def _place_object(rng, spec, taken_ref, taken_tgt):
    w, h, m = spec.width, spec.height, spec.margin
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        theta, t = _sample_motion(rng, spec)
        lo, hi = spec.translation_range
        if not lo <= math.hypot(*t) <= hi:
            continue
        radius = rng.uniform(*spec.radius_range)
        n = int(rng.integers(6, 11))
        # jittered even spacing keeps the star polygon compact
        ang = (np.arange(n) + rng.uniform(-0.3, 0.3, n)) * (2 * np.pi / n) + rng.uniform(0, 2 * np.pi)
        rad = radius * rng.uniform(0.75, 1.0, n)
        # centers for which both the reference and the translated sprite fit
        x_lo, x_hi = m + radius - min(0, t[0]), w - 1 - m - radius - max(0, t[0])
        y_lo, y_hi = m + radius - min(0, t[1]), h - 1 - m - radius - max(0, t[1])
        if x_lo > x_hi or y_lo > y_hi:
            continue
        cx, cy = rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi)
        vx, vy = cx + rad * np.cos(ang), cy + rad * np.sin(ang)
        if not _inside(vx, vy, w, h, m):
            continue
        full_ref = _raster(vx, vy, w, h)
        if not full_ref.any():
            continue
        pivot = mask_centroid(BinaryMask(full_ref))
        cos, sin = np.cos(theta), np.sin(theta)
        dx, dy = vx - pivot[0], vy - pivot[1]
        tvx = cos * dx - sin * dy + pivot[0] + t[0]
        tvy = sin * dx + cos * dy + pivot[1] + t[1]
        if not _inside(tvx, tvy, w, h, m):
            continue
        full_tgt = _shift(full_ref, *t) if theta == 0 else _raster(tvx, tvy, w, h)
        if not spec.allow_overlap and (_touches(full_ref, taken_ref, 2) or _touches(full_tgt, taken_tgt, 2)):
            continue
        return dict(vertices=np.stack([vx, vy], axis=1), full_ref=full_ref, full_tgt=full_tgt,
                    theta=float(theta), t=t, pivot=pivot)
    raise PlacementError(f"could not place an object after {MAX_PLACEMENT_ATTEMPTS} attempts")


def rigid_flow(theta, translation, pivot, xs, ys):
    """``R(p - c) + c + t - p`` written as ``(R - I)(p - c) + t``.

    The rearrangement keeps rotation-free motion exactly equal to ``t``.
    """
    cos_m1, sin = np.cos(theta) - 1.0, np.sin(theta)
    dx = np.asarray(xs, dtype=np.float64) - pivot[0]
    dy = np.asarray(ys, dtype=np.float64) - pivot[1]
    return cos_m1 * dx - sin * dy + translation[0], sin * dx + cos_m1 * dy + translation[1]


def generate_scene(spec: SceneSpec):
    """Render one scene.

    Returns
    -------
    frame_ref, frame_tgt : ndarray, uint8, shape (h, w, 3)
    truth : SceneTruth
    """
    rng = np.random.default_rng(spec.seed)
    w, h = spec.width, spec.height
    bg_params = [(rng.uniform(0.02, 0.15), rng.uniform(0.02, 0.15), rng.uniform(0, 2 * np.pi),
                  rng.uniform(0, 2 * np.pi)) for _ in range(3)]
    taken_ref = np.zeros((h, w), dtype=bool)
    taken_tgt = np.zeros((h, w), dtype=bool)
    placed = []
    for _ in range(spec.object_count):
        obj = _place_object(rng, spec, taken_ref, taken_tgt)
        obj["color"] = tuple(int(c) for c in rng.integers(0, 256, 3))
        taken_ref |= obj["full_ref"]
        taken_tgt |= obj["full_tgt"]
        placed.append(obj)

    index_ref = np.zeros((h, w), dtype=np.uint16)
    index_tgt = np.zeros((h, w), dtype=np.uint16)
    for oid, obj in enumerate(placed, start=1):
        index_ref[obj["full_ref"]] = oid
        index_tgt[obj["full_tgt"]] = oid

    bx, by = spec.background_translation
    frame_ref = _background(w, h, bg_params)
    frame_tgt = _background(w, h, bg_params, shift=(bx, by))
    flow_full = np.empty((h, w, 2))
    flow_full[...] = (bx, by)
    flow_trans = flow_full.copy()

    objects = []
    for oid, obj in enumerate(placed, start=1):
        vis_ref = index_ref == oid
        vis_tgt = index_tgt == oid
        frame_ref[vis_ref] = obj["color"]
        frame_tgt[vis_tgt] = obj["color"]
        theta, t, pivot = obj["theta"], obj["t"], obj["pivot"]
        ys, xs = np.nonzero(vis_ref)
        if xs.size:
            fu, fv = rigid_flow(theta, t, pivot, xs, ys)
            flow_full[ys, xs, 0] = fu
            flow_full[ys, xs, 1] = fv
            cu, cv = rigid_flow(theta, t, pivot, *mask_centroid(BinaryMask(vis_ref)))
            flow_trans[ys, xs] = (cu, cv)
        objects.append(GroundTruthObject(
            object_id=oid,
            mask_ref=BinaryMask(vis_ref),
            mask_tgt=BinaryMask(vis_tgt),
            translation=(float(t[0]), float(t[1])),
            rotation=theta,
            pivot=pivot,
            extras={"color": obj["color"], "vertices": obj["vertices"]},
        ))

    correspondences = tuple((o.object_id, o.object_id) for o in objects
                            if o.mask_ref.area and o.mask_tgt.area)
    truth = SceneTruth(
        objects=tuple(objects),
        index_map_ref=index_ref,
        index_map_tgt=index_tgt,
        flow_full=FlowField(flow_full),
        flow_translation=FlowField(flow_trans),
        correspondences=correspondences,
        background_translation=(bx, by),
    )
    return frame_ref, frame_tgt, truth


# -- candidates ------------------------------------------------------------

class SyntheticCandidates(NamedTuple):
    ref: list
    tgt: list
    gt_matching: list
    min_latent_distance: float


def object_latents(n_objects: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random unit vectors, one row per object."""
    lat = rng.normal(size=(n_objects, FEATURE_DIM))
    return lat / np.linalg.norm(lat, axis=1, keepdims=True)


def min_pairwise_distance(vectors: np.ndarray) -> float:
    if len(vectors) < 2:
        return float("inf")
    diff = vectors[:, None, :] - vectors[None, :, :]
    d = np.sqrt((diff ** 2).sum(axis=2))
    return float(d[np.triu_indices(len(vectors), 1)].min())


def _erode(mask, px):
    if px <= 0 or not mask.any():
        return mask
    # pixels outside the canvas count as background, exactly like zero padding
    sl = _bbox_slices(mask, 1)
    out = np.zeros_like(mask)
    out[sl] = ndimage.binary_erosion(mask[sl], iterations=px)
    return out


def synthesize_candidates(truth: SceneTruth, noise: CandidateNoiseSpec = CandidateNoiseSpec()) -> SyntheticCandidates:
    """Detector-like candidates for both frames with a known matching.

    Every visible object yields one primary candidate per frame (feature =
    latent + Gaussian noise, mask = eroded visible mask), optionally a
    smaller duplicate. False positives get random features, small disk
    masks and scores from ``false_positive_score_range``. The returned
    ``gt_matching`` pairs the primary candidates of objects that have one
    in both frames.
    """
    rng = np.random.default_rng(noise.seed)
    w, h = truth.width, truth.height
    latents = object_latents(len(truth.objects), rng)
    lo, hi = noise.score_range
    per_frame = {Frame.REF: [], Frame.TGT: []}
    primary = {}

    def feature(latent):
        return latent + rng.normal(0.0, noise.feature_sigma, FEATURE_DIM) if noise.feature_sigma else latent.copy()

    for frame in (Frame.REF, Frame.TGT):
        for obj, latent in zip(truth.objects, latents):
            if frame is Frame.TGT and obj.object_id in noise.hidden_in_target:
                continue
            vis = (obj.mask_ref if frame is Frame.REF else obj.mask_tgt).bits
            mask = _erode(vis, noise.mask_erosion_px)
            if not mask.any():
                continue
            rec = dict(mask=mask, feature=feature(latent), o=rng.uniform(lo, hi), s=rng.uniform(lo, hi),
                       object_id=obj.object_id, primary=True)
            per_frame[frame].append(rec)
            if rng.random() < noise.duplicate_rate:
                dup = _erode(vis, noise.mask_erosion_px + noise.duplicate_extra_erosion)
                if dup.any():
                    per_frame[frame].append(dict(mask=dup, feature=feature(latent), o=rng.uniform(lo, hi),
                                                 s=rng.uniform(lo, hi), object_id=obj.object_id,
                                                 primary=False))

    flo, fhi = noise.false_positive_score_range
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(noise.false_positive_count):
        frame = Frame.REF if rng.random() < 0.5 else Frame.TGT
        r = rng.uniform(2.0, max(2.0, min(w, h) / 16))
        cx, cy = rng.uniform(0, w - 1), rng.uniform(0, h - 1)
        disk = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        if not disk.any():
            disk[int(round(cy)), int(round(cx))] = True
        per_frame[frame].append(dict(mask=disk, feature=object_latents(1, rng)[0], o=rng.uniform(flo, fhi),
                                     s=rng.uniform(flo, fhi), object_id=0, primary=False))

    out = {}
    next_id = 0
    for frame in (Frame.REF, Frame.TGT):
        recs = per_frame[frame]
        order = rng.permutation(len(recs))
        cands = []
        for k in order:
            rec = recs[k]
            cand = InstanceCandidate.from_mask(next_id, frame, BinaryMask(rec["mask"]), rec["o"], rec["s"],
                                               rec["feature"])
            if rec["primary"]:
                primary[(frame, rec["object_id"])] = next_id
            cands.append(cand)
            next_id += 1
        out[frame] = cands

    gt = sorted((primary[(Frame.REF, oid)], primary[(Frame.TGT, oid)])
                for oid in sorted({o.object_id for o in truth.objects})
                if (Frame.REF, oid) in primary and (Frame.TGT, oid) in primary)
    return SyntheticCandidates(out[Frame.REF], out[Frame.TGT], gt, min_pairwise_distance(latents))


# -- sample I/O ------------------------------------------------------------

def _save_image(arr, path):
    try:
        Image.fromarray(arr).save(path, format="PNG")
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc


def _write_bytes(path, data: bytes | str):
    mode = "wb" if isinstance(data, bytes) else "w"
    try:
        with open(path, mode) as fh:
            fh.write(data)
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc


def write_sample(directory, frames, truth: SceneTruth, candidates: SyntheticCandidates,
                 extra: dict | None = None) -> dict:
    """Write one sample directory and return its manifest."""
    d = Path(directory)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create sample directory {d}: {exc}") from exc
    frame_ref, frame_tgt = frames
    _save_image(frame_ref, d / "frame_ref.png")
    _save_image(frame_tgt, d / "frame_tgt.png")
    _save_image(truth.index_map_ref.astype(np.uint16), d / "index_ref.png")
    _save_image(truth.index_map_tgt.astype(np.uint16), d / "index_tgt.png")
    try:
        save_flo(truth.flow_full, d / "flow_full.flo")
        save_flo(truth.flow_translation, d / "flow_translation.flo")
    except OSError as exc:
        raise OSError(f"failed to write flow files in {d}: {exc}") from exc
    _write_bytes(d / "candidates.json",
                 dump_candidates(list(candidates.ref) + list(candidates.tgt), truth.width, truth.height))
    manifest = {
        "files": list(SAMPLE_FILES),
        "width": truth.width,
        "height": truth.height,
        "background_translation": list(truth.background_translation),
        "objects": [
            {
                "object_id": o.object_id,
                "translation": list(o.translation),
                "rotation": o.rotation,
                "pivot": list(o.pivot),
                "area_ref": o.mask_ref.area,
                "area_tgt": o.mask_tgt.area,
            }
            for o in truth.objects
        ],
        "correspondences": [list(c) for c in truth.correspondences],
        "gt_matching": [list(p) for p in candidates.gt_matching],
        "min_latent_distance": (candidates.min_latent_distance
                                if math.isfinite(candidates.min_latent_distance) else None),
    }
    if extra:
        manifest.update(extra)
    _write_bytes(d / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True))
    return manifest


@dataclass
class Sample:
    frame_ref: np.ndarray
    frame_tgt: np.ndarray
    truth: SceneTruth
    ref: list
    tgt: list
    manifest: dict = field(default_factory=dict)


def load_sample(directory) -> Sample:
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text())
        frame_ref = np.array(Image.open(d / "frame_ref.png"))
        frame_tgt = np.array(Image.open(d / "frame_tgt.png"))
        index_ref = np.array(Image.open(d / "index_ref.png")).astype(np.uint16)
        index_tgt = np.array(Image.open(d / "index_tgt.png")).astype(np.uint16)
        flow_full = load_flo(d / "flow_full.flo")
        flow_trans = load_flo(d / "flow_translation.flo")
        ref, tgt, _, _ = load_candidates((d / "candidates.json").read_text())
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, ObjflowError):
            raise
        raise ObjflowError(f"cannot load sample {d}: {exc}") from exc
    objects = tuple(
        GroundTruthObject(
            object_id=o["object_id"],
            mask_ref=BinaryMask(index_ref == o["object_id"]),
            mask_tgt=BinaryMask(index_tgt == o["object_id"]),
            translation=tuple(o["translation"]),
            rotation=o["rotation"],
            pivot=tuple(o["pivot"]),
        )
        for o in manifest["objects"]
    )
    truth = SceneTruth(objects, index_ref, index_tgt, flow_full, flow_trans,
                       tuple(tuple(c) for c in manifest["correspondences"]),
                       tuple(manifest["background_translation"]))
    return Sample(frame_ref, frame_tgt, truth, ref, tgt, manifest)


def sample_seeds(base_seed: int, index: int) -> tuple[int, int]:
    """Independent (scene, noise) seeds for sample ``index`` of a dataset."""
    s = np.random.SeedSequence([int(base_seed), int(index)]).generate_state(2)
    return int(s[0]), int(s[1])
