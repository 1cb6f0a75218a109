"""Color-wheel rendering of flow fields (Middlebury color code)."""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image

from .core import FlowField

# segment lengths: red-yellow, yellow-green, green-cyan, cyan-blue,
# blue-magenta, magenta-red
RY, YG, GC, CB, BM, MR = 15, 6, 4, 11, 13, 6


def make_color_wheel() -> np.ndarray:
    """The 55 x 3 wheel, RGB values in [0, 255]."""
    wheel = np.zeros((RY + YG + GC + CB + BM + MR, 3))
    col = 0
    wheel[col:col + RY, 0] = 255
    wheel[col:col + RY, 1] = np.floor(255 * np.arange(RY) / RY)
    col += RY
    wheel[col:col + YG, 0] = 255 - np.floor(255 * np.arange(YG) / YG)
    wheel[col:col + YG, 1] = 255
    col += YG
    wheel[col:col + GC, 1] = 255
    wheel[col:col + GC, 2] = np.floor(255 * np.arange(GC) / GC)
    col += GC
    wheel[col:col + CB, 1] = 255 - np.floor(255 * np.arange(CB) / CB)
    wheel[col:col + CB, 2] = 255
    col += CB
    wheel[col:col + BM, 2] = 255
    wheel[col:col + BM, 0] = np.floor(255 * np.arange(BM) / BM)
    col += BM
    wheel[col:col + MR, 2] = 255 - np.floor(255 * np.arange(MR) / MR)
    wheel[col:col + MR, 0] = 255
    return wheel


COLOR_WHEEL = make_color_wheel()


def render_flow_png(field: FlowField, max_norm: float | None = None) -> np.ndarray:
    """Render a field as an ``(h, w, 3)`` uint8 RGB image.

    Direction selects the wheel hue, magnitude relative to the norm sets
    saturation, so zero flow is white. Without ``max_norm`` the field's own
    largest valid magnitude is used (1 if the field is all zero). Vectors
    beyond the norm are darkened; invalid samples render black.
    """
    valid = field.valid()
    u = np.where(valid, field.u, 0).astype(np.float64)
    v = np.where(valid, field.v, 0).astype(np.float64)
    rad = np.hypot(u, v)
    if max_norm is None:
        norm = float(rad.max()) if rad.size else 0.0
        norm = norm if norm > 0 else 1.0
    else:
        if max_norm <= 0:
            raise ValueError("max_norm must be positive")
        norm = float(max_norm)
    rad = rad / norm

    ncols = len(COLOR_WHEEL)
    a = np.arctan2(-v, -u) / np.pi
    a = np.where(a >= 1.0, -1.0, a)  # +pi and -pi are the same direction
    fk = (a + 1) / 2 * (ncols - 1)
    k0 = np.floor(fk).astype(int)
    k1 = (k0 + 1) % ncols
    f = (fk - k0)[..., None]
    col = ((1 - f) * COLOR_WHEEL[k0] + f * COLOR_WHEEL[k1]) / 255.0
    inside = (rad <= 1)[..., None]
    col = np.where(inside, 1 - rad[..., None] * (1 - col), col * 0.75)
    img = np.floor(255 * col + 0.5).clip(0, 255).astype(np.uint8)
    img[~valid] = 0
    return img


def side_by_side(left: np.ndarray, right: np.ndarray, gap: int = 4) -> np.ndarray:
    h = max(left.shape[0], right.shape[0])
    out = np.full((h, left.shape[1] + gap + right.shape[1], 3), 255, dtype=np.uint8)
    out[:left.shape[0], :left.shape[1]] = left
    out[:right.shape[0], left.shape[1] + gap:] = right
    return out


def encode_png(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img).save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: np.ndarray, path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))
