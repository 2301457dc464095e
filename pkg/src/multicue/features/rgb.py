"""Raw-pixel head baseline: 40x40 bilinear downsize, 3x3 box blur, flatten."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from ..corpus import Corpus, Instance
from .providers import region_of

RGB_SIDE = 40
RGB_DIM = RGB_SIDE * RGB_SIDE * 3


def _interp_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row i holds the bilinear weights of output sample i (half-pixel centres, clamped edges)."""
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    M = np.zeros((n_out, n_in))
    np.add.at(M, (np.arange(n_out), lo), 1.0 - frac)
    np.add.at(M, (np.arange(n_out), hi), frac)
    return M


def resize_bilinear(img, out_h: int, out_w: int) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    Ry = _interp_matrix(img.shape[0], out_h)
    Rx = _interp_matrix(img.shape[1], out_w)
    return np.einsum("ai,ij...,bj->ab...", Ry, img, Rx)


def box_blur(img, radius: int = 1) -> np.ndarray:
    """Mean over a (2r+1)^2 window with edge replication, so constants stay constant."""
    img = np.asarray(img, dtype=np.float64)
    if radius == 0:
        return img.copy()
    pad = [(radius, radius), (radius, radius)] + [(0, 0)] * (img.ndim - 2)
    padded = np.pad(img, pad, mode="edge")
    h, w = img.shape[:2]
    out = np.zeros_like(img)
    for dy in range(2 * radius + 1):
        for dx in range(2 * radius + 1):
            out += padded[dy:dy + h, dx:dx + w]
    return out / (2 * radius + 1) ** 2


def rgb_baseline_feature(head_crop, blur_radius: int = 1, side: int = RGB_SIDE) -> np.ndarray:
    """Feature vector of a head crop, channel-interleaved (R, G, B per pixel)."""
    crop = np.asarray(head_crop)
    if crop.ndim != 3 or crop.shape[2] != 3:
        raise ValueError(f"expected an H x W x 3 crop, got shape {crop.shape}")
    if crop.shape[0] == 0 or crop.shape[1] == 0:
        raise ValueError("empty crop")
    small = resize_bilinear(crop, side, side)
    return box_blur(small, blur_radius).reshape(-1)


def read_ppm(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def write_ppm(path, rgb) -> None:
    Image.fromarray(np.asarray(rgb, dtype=np.uint8)).save(path, format="PPM")


class RGBCropProvider:
    """Reads ``<crops_dir>/<instance_id>.ppm`` head crops; head-region cues only."""

    def __init__(self, crops_dir, blur_radius: int = 1):
        self.crops_dir = Path(crops_dir)
        self.blur_radius = blur_radius

    def supports(self, cue_name: str) -> bool:
        try:
            return region_of(cue_name) == "h"
        except ValueError:
            return False

    def dim(self, cue_name: str) -> int:
        return RGB_DIM

    def embed(self, corpus: Corpus, instance: Instance, cue_name: str) -> np.ndarray:
        crop = read_ppm(self.crops_dir / f"{instance.instance_id}.ppm")
        return rgb_baseline_feature(crop, self.blur_radius)
