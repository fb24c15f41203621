"""Thirteen baseline image distortions used for comparison against cloaks.

Magnitude units and documented ranges per kind:

====================  =======================================  ============
kind                  magnitude meaning                        range
====================  =======================================  ============
ShearX / ShearY       shear rate about the image center        [0, 0.3]
TranslateX / Y        shift in pixels                          [0, 10]
Rotate                degrees about the center                 [0, 30]
Brightness            0 black .. 1 original .. brighter        [0, 1.5]
Color                 0 grayscale .. 1 original                [0, 1.5]
Contrast              blend toward full-range stretch          [0, 1]
Solarize              invert pixels above this threshold       [0, 1]
CenterCrop            kept central fraction, resized back      [0.6, 1]
GaussianBlur          odd kernel width                         {1,3,5,7,9}
GaussianNoise         additive noise sigma (seeded)            [0, 0.1]
JPEGCompression       encoder quality                          [10, 90]
====================  =======================================  ============

Geometric kinds use bilinear interpolation and fill exposed regions with
zeros. Identity magnitudes (shear/translate/rotate 0, brightness 1, crop
ratio 1, blur width 1, noise sigma 0) return bit-identical copies; JPEG is
excluded from that family because the codec itself is lossy.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ShapeError
from .imutil import as_image, clip_unit
from .metrics import UtilityReport, mse, psnr, ssim

KINDS = (
    "ShearX",
    "ShearY",
    "TranslateX",
    "TranslateY",
    "Rotate",
    "Brightness",
    "Color",
    "Contrast",
    "Solarize",
    "CenterCrop",
    "GaussianBlur",
    "GaussianNoise",
    "JPEGCompression",
)

MAGNITUDE_RANGES = {
    "ShearX": (0.0, 0.3),
    "ShearY": (0.0, 0.3),
    "TranslateX": (0.0, 10.0),
    "TranslateY": (0.0, 10.0),
    "Rotate": (0.0, 30.0),
    "Brightness": (0.0, 1.5),
    "Color": (0.0, 1.5),
    "Contrast": (0.0, 1.0),
    "Solarize": (0.0, 1.0),
    "CenterCrop": (0.6, 1.0),
    "GaussianBlur": (1.0, 9.0),
    "GaussianNoise": (0.0, 0.1),
    "JPEGCompression": (10.0, 90.0),
}

STOCHASTIC_KINDS = ("GaussianNoise",)


@dataclass(frozen=True)
class DistortionSpec:
    kind: str
    magnitude: float
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distortion kind: {self.kind}")
        lo, hi = MAGNITUDE_RANGES[self.kind]
        if not lo <= self.magnitude <= hi:
            raise ValueError(f"{self.kind} magnitude {self.magnitude} outside [{lo}, {hi}]")
        if self.kind == "GaussianBlur":
            width = int(self.magnitude)
            if width != self.magnitude or width % 2 == 0:
                raise ValueError(f"GaussianBlur magnitude must be an odd integer width, got {self.magnitude}")
        if self.kind in STOCHASTIC_KINDS and self.seed is None:
            raise ValueError(f"{self.kind} requires a seed")


def _affine(x, matrix, offset):
    out = np.empty_like(x)
    for ch in range(x.shape[2]):
        out[:, :, ch] = ndimage.affine_transform(
            x[:, :, ch], matrix, offset=offset, order=1, mode="constant", cval=0.0
        )
    return out


def _shear(x, rate, horizontal):
    h, w, _ = x.shape
    cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
    if horizontal:
        matrix = np.array([[1.0, 0.0], [rate, 1.0]])
        offset = np.array([0.0, -rate * cr])
    else:
        matrix = np.array([[1.0, rate], [0.0, 1.0]])
        offset = np.array([-rate * cc, 0.0])
    return _affine(x, matrix, offset)


def _center_crop(x, ratio):
    h, w, _ = x.shape
    ch = max(1, int(round(ratio * h)))
    cw = max(1, int(round(ratio * w)))
    top, left = (h - ch) // 2, (w - cw) // 2
    crop = x[top : top + ch, left : left + cw]
    import torch

    t = torch.from_numpy(np.ascontiguousarray(crop.transpose(2, 0, 1)))[None]
    resized = torch.nn.functional.interpolate(t, size=(h, w), mode="bilinear", align_corners=False)
    return resized[0].numpy().transpose(1, 2, 0).astype(np.float32)


def _blur_kernel(width):
    sigma = 0.3 * ((width - 1) * 0.5 - 1) + 0.8
    coords = np.arange(width) - (width - 1) / 2.0
    k = np.exp(-(coords**2) / (2.0 * sigma**2))
    return k / k.sum()


def _gaussian_blur(x, width):
    k = _blur_kernel(width)
    out = ndimage.correlate1d(x, k, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, k, axis=1, mode="nearest")
    return out


def _grayscale(x):
    weights = np.array([0.299, 0.587, 0.114]) if x.shape[2] == 3 else np.full(x.shape[2], 1.0 / x.shape[2])
    return np.tensordot(x, weights, axes=([2], [0]))[..., None]


def _contrast_stretch(x):
    out = x.copy()
    for ch in range(x.shape[2]):
        lo, hi = x[:, :, ch].min(), x[:, :, ch].max()
        if hi > lo:
            out[:, :, ch] = (x[:, :, ch] - lo) / (hi - lo)
    return out


def _jpeg(x, quality):
    from PIL import Image

    arr = np.round(np.clip(x, 0, 1) * 255.0).astype(np.uint8)
    if arr.shape[2] == 1:
        arr = arr[:, :, 0]
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="JPEG", quality=int(quality))
    buf.seek(0)
    with Image.open(buf) as im:
        back = np.asarray(im, dtype=np.float32) / 255.0
    if back.ndim == 2:
        back = back[:, :, None]
    return back


def apply_distortion(x, spec: DistortionSpec) -> np.ndarray:
    """Apply one distortion; output has the input's shape with values in [0, 1]."""
    x = as_image(x)
    m = spec.magnitude
    kind = spec.kind

    # exact identities for the lossless kinds
    if (kind in ("ShearX", "ShearY", "TranslateX", "TranslateY", "Rotate", "GaussianNoise") and m == 0) or (
        kind in ("Brightness", "CenterCrop") and m == 1
    ) or (kind == "GaussianBlur" and m == 1):
        return x.copy()

    if kind == "ShearX":
        out = _shear(x, m, horizontal=True)
    elif kind == "ShearY":
        out = _shear(x, m, horizontal=False)
    elif kind == "TranslateX":
        out = ndimage.shift(x, (0.0, m, 0.0), order=1, mode="constant", cval=0.0)
    elif kind == "TranslateY":
        out = ndimage.shift(x, (m, 0.0, 0.0), order=1, mode="constant", cval=0.0)
    elif kind == "Rotate":
        out = ndimage.rotate(x, m, axes=(1, 0), reshape=False, order=1, mode="constant", cval=0.0)
    elif kind == "Brightness":
        out = m * x
    elif kind == "Color":
        out = m * x + (1.0 - m) * _grayscale(x)
    elif kind == "Contrast":
        out = (1.0 - m) * x + m * _contrast_stretch(x)
    elif kind == "Solarize":
        out = np.where(x > m, 1.0 - x, x)
    elif kind == "CenterCrop":
        out = _center_crop(x, m)
    elif kind == "GaussianBlur":
        out = _gaussian_blur(x, int(m))
    elif kind == "GaussianNoise":
        rng = np.random.default_rng(spec.seed)
        out = x + rng.normal(0.0, m, size=x.shape)
    elif kind == "JPEGCompression":
        out = _jpeg(x, m)
    else:  # pragma: no cover - spec validation rules this out
        raise ValueError(f"unknown distortion kind: {kind}")

    out = clip_unit(out).astype(np.float32)
    if out.shape != x.shape:
        raise ShapeError(f"distortion changed shape: {x.shape} -> {out.shape}")
    return out


def sweep_distortion(x_set, kind, magnitudes, seed: int = 0):
    """Mean utility metrics per magnitude, for scatter plots against cloaks.

    Returns [(magnitude, UtilityReport of per-set means), ...].
    """
    x_set = [as_image(x) for x in x_set]
    magnitudes = list(magnitudes)
    if not x_set or not magnitudes:
        raise ValueError("sweep needs at least one image and one magnitude")
    if sorted(magnitudes) != magnitudes:
        raise ValueError("magnitudes must be sorted ascending")

    out = []
    for m in magnitudes:
        spec = DistortionSpec(kind, m, seed=seed if kind in STOCHASTIC_KINDS else None)
        reports = []
        for x in x_set:
            y = apply_distortion(x, spec)
            reports.append((mse(x, y), ssim(x, y), psnr(x, y)))
        arr = np.asarray(reports, dtype=np.float64)
        out.append((m, UtilityReport(mse=arr[:, 0].mean(), ssim=arr[:, 1].mean(), psnr=arr[:, 2].mean())))
    return out
