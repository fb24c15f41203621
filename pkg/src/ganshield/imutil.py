"""Image array conventions and conversions.

Every image in the public API is a float numpy array of shape (H, W, C)
with values in [0, 1]. Model internals use torch tensors of shape
(N, C, H, W); the helpers here convert between the two.
"""

from __future__ import annotations

import numpy as np
import torch

from .errors import ShapeError


def as_image(x, shape=None) -> np.ndarray:
    """Validate and normalize an image array to float32 (H, W, C)."""
    arr = np.asarray(x, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ShapeError(f"expected (H, W, C) image, got shape {arr.shape}")
    if shape is not None and tuple(arr.shape) != tuple(shape):
        raise ShapeError(f"expected image of shape {tuple(shape)}, got {arr.shape}")
    return arr


def as_image_batch(xs, shape=None) -> np.ndarray:
    """Stack images into a float32 (N, H, W, C) array."""
    if isinstance(xs, np.ndarray) and xs.ndim == 4:
        batch = xs.astype(np.float32, copy=False)
    else:
        batch = np.stack([as_image(x) for x in xs]).astype(np.float32)
    if shape is not None and tuple(batch.shape[1:]) != tuple(shape):
        raise ShapeError(f"expected images of shape {tuple(shape)}, got {batch.shape[1:]}")
    return batch


def to_torch(xs) -> torch.Tensor:
    """(N, H, W, C) or (H, W, C) numpy -> (N, C, H, W) float32 tensor."""
    arr = np.asarray(xs, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4:
        raise ShapeError(f"expected image or image batch, got shape {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2)))


def to_numpy(t: torch.Tensor) -> np.ndarray:
    """(N, C, H, W) tensor -> (N, H, W, C) float32 numpy array."""
    arr = t.detach().cpu().numpy()
    if arr.ndim == 3:
        arr = arr[None]
    return np.ascontiguousarray(arr.transpose(0, 2, 3, 1)).astype(np.float32)


def clip_unit(x):
    """Clamp pixel values into [0, 1]; idempotent."""
    return np.clip(x, 0.0, 1.0)


def save_png(path, image) -> None:
    from PIL import Image

    arr = np.clip(np.asarray(image, dtype=np.float64) * 255.0, 0, 255)
    Image.fromarray(np.round(arr).astype(np.uint8)).save(path, format="PNG")


def load_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return arr
