"""Desk datasets: procedurally rendered face-like sprites and PNG ingestion.

The sprite renderer produces smooth, identity-consistent cartoon faces.
Each identity fixes a parameter vector (skin tone, hair, eye geometry,
mouth, background); per-image jitter adds small pose and brightness
variation so identities form tight but non-degenerate clusters, which is
what the verification metrics and the GAN both need.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..imutil import load_png, save_png


@dataclass
class SpriteDataset:
    images: np.ndarray  # (N, H, W, C) float32 in [0, 1]
    identities: np.ndarray  # (N,) int
    attributes: dict  # name -> (N,) int in {0, 1}

    def __len__(self):
        return len(self.images)


def _smooth_mask(d, soft):
    # d > 0 inside the shape; linear ramp of width `soft` across the edge
    return np.clip(0.5 + d / (2.0 * soft), 0.0, 1.0)


def _render_sprite(size, p, jitter):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64) / (size - 1)
    soft = 1.5 / size
    img = np.empty((size, size, 3))
    img[:] = p["bg"]

    cx = 0.5 + jitter["dx"]
    cy = 0.52 + jitter["dy"]

    # head
    d_face = 1.0 - ((xx - cx) / p["rx"]) ** 2 - ((yy - cy) / p["ry"]) ** 2
    a = _smooth_mask(d_face, soft * 4)[..., None]
    img = a * p["skin"] + (1 - a) * img

    # hair: top slice of a slightly larger ellipse
    d_hair = 1.0 - ((xx - cx) / (p["rx"] * 1.08)) ** 2 - ((yy - cy) / (p["ry"] * 1.08)) ** 2
    hair_zone = _smooth_mask(d_hair, soft * 4) * _smooth_mask(p["hairline"] - yy, soft * 2)
    a = hair_zone[..., None]
    img = a * p["hair"] + (1 - a) * img

    # eyes
    ey = cy - p["eye_dy"]
    for sx in (-1.0, 1.0):
        ex = cx + sx * p["eye_dx"]
        d_eye = p["eye_r"] ** 2 - (xx - ex) ** 2 - (yy - ey) ** 2
        a = _smooth_mask(d_eye / p["eye_r"], soft)[..., None]
        img = a * p["eye_color"] + (1 - a) * img

    # mouth
    my = cy + p["mouth_dy"]
    d_mouth = 1.0 - ((xx - cx) / p["mouth_w"]) ** 2 - ((yy - my) / p["mouth_h"]) ** 2
    a = _smooth_mask(d_mouth, soft * 3)[..., None]
    img = a * p["mouth_color"] + (1 - a) * img

    img = np.clip(img * jitter["gain"], 0.0, 1.0)
    return img.astype(np.float32)


def _identity_params(rng):
    skin_base = rng.uniform(0.55, 0.95)
    skin = np.array([skin_base, skin_base * rng.uniform(0.75, 0.95), skin_base * rng.uniform(0.55, 0.85)])
    hair_lum = rng.uniform(0.05, 0.9)
    hair = np.clip(hair_lum * np.array([1.0, rng.uniform(0.5, 1.0), rng.uniform(0.2, 1.0)]), 0, 1)
    return {
        "bg": rng.uniform(0.1, 0.9, size=3),
        "skin": skin,
        "hair": hair,
        "hairline": rng.uniform(0.3, 0.42),
        "rx": rng.uniform(0.26, 0.36),
        "ry": rng.uniform(0.3, 0.42),
        "eye_dx": rng.uniform(0.1, 0.16),
        "eye_dy": rng.uniform(0.04, 0.1),
        "eye_r": rng.uniform(0.03, 0.06),
        "eye_color": rng.uniform(0.0, 0.25, size=3),
        "mouth_w": rng.uniform(0.08, 0.17),
        "mouth_h": rng.uniform(0.02, 0.05),
        "mouth_dy": rng.uniform(0.13, 0.2),
        "mouth_color": np.array([rng.uniform(0.5, 0.85), rng.uniform(0.1, 0.3), rng.uniform(0.1, 0.3)]),
    }


def make_sprite_dataset(n_identities=40, per_identity=25, size=32, seed=0) -> SpriteDataset:
    """Render n_identities * per_identity sprites with identity labels."""
    rng = np.random.default_rng(seed)
    params = [_identity_params(rng) for _ in range(n_identities)]
    images, identities = [], []
    for ident, p in enumerate(params):
        for _ in range(per_identity):
            jitter = {
                "dx": rng.uniform(-0.02, 0.02),
                "dy": rng.uniform(-0.02, 0.02),
                "gain": rng.uniform(0.93, 1.07),
            }
            images.append(_render_sprite(size, p, jitter))
            identities.append(ident)
    images = np.stack(images)
    identities = np.asarray(identities, dtype=np.int64)

    eye_r = np.array([p["eye_r"] for p in params])
    hair_lum = np.array([p["hair"].mean() for p in params])
    mouth_w = np.array([p["mouth_w"] for p in params])
    per_image = lambda vals, thr: (vals[identities] > thr).astype(np.int64)
    attributes = {
        "dark_hair": 1 - per_image(hair_lum, np.median(hair_lum)),
        "big_eyes": per_image(eye_r, np.median(eye_r)),
        "wide_mouth": per_image(mouth_w, np.median(mouth_w)),
    }
    return SpriteDataset(images=images, identities=identities, attributes=attributes)


def gaussian_ring_dataset(n=2000, seed=0, radius=0.3, noise=0.02) -> np.ndarray:
    """2-d ring distribution packed as (N, 1, 1, 2) images inside [0, 1]^2."""
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0, 2 * np.pi, size=n)
    pts = 0.5 + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    pts = pts + rng.normal(0, noise, size=pts.shape)
    return np.clip(pts, 0, 1).astype(np.float32).reshape(n, 1, 1, 2)


def save_image_dir(directory, images, names=None) -> list[str]:
    """Write images as PNGs; returns the filenames in write order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if names is None:
        names = [f"{i:05d}.png" for i in range(len(images))]
    for name, img in zip(names, images):
        save_png(directory / name, img)
    return list(names)


def load_image_dir(directory):
    """Read all PNGs in a directory, sorted by filename."""
    directory = Path(directory)
    names = sorted(p.name for p in directory.glob("*.png"))
    if not names:
        raise FileNotFoundError(f"no .png images under {directory}")
    images = np.stack([load_png(directory / n) for n in names])
    return images, names


def save_attribute_csv(path, names, attributes) -> None:
    """Long-format sidecar: one (filename, attribute, label) row per pair."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "attribute", "label"])
        for attr, labels in attributes.items():
            for name, label in zip(names, labels):
                writer.writerow([name, attr, int(label)])


def load_attribute_csv(path):
    """Inverse of save_attribute_csv: attribute -> {filename: label}."""
    table: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            label = int(row["label"])
            if label not in (0, 1):
                raise ValueError(f"attribute label must be 0/1, got {label}")
            table.setdefault(row["attribute"], {})[row["filename"]] = label
    return table
