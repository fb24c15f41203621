"""Latent recovery: optimization-based and encoder-initialized inversion.

Both entry points run Adam on the latent code against a reconstruction
objective combining a perceptual (frozen-extractor feature MSE) term and
a pixel MSE term. The encoder-initialized variant differs only in its
starting point and default iteration count (100 vs 500).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from .errors import InversionDivergedError, ShapeError
from .imutil import as_image, as_image_batch, to_torch
from .zoo.types import EncoderHandle, FeatureExtractorHandle, GeneratorHandle, LatentSpec, sample_latent

INIT_MODES = ("gaussian", "zeros", "encoder")


@dataclass
class InversionConfig:
    """iterations=None resolves to 500 for optimization-based runs and 100
    for encoder-initialized runs."""

    iterations: int | None = None
    init_mode: str = "gaussian"
    step_rule: str = "adam"
    learning_rate: float = 0.01
    loss_weights: tuple = (1.0, 1.0)  # (perceptual, pixel)
    seed: int = 0

    def __post_init__(self):
        if self.iterations is not None and self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"unknown init mode: {self.init_mode}")
        if self.step_rule != "adam":
            raise ValueError(f"unsupported step rule: {self.step_rule}")
        wp, wx = self.loss_weights
        if wp < 0 or wx < 0 or (wp == 0 and wx == 0):
            raise ValueError("loss weights must be >= 0 and not both zero")


@dataclass
class InversionResult:
    z_star: np.ndarray
    reconstruction: np.ndarray
    loss_trace: list  # (iteration, perceptual term, pixel term)
    config: InversionConfig

    def total_trace(self):
        wp, wx = self.config.loss_weights
        return [wp * p + wx * m for _, p, m in self.loss_trace]


def init_latent(mode, spec: LatentSpec, encoder: EncoderHandle | None = None, image=None, seed: int = 0):
    """Starting latent for inversion: seeded gaussian, zeros, or encoder output."""
    if mode == "gaussian":
        return sample_latent(spec, 1, seed)[0]
    if mode == "zeros":
        return np.zeros(spec.dim, dtype=np.float32)
    if mode == "encoder":
        if encoder is None or image is None:
            raise ValueError("encoder init requires both an encoder and an image")
        return encoder.encode(image)
    raise ValueError(f"unknown init mode: {mode}")


def reconstruction_objective(x, x_prime, percept: FeatureExtractorHandle | None, weights=(1.0, 1.0)) -> float:
    """Weighted perceptual + pixel reconstruction loss between two images.

    With percept=None the perceptual term is zero. Non-negative; zero iff
    the images are identical when both weights are positive.
    """
    a = as_image(x)
    b = as_image(x_prime, shape=a.shape)
    with torch.no_grad():
        per, pix = _loss_terms(to_torch(a), to_torch(b), percept, precomputed_features=None)
    wp, wx = weights
    return float(wp * per[0] + wx * pix[0])


def _loss_terms(x_t, rec_t, percept, precomputed_features):
    """Per-sample (perceptual, pixel) loss tensors."""
    pix = (rec_t - x_t).flatten(1).pow(2).mean(dim=1)
    if percept is None:
        return torch.zeros_like(pix), pix
    f_x = precomputed_features if precomputed_features is not None else percept.torch_forward(x_t)
    f_r = percept.torch_forward(rec_t)
    per = (f_r - f_x).pow(2).mean(dim=1)
    return per, pix


def _initial_codes(G, xs, cfg, encoder, init_z):
    n = len(xs)
    dim = G.latent_spec.dim
    if init_z is not None:
        z0 = np.atleast_2d(np.asarray(init_z, dtype=np.float32))
        if z0.shape != (n, dim):
            raise ShapeError(f"explicit init must have shape ({n}, {dim}), got {z0.shape}")
        return z0
    if cfg.init_mode == "zeros":
        return np.zeros((n, dim), dtype=np.float32)
    if cfg.init_mode == "encoder":
        if encoder is None:
            raise ValueError("encoder init requires an encoder")
        return encoder.encode_batch(xs)
    return np.stack(
        [np.random.default_rng((cfg.seed, i)).standard_normal(dim).astype(np.float32) for i in range(n)]
    )


def _invert(G: GeneratorHandle, xs, cfg: InversionConfig, percept, encoder, init_z, iterations):
    xs = as_image_batch(xs, shape=G.output_shape)
    n = len(xs)
    x_t = to_torch(xs)
    z0 = _initial_codes(G, xs, cfg, encoder, init_z)

    z = torch.from_numpy(z0.copy()).requires_grad_(True)
    opt = torch.optim.Adam([z], lr=cfg.learning_rate)
    wp, wx = cfg.loss_weights
    f_x = percept.torch_forward(x_t) if percept is not None else None

    traces = [[] for _ in range(n)]

    def record(it, per, pix):
        per = per.detach().numpy()
        pix = pix.detach().numpy()
        for i in range(n):
            traces[i].append((it, float(per[i]), float(pix[i])))

    for it in range(iterations):
        rec = G.torch_forward(z)
        per, pix = _loss_terms(x_t, rec, percept, f_x)
        record(it, per, pix)
        loss = (wp * per + wx * pix).sum()
        opt.zero_grad()
        loss.backward()
        if not torch.isfinite(z.grad).all():
            raise InversionDivergedError(f"non-finite latent gradient at iteration {it}", trace=traces)
        opt.step()
    with torch.no_grad():
        rec = G.torch_forward(z)
        per, pix = _loss_terms(x_t, rec, percept, f_x)
    record(iterations, per, pix)

    z_star = z.detach().numpy().astype(np.float32)
    return [
        InversionResult(
            z_star=z_star[i].copy(),
            reconstruction=G.generate(z_star[i]),
            loss_trace=traces[i],
            config=replace(cfg, iterations=iterations),
        )
        for i in range(n)
    ]


def invert_optimize_batch(G, xs, cfg: InversionConfig = InversionConfig(), percept=None, init_z=None):
    """Invert a batch of images independently (shared Adam tensor, per-sample losses)."""
    if cfg.init_mode == "encoder" and init_z is None:
        raise ValueError("optimization-based inversion starts from gaussian or zeros")
    iterations = 500 if cfg.iterations is None else cfg.iterations
    return _invert(G, xs, cfg, percept, encoder=None, init_z=init_z, iterations=iterations)


def invert_optimize(G, x, cfg: InversionConfig = InversionConfig(), percept=None, init_z=None):
    """Gradient descent on the latent from a gaussian or zeros start."""
    init = None if init_z is None else np.asarray(init_z, dtype=np.float32)[None]
    return invert_optimize_batch(G, [x], cfg, percept=percept, init_z=init)[0]


def invert_hybrid_batch(G, E, xs, cfg: InversionConfig = InversionConfig(), percept=None):
    iterations = 100 if cfg.iterations is None else cfg.iterations
    cfg = replace(cfg, init_mode="encoder")
    return _invert(G, xs, cfg, percept, encoder=E, init_z=None, iterations=iterations)


def invert_hybrid(G, E, x, cfg: InversionConfig = InversionConfig(), percept=None):
    """Same descent, initialized at the encoder's prediction; defaults to 100 iterations."""
    return invert_hybrid_batch(G, E, [x], cfg, percept=percept)[0]


def write_trace(path, result: InversionResult) -> None:
    """Structured-text trace: iteration, total, perceptual and pixel terms."""
    wp, wx = result.config.loss_weights
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "total", "perceptual", "pixel"])
        for it, per, pix in result.loss_trace:
            writer.writerow([it, repr(wp * per + wx * pix), repr(per), repr(pix)])
