"""Adaptive counter-strategies an inversion adversary can try against cloaks.

Four strategies: overwriting the cloak with fresh Gaussian noise, purifying
it with spatial smoothing, spending more optimization iterations, and
retraining the encoder on a mix of clean and collected cloaked images.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .imutil import as_image, clip_unit
from .inversion import InversionConfig, invert_hybrid_batch, invert_optimize_batch
from .zoo.training import EncoderLossWeights, EncoderTrainConfig, train_target_encoder

STRATEGIES = ("overwrite", "purify", "more_iterations", "encoder_enhancement")
MAX_ITERATIONS = 5000


@dataclass
class AdaptiveConfig:
    strategy: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown adaptive strategy: {self.strategy}")
        if self.strategy == "overwrite" and self.params.get("sigma", 0.0) < 0:
            raise ValueError("overwrite sigma must be >= 0")
        if self.strategy == "purify":
            width = self.params.get("filter_width", 1)
            if width < 1 or width % 2 == 0:
                raise ValueError("purify filter width must be an odd integer >= 1")
        if self.strategy == "more_iterations":
            its = self.params.get("iterations", 0)
            if not 0 <= its <= MAX_ITERATIONS:
                raise ValueError(f"iterations must be in 0..{MAX_ITERATIONS}")


def overwrite_cloak(x_hat, sigma: float, seed: int = 0) -> np.ndarray:
    """Stack fresh zero-mean Gaussian noise on top of a (cloaked) image.

    The adversary is unconstrained, so the total deviation from the original
    image may exceed the defender's budget."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    x_hat = as_image(x_hat)
    if sigma == 0:
        return x_hat.copy()
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=x_hat.shape)
    return clip_unit(x_hat + noise).astype(np.float32)


def purify(x_hat, filter_width: int) -> np.ndarray:
    """Spatial smoothing: box-average each pixel with its neighbors
    (edge-replicated padding). Width 1 is the identity."""
    if filter_width < 1 or filter_width % 2 == 0:
        raise ValueError(f"filter width must be an odd integer >= 1, got {filter_width}")
    x_hat = as_image(x_hat)
    if filter_width == 1:
        return x_hat.copy()
    out = ndimage.uniform_filter(x_hat, size=(filter_width, filter_width, 1), mode="nearest")
    return clip_unit(out).astype(np.float32)


def invert_extended(G, x_hat, iterations: int, percept=None, encoder=None, seed: int = 0):
    """Inversion with an extended iteration budget (up to 5000). Runs the
    encoder-initialized variant when an encoder is supplied."""
    if not 0 <= iterations <= MAX_ITERATIONS:
        raise ValueError(f"iterations must be in 0..{MAX_ITERATIONS}")
    cfg = InversionConfig(iterations=iterations, seed=seed)
    if encoder is not None:
        return invert_hybrid_batch(G, encoder, [x_hat], cfg, percept=percept)[0]
    return invert_optimize_batch(G, [x_hat], cfg, percept=percept)[0]


def retrain_encoder(
    E_t,
    G,
    D,
    clean_set,
    cloaked_set,
    weights: EncoderLossWeights = EncoderLossWeights(),
    config: EncoderTrainConfig = EncoderTrainConfig(),
    percept=None,
):
    """Continue encoder training on clean images mixed with collected cloaked
    images. The cloaked images enter the objective as-is, so they act as a
    poisoned set rather than a robustness signal. An empty cloaked set is
    plain continued clean training."""
    clean = np.asarray(clean_set, dtype=np.float32)
    if len(clean) == 0:
        raise ValueError("clean set is empty")
    cloaked = np.asarray(cloaked_set, dtype=np.float32) if len(cloaked_set) else None
    mix = clean if cloaked is None else np.concatenate([clean, cloaked], axis=0)
    return train_target_encoder(G, D, mix, weights=weights, config=config, percept=percept, init_from=E_t)
