"""Model handles: immutable wrappers around trained torch modules.

A handle pairs a module with its shape metadata and hides the torch image
layout behind the (H, W, C) numpy convention. Handles are read-only after
construction: modules are put in eval mode and their parameters have
requires_grad disabled, so gradients flow to *inputs* (latents, pixels)
but never to weights.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import ShapeError
from ..imutil import as_image, as_image_batch, to_numpy, to_torch

GAN_FAMILIES = ("dcgan_like", "wgan_like", "stylegan_like", "toy")


@dataclass(frozen=True)
class LatentSpec:
    """Dimension and prior of a generator's latent space."""

    dim: int
    prior: str = "standard_gaussian"

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"latent dim must be positive, got {self.dim}")
        if self.prior != "standard_gaussian":
            raise ValueError(f"unsupported latent prior: {self.prior}")


def sample_latent(spec: LatentSpec, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. standard-Gaussian latent codes, rows of an (n, dim) array."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    codes = rng.standard_normal((n, spec.dim)).astype(np.float32)
    if not np.all(np.isfinite(codes)):
        raise ValueError("sampled latent codes contain non-finite entries")
    return codes


def _freeze(module: torch.nn.Module) -> torch.nn.Module:
    module.eval()
    for p in module.parameters():
        p.requires_grad_(False)
    return module


def _module_hash(module: torch.nn.Module) -> str:
    """Stable hash of a module's state dict (names, shapes, raw bytes)."""
    h = hashlib.sha256()
    state = module.state_dict()
    for name in sorted(state):
        t = state[name].detach().cpu().contiguous()
        h.update(name.encode())
        h.update(str(t.dtype).encode())
        h.update(str(tuple(t.shape)).encode())
        h.update(t.numpy().tobytes())
    return h.hexdigest()


class _Handle:
    """Shared plumbing: frozen module + parameter hash."""

    def __init__(self, module: torch.nn.Module):
        self.module = _freeze(module)

    def parameter_hash(self) -> str:
        return _module_hash(self.module)


class GeneratorHandle(_Handle):
    def __init__(self, module, latent_spec: LatentSpec, output_shape, family_tag, seed=0):
        if family_tag not in GAN_FAMILIES:
            raise ValueError(f"unknown generator family: {family_tag}")
        super().__init__(module)
        self.latent_spec = latent_spec
        self.output_shape = tuple(output_shape)
        self.family_tag = family_tag
        self.seed = seed
        self.history: dict = {}

    def _check_codes(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float32))
        if z.shape[1] != self.latent_spec.dim:
            raise ShapeError(
                f"latent dim {z.shape[1]} does not match generator dim {self.latent_spec.dim}"
            )
        return z

    def torch_forward(self, z: torch.Tensor) -> torch.Tensor:
        """Differentiable forward: (N, dim) latents -> (N, C, H, W) images in [0, 1]."""
        if z.shape[-1] != self.latent_spec.dim:
            raise ShapeError(
                f"latent dim {z.shape[-1]} does not match generator dim {self.latent_spec.dim}"
            )
        return self.module(z)

    def generate_batch(self, z: np.ndarray) -> np.ndarray:
        z = self._check_codes(z)
        with torch.no_grad():
            out = self.torch_forward(torch.from_numpy(z))
        return to_numpy(out)

    def generate(self, z) -> np.ndarray:
        return self.generate_batch(np.asarray(z, dtype=np.float32)[None])[0]


class EncoderHandle(_Handle):
    def __init__(self, module, input_shape, latent_spec: LatentSpec, seed=0):
        super().__init__(module)
        self.input_shape = tuple(input_shape)
        self.latent_spec = latent_spec
        self.seed = seed
        self.history: dict = {}

    def torch_forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.module(x)

    def encode_batch(self, xs) -> np.ndarray:
        batch = as_image_batch(xs, shape=self.input_shape)
        with torch.no_grad():
            out = self.torch_forward(to_torch(batch))
        return out.cpu().numpy().astype(np.float32)

    def encode(self, x) -> np.ndarray:
        return self.encode_batch(as_image(x, shape=self.input_shape)[None])[0]


class FeatureExtractorHandle(_Handle):
    """Frozen embedder; parameters are never touched by cloaks or inversion."""

    def __init__(self, module, input_shape, feature_dim, seed=0):
        super().__init__(module)
        self.input_shape = tuple(input_shape)
        self.feature_dim = int(feature_dim)
        self.seed = seed
        self.history: dict = {}

    def torch_forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.module(x)

    def features_batch(self, xs) -> np.ndarray:
        batch = as_image_batch(xs, shape=self.input_shape)
        with torch.no_grad():
            out = self.torch_forward(to_torch(batch))
        return out.cpu().numpy().astype(np.float32)

    def features(self, x) -> np.ndarray:
        return self.features_batch(as_image(x, shape=self.input_shape)[None])[0]


class DiscriminatorHandle(_Handle):
    def __init__(self, module, input_shape, seed=0):
        super().__init__(module)
        self.input_shape = tuple(input_shape)
        self.seed = seed
        self.history: dict = {}

    def torch_forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.module(x)

    def score_batch(self, xs) -> np.ndarray:
        batch = as_image_batch(xs, shape=self.input_shape)
        with torch.no_grad():
            out = self.torch_forward(to_torch(batch))
        return out.reshape(-1).cpu().numpy().astype(np.float32)

    def score(self, x) -> float:
        return float(self.score_batch(as_image(x, shape=self.input_shape)[None])[0])


def generate(G: GeneratorHandle, z) -> np.ndarray:
    """Map one latent code through the generator; output in [0, 1]."""
    return G.generate(z)


def encode(E: EncoderHandle, x) -> np.ndarray:
    return E.encode(x)


def extract_features(F: FeatureExtractorHandle, x) -> np.ndarray:
    """Fixed-length feature vector for one image; F stays frozen."""
    return F.features(x)
