"""Torch network definitions for the desk-scale model zoo.

Generators end in a tanh remapped to [0, 1] so every sample satisfies the
pixel-range contract without post-processing. Norm layers in generator,
encoder and feature nets are GroupNorm so outputs are batch-independent
and deterministic in eval mode; the shadow image generator keeps literal
BatchNorm (1 linear + 5 conv + 5 batch-norm layers).
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .types import (
    EncoderHandle,
    FeatureExtractorHandle,
    GeneratorHandle,
    LatentSpec,
)


def _gn(channels):
    return nn.GroupNorm(min(8, channels), channels)


def dcgan_weight_init(module):
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


class ConvGenerator(nn.Module):
    """Fractional-strided conv generator for 16/32/64 px square images."""

    def __init__(self, z_dim=100, resolution=32, channels=3, width=64):
        super().__init__()
        if resolution not in (16, 32, 64):
            raise ValueError(f"unsupported generator resolution: {resolution}")
        self.z_dim = z_dim
        self.resolution = resolution
        self.channels = channels
        self.arch_kwargs = dict(z_dim=z_dim, resolution=resolution, channels=channels, width=width)
        stages = {16: 2, 32: 3, 64: 4}[resolution]
        mult = 2 ** (stages - 1)
        layers = [
            nn.ConvTranspose2d(z_dim, width * mult, 4, 1, 0, bias=False),
            _gn(width * mult),
            nn.ReLU(inplace=True),
        ]
        for s in range(stages - 1):
            cin, cout = width * (mult >> s), width * (mult >> (s + 1))
            layers += [
                nn.ConvTranspose2d(cin, cout, 4, 2, 1, bias=False),
                _gn(cout),
                nn.ReLU(inplace=True),
            ]
        layers += [nn.ConvTranspose2d(width, channels, 4, 2, 1, bias=False), nn.Tanh()]
        self.net = nn.Sequential(*layers)

    def forward(self, z):
        out = self.net(z.reshape(z.shape[0], self.z_dim, 1, 1))
        return (out + 1.0) * 0.5


class ConvDiscriminator(nn.Module):
    def __init__(self, resolution=32, channels=3, width=64):
        super().__init__()
        if resolution not in (16, 32, 64):
            raise ValueError(f"unsupported discriminator resolution: {resolution}")
        self.arch_kwargs = dict(resolution=resolution, channels=channels, width=width)
        stages = {16: 2, 32: 3, 64: 4}[resolution]
        layers = [nn.Conv2d(channels, width, 4, 2, 1), nn.LeakyReLU(0.2, inplace=True)]
        for s in range(stages - 1):
            cin, cout = width * (1 << s), width * (1 << (s + 1))
            layers += [nn.Conv2d(cin, cout, 4, 2, 1), _gn(cout), nn.LeakyReLU(0.2, inplace=True)]
        layers += [nn.Conv2d(width * (1 << (stages - 1)), 1, 4, 1, 0)]
        self.net = nn.Sequential(*layers)

    def forward(self, x):
        return self.net(x * 2.0 - 1.0).reshape(x.shape[0])


class ConvEncoder(nn.Module):
    """Image-to-latent encoder mirroring the discriminator trunk."""

    def __init__(self, z_dim=100, resolution=32, channels=3, width=64):
        super().__init__()
        if resolution not in (16, 32, 64):
            raise ValueError(f"unsupported encoder resolution: {resolution}")
        self.arch_kwargs = dict(z_dim=z_dim, resolution=resolution, channels=channels, width=width)
        stages = {16: 2, 32: 3, 64: 4}[resolution]
        layers = [nn.Conv2d(channels, width, 4, 2, 1), nn.LeakyReLU(0.2, inplace=True)]
        for s in range(stages - 1):
            cin, cout = width * (1 << s), width * (1 << (s + 1))
            layers += [nn.Conv2d(cin, cout, 4, 2, 1), _gn(cout), nn.LeakyReLU(0.2, inplace=True)]
        self.trunk = nn.Sequential(*layers)
        self.fc = nn.Linear(width * (1 << (stages - 1)) * 4 * 4, z_dim)

    def forward(self, x):
        h = self.trunk(x * 2.0 - 1.0)
        return self.fc(h.flatten(1))


class ConvFeatureNet(nn.Module):
    """Small conv embedder; forward returns the penultimate feature vector.

    When built with n_classes, ``head`` maps features to class logits; the
    classifier is only used during training and the feature output is what
    handles expose.
    """

    def __init__(self, feature_dim=64, resolution=32, channels=3, width=32, n_classes=None):
        super().__init__()
        self.arch_kwargs = dict(
            feature_dim=feature_dim, resolution=resolution, channels=channels, width=width, n_classes=n_classes
        )
        stages = {16: 2, 32: 3, 64: 4}[resolution]
        layers = [nn.Conv2d(channels, width, 3, 2, 1), nn.LeakyReLU(0.2, inplace=True)]
        for s in range(stages - 1):
            cin, cout = width * (1 << s), width * (1 << (s + 1))
            layers += [nn.Conv2d(cin, cout, 3, 2, 1), _gn(cout), nn.LeakyReLU(0.2, inplace=True)]
        self.trunk = nn.Sequential(*layers)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.fc = nn.Linear(width * (1 << (stages - 1)), feature_dim)
        self.head = nn.Linear(feature_dim, n_classes) if n_classes else None

    def forward(self, x):
        h = self.pool(self.trunk(x * 2.0 - 1.0)).flatten(1)
        return self.fc(h)

    def logits(self, x):
        if self.head is None:
            raise RuntimeError("feature net was built without a classifier head")
        return self.head(self.forward(x))


class ShadowImageGenerator(nn.Module):
    """Query-crafting generator: 1 linear layer, then 5 convs with 5 batch norms."""

    def __init__(self, z_dim=100, resolution=32, channels=3, width=16):
        super().__init__()
        if resolution != 32:
            raise ValueError("shadow generator is desk-scale only (32 px)")
        self.arch_kwargs = dict(z_dim=z_dim, resolution=resolution, channels=channels, width=width)
        self.z_dim = z_dim
        self.fc = nn.Linear(z_dim, width * 16 * 2 * 2)
        self.width = width
        self.deconv = nn.ModuleList(
            [
                nn.ConvTranspose2d(width * 16, width * 8, 4, 2, 1),
                nn.ConvTranspose2d(width * 8, width * 4, 4, 2, 1),
                nn.ConvTranspose2d(width * 4, width * 2, 4, 2, 1),
                nn.ConvTranspose2d(width * 2, width, 4, 2, 1),
                nn.Conv2d(width, channels, 3, 1, 1),
            ]
        )
        self.norms = nn.ModuleList(
            [
                nn.BatchNorm2d(width * 8),
                nn.BatchNorm2d(width * 4),
                nn.BatchNorm2d(width * 2),
                nn.BatchNorm2d(width),
                nn.BatchNorm2d(channels),
            ]
        )

    def forward(self, z):
        h = self.fc(z).reshape(z.shape[0], self.width * 16, 2, 2)
        for i, (conv, norm) in enumerate(zip(self.deconv, self.norms)):
            h = norm(conv(h))
            if i < len(self.deconv) - 1:
                h = torch.relu(h)
        return torch.sigmoid(h)


class ToyAffineGenerator(nn.Module):
    """clip(bias + scale * z) broadcast over all pixels; 1-d latent."""

    def __init__(self, shape=(4, 4, 1), scale=0.1, bias=0.5):
        super().__init__()
        self.arch_kwargs = dict(shape=tuple(shape), scale=scale, bias=bias)
        self.shape = tuple(shape)
        self.register_buffer("scale", torch.tensor(float(scale)))
        self.register_buffer("bias", torch.tensor(float(bias)))

    def forward(self, z):
        h, w, c = self.shape
        val = torch.clamp(self.bias + self.scale * z.reshape(-1, 1), 0.0, 1.0)
        return val.reshape(-1, 1, 1, 1).expand(-1, c, h, w)


class ToyPointGenerator(nn.Module):
    """MLP mapping low-dim latents to 1x1 'images' with C channels in [0, 1]."""

    def __init__(self, z_dim=2, channels=2, hidden=32):
        super().__init__()
        self.arch_kwargs = dict(z_dim=z_dim, channels=channels, hidden=hidden)
        self.net = nn.Sequential(
            nn.Linear(z_dim, hidden),
            nn.Tanh(),
            nn.Linear(hidden, hidden),
            nn.Tanh(),
            nn.Linear(hidden, channels),
            nn.Sigmoid(),
        )
        self.channels = channels

    def forward(self, z):
        return self.net(z).reshape(-1, self.channels, 1, 1)


class ToyPointDiscriminator(nn.Module):
    def __init__(self, channels=2, hidden=32):
        super().__init__()
        self.arch_kwargs = dict(channels=channels, hidden=hidden)
        self.net = nn.Sequential(
            nn.Linear(channels, hidden),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden, hidden),
            nn.LeakyReLU(0.2),
            nn.Linear(hidden, 1),
        )

    def forward(self, x):
        return self.net(x.flatten(1)).reshape(x.shape[0])


class TinyTanhEncoder(nn.Module):
    """Smooth (tanh) encoder for finite-difference gradient checks."""

    def __init__(self, input_shape=(4, 4, 1), z_dim=3, hidden=16, seed=0):
        super().__init__()
        self.arch_kwargs = dict(input_shape=tuple(input_shape), z_dim=z_dim, hidden=hidden, seed=seed)
        h, w, c = input_shape
        gen = torch.Generator().manual_seed(seed)
        self.w1 = nn.Parameter(torch.randn(h * w * c, hidden, generator=gen) * 0.5)
        self.b1 = nn.Parameter(torch.randn(hidden, generator=gen) * 0.1)
        self.w2 = nn.Parameter(torch.randn(hidden, z_dim, generator=gen) * 0.5)
        self.b2 = nn.Parameter(torch.randn(z_dim, generator=gen) * 0.1)

    def forward(self, x):
        h = torch.tanh(x.flatten(1) @ self.w1 + self.b1)
        return h @ self.w2 + self.b2


class TinyTanhFeatureNet(TinyTanhEncoder):
    """Same smooth MLP, read as a feature extractor."""


def toy_affine_generator_handle(shape=(4, 4, 1), scale=0.1, bias=0.5) -> GeneratorHandle:
    module = ToyAffineGenerator(shape=shape, scale=scale, bias=bias)
    return GeneratorHandle(module, LatentSpec(1), shape, "toy")


def tiny_encoder_handle(input_shape=(4, 4, 1), z_dim=3, seed=0) -> EncoderHandle:
    module = TinyTanhEncoder(input_shape, z_dim=z_dim, seed=seed)
    return EncoderHandle(module, input_shape, LatentSpec(z_dim), seed=seed)


def tiny_feature_handle(input_shape=(4, 4, 1), feature_dim=3, seed=0) -> FeatureExtractorHandle:
    module = TinyTanhFeatureNet(input_shape, z_dim=feature_dim, seed=seed)
    return FeatureExtractorHandle(module, input_shape, feature_dim, seed=seed)
