"""Training loops for the desk model zoo.

All loops are seeded, CPU-friendly and record their loss traces on the
returned handle's ``history``. Optimizers are Adam with standard betas
throughout.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from ..errors import TrainingDivergedError
from ..imutil import as_image_batch, to_torch
from .nets import (
    ConvDiscriminator,
    ConvEncoder,
    ConvFeatureNet,
    ConvGenerator,
    ToyPointDiscriminator,
    ToyPointGenerator,
    dcgan_weight_init,
)
from .types import (
    DiscriminatorHandle,
    EncoderHandle,
    FeatureExtractorHandle,
    GeneratorHandle,
    LatentSpec,
)


@dataclass
class GanTrainConfig:
    epochs: int = 20
    batch_size: int = 64
    lr: float = 2e-4
    betas: tuple = (0.5, 0.999)
    z_dim: int = 100
    width: int = 64
    family_tag: str = "dcgan_like"
    seed: int = 0
    max_steps_per_epoch: int | None = None


@dataclass
class EncoderLossWeights:
    """Weights of the encoder objective: pixel + lambda_vgg * feature
    + adversarial term scaled by lambda_adv; gamma is the discriminator's
    gradient penalty."""

    lambda_vgg: float = 5e-5
    lambda_adv: float = 0.1
    gamma: float = 10.0


@dataclass
class EncoderTrainConfig:
    steps: int = 600
    batch_size: int = 32
    lr: float = 1e-3
    width: int = 64
    seed: int = 0


@dataclass
class FeatureTrainConfig:
    steps: int = 600
    batch_size: int = 64
    lr: float = 1e-3
    feature_dim: int = 64
    width: int = 32
    seed: int = 0


def _check_finite(value, history, what):
    if not np.isfinite(value):
        raise TrainingDivergedError(f"non-finite {what} loss: {value}", history=history)


def _epoch_batches(n, batch_size, rng, cap=None):
    order = rng.permutation(n)
    batches = [order[i : i + batch_size] for i in range(0, n, batch_size)]
    return batches[:cap] if cap else batches


def train_gan(images, config: GanTrainConfig = GanTrainConfig()):
    """Adversarial training on (N, H, W, C) images in [0, 1].

    Returns (GeneratorHandle, DiscriminatorHandle); per-epoch loss means
    land in the generator handle's history. epochs=0 returns the seeded
    initialization untouched.
    """
    images = as_image_batch(images)
    if len(images) == 0:
        raise ValueError("training dataset is empty")
    h, w, c = images.shape[1:]
    toy = h == 1 and w == 1
    if not toy and (h != w or h not in (16, 32, 64)):
        raise ValueError(f"unsupported resolution {h}x{w}; expected square 16/32/64 or 1x1 toy")

    torch.manual_seed(config.seed)
    if toy:
        g_net = ToyPointGenerator(z_dim=config.z_dim, channels=c)
        d_net = ToyPointDiscriminator(channels=c)
        family = "toy"
    else:
        g_net = ConvGenerator(config.z_dim, resolution=h, channels=c, width=config.width)
        d_net = ConvDiscriminator(resolution=h, channels=c, width=config.width)
        g_net.apply(dcgan_weight_init)
        d_net.apply(dcgan_weight_init)
        family = config.family_tag

    opt_g = torch.optim.Adam(g_net.parameters(), lr=config.lr, betas=config.betas)
    opt_d = torch.optim.Adam(d_net.parameters(), lr=config.lr, betas=config.betas)
    bce = nn.BCEWithLogitsLoss()
    rng = np.random.default_rng(config.seed)
    data = to_torch(images)

    trace = []
    for epoch in range(config.epochs):
        d_losses, g_losses = [], []
        for idx in _epoch_batches(len(images), config.batch_size, rng, config.max_steps_per_epoch):
            real = data[idx]
            m = len(idx)
            z = torch.from_numpy(rng.standard_normal((m, config.z_dim)).astype(np.float32))
            fake = g_net(z)

            opt_d.zero_grad()
            d_real = d_net(real)
            d_fake = d_net(fake.detach())
            d_loss = bce(d_real, torch.ones(m)) + bce(d_fake, torch.zeros(m))
            d_loss.backward()
            opt_d.step()

            opt_g.zero_grad()
            g_loss = bce(d_net(fake), torch.ones(m))
            g_loss.backward()
            opt_g.step()

            d_losses.append(float(d_loss))
            g_losses.append(float(g_loss))
            _check_finite(d_losses[-1], trace, "discriminator")
            _check_finite(g_losses[-1], trace, "generator")
        trace.append({"epoch": epoch, "d_loss": float(np.mean(d_losses)), "g_loss": float(np.mean(g_losses))})

    spec = LatentSpec(config.z_dim)
    G = GeneratorHandle(g_net, spec, (h, w, c), family, seed=config.seed)
    D = DiscriminatorHandle(d_net, (h, w, c), seed=config.seed)
    G.history = {"loss_trace": trace, "epochs": config.epochs}
    return G, D


def _l2_per_sample(a, b):
    return (a - b).flatten(1).norm(dim=1).mean()


def train_target_encoder(
    G: GeneratorHandle,
    D: DiscriminatorHandle,
    images,
    weights: EncoderLossWeights = EncoderLossWeights(),
    config: EncoderTrainConfig = EncoderTrainConfig(),
    percept: FeatureExtractorHandle | None = None,
    init_from: EncoderHandle | None = None,
) -> EncoderHandle:
    """Train an image-to-latent encoder against a frozen generator.

    Objective per step: ||x - G(E(x))||_2 + lambda_vgg * ||P(x) - P(G(E(x)))||_2
    - lambda_adv * mean D(G(E(x))), with the discriminator copy updated on a
    critic loss carrying a gamma-weighted gradient penalty on real images.
    `percept` supplies the frozen feature model P; when absent (or when
    lambda_vgg is 0) the feature term is dropped. `init_from` warm-starts the
    encoder, which is how retraining on a poisoned mix reuses this loop.
    """
    images = as_image_batch(images, shape=G.output_shape)
    h, w, c = G.output_shape

    torch.manual_seed(config.seed)
    if init_from is not None:
        e_net = copy.deepcopy(init_from.module)
        for p in e_net.parameters():
            p.requires_grad_(True)
        e_net.train()
    else:
        e_net = ConvEncoder(G.latent_spec.dim, resolution=h, channels=c, width=config.width)
    d_net = copy.deepcopy(D.module)
    for p in d_net.parameters():
        p.requires_grad_(True)
    d_net.train()

    opt_e = torch.optim.Adam(e_net.parameters(), lr=config.lr)
    opt_d = torch.optim.Adam(d_net.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)
    data = to_torch(images)

    use_vgg = weights.lambda_vgg != 0.0 and percept is not None
    trace = []
    step = 0
    while step < config.steps:
        for idx in _epoch_batches(len(images), config.batch_size, rng):
            if step >= config.steps:
                break
            real = data[idx]
            rec = G.torch_forward(e_net(real))

            pixel = _l2_per_sample(real, rec)
            vgg = (
                weights.lambda_vgg * _l2_per_sample(percept.torch_forward(real), percept.torch_forward(rec))
                if use_vgg
                else torch.zeros(())
            )
            adv = -weights.lambda_adv * d_net(rec).mean() if weights.lambda_adv != 0.0 else torch.zeros(())
            total = pixel + vgg + adv

            opt_e.zero_grad()
            total.backward()
            opt_e.step()

            if weights.lambda_adv != 0.0:
                real_gp = real.clone().requires_grad_(True)
                d_real = d_net(real_gp)
                grad = torch.autograd.grad(d_real.sum(), real_gp, create_graph=True)[0]
                penalty = weights.gamma / 2.0 * grad.flatten(1).pow(2).sum(dim=1).mean()
                d_loss = d_net(rec.detach()).mean() - d_real.mean() + penalty
                opt_d.zero_grad()
                d_loss.backward()
                opt_d.step()

            trace.append(
                {"step": step, "total": float(total), "pixel": float(pixel), "vgg": float(vgg), "adv": float(adv)}
            )
            _check_finite(trace[-1]["total"], trace, "encoder")
            step += 1

    E = EncoderHandle(e_net, (h, w, c), G.latent_spec, seed=config.seed)
    E.history = {"loss_trace": trace, "weights": weights.__dict__.copy()}
    return E


def train_feature_extractor(images, labels, config: FeatureTrainConfig = FeatureTrainConfig()) -> FeatureExtractorHandle:
    """Supervised conv embedder: cross-entropy on labels, penultimate features exposed."""
    images = as_image_batch(images)
    labels = np.asarray(labels, dtype=np.int64)
    if len(images) != len(labels):
        raise ValueError("images and labels must align")
    h, w, c = images.shape[1:]
    n_classes = int(labels.max()) + 1

    torch.manual_seed(config.seed)
    net = ConvFeatureNet(
        feature_dim=config.feature_dim, resolution=h, channels=c, width=config.width, n_classes=n_classes
    )
    opt = torch.optim.Adam(net.parameters(), lr=config.lr)
    ce = nn.CrossEntropyLoss()
    rng = np.random.default_rng(config.seed)
    data = to_torch(images)
    target = torch.from_numpy(labels)

    trace = []
    step = 0
    while step < config.steps:
        for idx in _epoch_batches(len(images), config.batch_size, rng):
            if step >= config.steps:
                break
            logits = net.logits(data[idx])
            loss = ce(logits, target[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
            acc = float((logits.argmax(dim=1) == target[idx]).float().mean())
            trace.append({"step": step, "loss": float(loss), "acc": acc})
            _check_finite(trace[-1]["loss"], trace, "feature extractor")
            step += 1

    F = FeatureExtractorHandle(net, (h, w, c), config.feature_dim, seed=config.seed)
    F.history = {"loss_trace": trace, "n_classes": n_classes}
    return F
