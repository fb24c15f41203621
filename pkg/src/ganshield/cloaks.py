"""Budgeted cloak searches that jeopardize GAN inversion.

Five scenarios, ordered by the defender's knowledge:

* v0 (white-box vs optimization-based): push the shadow encoder's latent
  for the cloaked image away from the image's true inverted latent, and
  push extractor features away from the original's, under an L-inf budget.
* v1 / v4 (black-box): feature deviation only.
* v2 (white-box vs encoder-initialized): drive the target encoder's output
  toward the zero vector (a stalling initialization) plus feature deviation.
* v3 (grey-box): same objective through a stolen surrogate encoder.

All searches take signed-gradient ascent steps of size epsilon/10, project
the perturbation into the budget ball and clamp pixels into [0, 1] every
iteration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import torch

from .errors import ShapeError, TrainingDivergedError
from .imutil import as_image_batch, to_numpy, to_torch
from .inversion import InversionConfig, invert_optimize_batch
from .zoo.nets import ConvEncoder, ShadowImageGenerator
from .zoo.types import EncoderHandle, FeatureExtractorHandle, GeneratorHandle

SCENARIOS = ("v0", "v1", "v2", "v3", "v4")

#: Ten-level perturbation budgets per generator family (levels 0..9).
BUDGET_SCHEDULES = {
    "dcgan_like": tuple(np.linspace(0.01, 0.07, 10)),
    "wgan_like": tuple(np.linspace(0.01, 0.07, 10)),
    "stylegan_like": tuple(np.linspace(0.01, 0.1, 10)),
}

#: Published per-level trade-off defaults, by (family, scenario). The
#: stylegan_like column follows the newer of the two style-based models.
KAPPA_TABLE = {
    ("dcgan_like", "v0"): (0.7, 0.0, 0.3, 0.2, 0.2, 0.3, 0.4, 0.2, 0.6, 0.6),
    ("dcgan_like", "v2"): (0.1, 0.5, 0.0, 0.8, 0.3, 0.2, 0.8, 0.6, 0.3, 0.2),
    ("dcgan_like", "v3"): (0.2, 0.8, 0.9, 0.7, 0.9, 0.0, 0.8, 0.7, 0.1, 0.3),
    ("wgan_like", "v0"): (0.0, 0.7, 0.4, 0.6, 0.8, 0.5, 0.2, 0.2, 0.0, 0.5),
    ("wgan_like", "v2"): (0.4, 0.1, 0.1, 0.7, 0.3, 0.1, 0.0, 0.1, 0.5, 0.9),
    ("wgan_like", "v3"): (0.1, 0.9, 0.7, 0.3, 0.1, 0.3, 0.6, 0.0, 0.0, 0.0),
    ("stylegan_like", "v0"): (1.0, 0.4, 0.6, 0.0, 0.3, 0.7, 0.2, 1.0, 1.0, 1.0),
    ("stylegan_like", "v2"): (0.4, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0),
    ("stylegan_like", "v3"): (1.0, 0.1, 1.0, 0.3, 0.6, 1.0, 0.7, 0.8, 0.9, 0.9),
}

DEFAULT_KAPPA_GRID = tuple(round(k * 0.1, 1) for k in range(11))


def budget_schedule(family_tag) -> tuple:
    if family_tag not in BUDGET_SCHEDULES:
        raise ValueError(f"no budget schedule for family: {family_tag}")
    return BUDGET_SCHEDULES[family_tag]


def budget_for(family_tag, level: int) -> float:
    """Budget value for a family at schedule level 0..9."""
    schedule = budget_schedule(family_tag)
    if not 0 <= level <= 9:
        raise ValueError(f"budget level must be in 0..9, got {level}")
    return float(schedule[level])


def kappa_default(family_tag, scenario, level: int) -> float:
    """Table default for the latent/feature trade-off; 0 for feature-only cloaks."""
    if scenario in ("v1", "v4"):
        return 0.0
    key = (family_tag, scenario)
    if key not in KAPPA_TABLE:
        raise ValueError(f"no kappa defaults for {key}; run a grid search")
    if not 0 <= level <= 9:
        raise ValueError(f"budget level must be in 0..9, got {level}")
    return float(KAPPA_TABLE[key][level])


@dataclass
class CloakConfig:
    epsilon: float
    scenario: str
    kappa: float = 0.0
    iterations: int = 500
    step_size: float | None = None  # defaults to epsilon / 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.2:
            raise ValueError(f"epsilon must be in (0, 0.2], got {self.epsilon}")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError(f"kappa must be in [0, 1], got {self.kappa}")
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario: {self.scenario}")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step_size must be positive")

    def resolved_step(self) -> float:
        return self.step_size if self.step_size is not None else self.epsilon / 10.0


@dataclass
class CloakResult:
    cloaked: np.ndarray
    delta: np.ndarray
    objective_trace: list
    config_used: CloakConfig


def project_linf(delta, epsilon):
    """Project a perturbation into the L-inf ball of radius epsilon; idempotent."""
    return np.clip(delta, -epsilon, epsilon)


def clip_unit(x):
    """Clamp pixels into [0, 1]; idempotent."""
    return np.clip(x, 0.0, 1.0)


def latent_similarity_loss(a, b) -> float:
    """Element-wise similarity of two vectors: negative cosine plus mean
    squared difference. The cosine term of a zero vector is defined as 0."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise ShapeError(f"vector lengths differ: {a.shape} vs {b.shape}")
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    cos = float(a @ b / denom) if denom > 0 else 0.0
    return -cos + float(np.mean((a - b) ** 2))


def _similarity_t(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Per-sample torch twin of latent_similarity_loss for (N, d) stacks."""
    dot = (a * b).sum(dim=1)
    denom = a.norm(dim=1) * b.norm(dim=1)
    cos = dot / denom.clamp_min(1e-12) * (denom > 0)
    mse = (a - b).pow(2).mean(dim=1)
    return -cos + mse


def _search(xs, cfg: CloakConfig, make_objective):
    """Signed-gradient ascent on the perturbation under projection and clamp.

    make_objective(x_t) returns a per-sample objective J(x_hat_t); the trace
    holds J before each step plus the final value (iterations + 1 entries).
    """
    xs = as_image_batch(xs)
    n = len(xs)
    x_t = to_torch(xs)
    objective = make_objective(x_t)
    eps = float(cfg.epsilon)
    step = cfg.resolved_step()

    noise = np.stack(
        [
            np.random.default_rng((cfg.seed, i)).standard_normal(x_t.shape[1:]).astype(np.float32)
            for i in range(n)
        ]
    )
    delta = torch.from_numpy(noise).clamp(-eps, eps)
    delta = (x_t + delta).clamp(0.0, 1.0) - x_t

    traces = [[] for _ in range(n)]
    for it in range(cfg.iterations):
        d = delta.clone().requires_grad_(True)
        j = objective(x_t + d)
        vals = j.detach().numpy()
        for i in range(n):
            traces[i].append(float(vals[i]))
        grad = torch.autograd.grad(j.sum(), d)[0]
        delta = delta + step * grad.sign()
        delta = delta.clamp(-eps, eps)
        delta = (x_t + delta).clamp(0.0, 1.0) - x_t
    with torch.no_grad():
        vals = objective(x_t + delta).numpy()
    for i in range(n):
        traces[i].append(float(vals[i]))

    delta_np = to_numpy(delta)
    results = []
    for i in range(n):
        d_i = delta_np[i]
        results.append(
            CloakResult(
                cloaked=clip_unit(xs[i] + d_i),
                delta=d_i,
                objective_trace=traces[i],
                config_used=cfg,
            )
        )
    return results


def _feature_term(F: FeatureExtractorHandle, x_t):
    f_x = F.torch_forward(x_t).detach()

    def term(x_hat):
        return _similarity_t(F.torch_forward(x_hat), f_x)

    return term


def cloak_feature_only_batch(xs, F, cfg: CloakConfig):
    """Black-box cloaks (v1 against optimization-based, v4 against hybrid):
    maximize feature deviation from the original image."""
    if cfg.scenario not in ("v1", "v4"):
        raise ValueError(f"feature-only cloak expects scenario v1 or v4, got {cfg.scenario}")

    def make(x_t):
        feat = _feature_term(F, x_t)
        return lambda x_hat: feat(x_hat)

    return _search(xs, cfg, make)


def cloak_feature_only(x, F, cfg: CloakConfig) -> CloakResult:
    return cloak_feature_only_batch([x], F, cfg)[0]


def cloak_v0_batch(xs, G_t, E_s, F, cfg: CloakConfig, anchors=None, anchor_percept=None):
    """White-box cloak against optimization-based inversion.

    anchors are the images' true inverted latents; when absent they are
    computed once with optimization-based inversion on the target generator
    and held fixed for the whole search.
    """
    if cfg.scenario != "v0":
        raise ValueError(f"expected scenario v0, got {cfg.scenario}")
    xs = as_image_batch(xs)
    if anchors is None:
        inv = invert_optimize_batch(
            G_t, xs, InversionConfig(seed=cfg.seed), percept=anchor_percept
        )
        anchors = np.stack([r.z_star for r in inv])
    anchors_t = torch.from_numpy(np.asarray(anchors, dtype=np.float32))
    if anchors_t.shape != (len(xs), E_s.latent_spec.dim):
        raise ShapeError(f"anchors must be ({len(xs)}, {E_s.latent_spec.dim})")
    kappa = cfg.kappa

    def make(x_t):
        feat = _feature_term(F, x_t)

        def J(x_hat):
            lat = _similarity_t(E_s.torch_forward(x_hat), anchors_t)
            return kappa * lat + (1.0 - kappa) * feat(x_hat)

        return J

    return _search(xs, cfg, make)


def cloak_v0(x, G_t, E_s, F, cfg: CloakConfig, anchor_latent=None, anchor_percept=None) -> CloakResult:
    anchors = None if anchor_latent is None else np.asarray(anchor_latent, dtype=np.float32)[None]
    return cloak_v0_batch([x], G_t, E_s, F, cfg, anchors=anchors, anchor_percept=anchor_percept)[0]


def _encoder_zero_batch(xs, E, F, cfg):
    kappa = cfg.kappa

    def make(x_t):
        feat = _feature_term(F, x_t)

        def J(x_hat):
            # -L_rec(E(x_hat), 0): cosine against the zero vector contributes
            # 0, leaving the mean-square of the encoder output.
            lat = -E.torch_forward(x_hat).pow(2).mean(dim=1)
            return kappa * lat + (1.0 - kappa) * feat(x_hat)

        return J

    return _search(xs, cfg, make)


def cloak_v2_batch(xs, E_t, F, cfg: CloakConfig):
    """White-box cloak against encoder-initialized inversion: push the target
    encoder's output toward zero while deviating in feature space."""
    if cfg.scenario != "v2":
        raise ValueError(f"expected scenario v2, got {cfg.scenario}")
    return _encoder_zero_batch(xs, E_t, F, cfg)


def cloak_v2(x, E_t, F, cfg: CloakConfig) -> CloakResult:
    return cloak_v2_batch([x], E_t, F, cfg)[0]


def cloak_v3_batch(xs, E_s, F, cfg: CloakConfig):
    """Grey-box variant of the zero-push cloak using a stolen surrogate encoder."""
    if cfg.scenario != "v3":
        raise ValueError(f"expected scenario v3, got {cfg.scenario}")
    return _encoder_zero_batch(xs, E_s, F, cfg)


def cloak_v3(x, E_s, F, cfg: CloakConfig) -> CloakResult:
    return cloak_v3_batch([x], E_s, F, cfg)[0]


@dataclass
class ShadowTrainConfig:
    iterations: int = 600
    batch_size: int = 32
    lr: float = 1e-3
    width: int = 64
    holdout: int = 200
    seed: int = 0


def train_shadow_encoder(G_t: GeneratorHandle, config: ShadowTrainConfig = ShadowTrainConfig()) -> EncoderHandle:
    """Fit a shadow encoder on (generated image, latent) pairs by minimizing
    the similarity loss between its prediction and the true code."""
    h, w, c = G_t.output_shape
    torch.manual_seed(config.seed)
    e_net = ConvEncoder(G_t.latent_spec.dim, resolution=h, channels=c, width=config.width)
    opt = torch.optim.Adam(e_net.parameters(), lr=config.lr)
    rng = np.random.default_rng(config.seed)

    trace = []
    for it in range(config.iterations):
        z = torch.from_numpy(rng.standard_normal((config.batch_size, G_t.latent_spec.dim)).astype(np.float32))
        with torch.no_grad():
            imgs = G_t.torch_forward(z)
        loss = _similarity_t(e_net(imgs), z).mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
        trace.append(float(loss))
        if not np.isfinite(trace[-1]):
            raise TrainingDivergedError(f"shadow encoder loss diverged at step {it}", history=trace)

    E_s = EncoderHandle(e_net, (h, w, c), G_t.latent_spec, seed=config.seed)
    E_s.history = {"loss_trace": trace}
    if config.holdout > 0:
        E_s.history.update(_holdout_agreement(G_t, E_s, config.holdout, config.seed + 1))
    return E_s


def _holdout_agreement(G_t, E_s, n, seed):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, G_t.latent_spec.dim)).astype(np.float32)
    pred = E_s.encode_batch(G_t.generate_batch(z))
    cos = np.sum(pred * z, axis=1) / np.maximum(
        np.linalg.norm(pred, axis=1) * np.linalg.norm(z, axis=1), 1e-12
    )
    loss = float(np.mean([latent_similarity_loss(p, t) for p, t in zip(pred, z)]))
    return {"holdout_cosine": float(np.mean(cos)), "holdout_loss": loss}


@dataclass
class StealConfig:
    iterations: int = 600
    batch_size: int = 32
    lr_encoder: float = 1e-3
    lr_generator: float = 1e-3
    encoder_width: int = 64
    generator_width: int = 16
    seed: int = 0


def steal_encoder(E_t: EncoderHandle, config: StealConfig = StealConfig(), probe_images=None):
    """Extract a surrogate of a query-only target encoder.

    A shadow generator crafts query images from Gaussian noise; the shadow
    encoder is trained to match the target encoder's predictions on those
    queries while the generator is trained to maximize the mismatch. Only
    forward queries of the target are used. Returns (shadow encoder,
    shadow generator); agreement on probe images lands in the encoder's
    history.
    """
    h, w, c = E_t.input_shape
    dim = E_t.latent_spec.dim
    torch.manual_seed(config.seed)
    e_net = ConvEncoder(dim, resolution=h, channels=c, width=config.encoder_width)
    g_net = ShadowImageGenerator(dim, resolution=h, channels=c, width=config.generator_width)
    opt_e = torch.optim.Adam(e_net.parameters(), lr=config.lr_encoder)
    opt_g = torch.optim.Adam(g_net.parameters(), lr=config.lr_generator)
    rng = np.random.default_rng(config.seed)

    e_trace, g_trace = [], []
    for it in range(config.iterations):
        z = torch.from_numpy(rng.standard_normal((config.batch_size, dim)).astype(np.float32))
        queries = g_net(z)
        with torch.no_grad():
            answers = E_t.torch_forward(queries.detach())

        e_loss = _similarity_t(e_net(queries.detach()), answers).mean()
        opt_e.zero_grad()
        e_loss.backward()
        opt_e.step()

        g_loss = -_similarity_t(e_net(g_net(z)), answers).mean()
        opt_g.zero_grad()
        g_loss.backward()
        opt_g.step()

        e_trace.append(float(e_loss))
        g_trace.append(float(g_loss))
        if not (np.isfinite(e_trace[-1]) and np.isfinite(g_trace[-1])):
            raise TrainingDivergedError(
                f"stealing game diverged at step {it}", history={"encoder": e_trace, "generator": g_trace}
            )

    g_net.eval()
    E_s = EncoderHandle(e_net, (h, w, c), E_t.latent_spec, seed=config.seed)
    G_s = GeneratorHandle(g_net, E_t.latent_spec, (h, w, c), "dcgan_like", seed=config.seed)
    E_s.history = {"encoder_trace": e_trace, "generator_trace": g_trace}
    if probe_images is not None:
        pred = E_s.encode_batch(probe_images)
        truth = E_t.encode_batch(probe_images)
        cos = np.sum(pred * truth, axis=1) / np.maximum(
            np.linalg.norm(pred, axis=1) * np.linalg.norm(truth, axis=1), 1e-12
        )
        E_s.history["probe_agreement"] = float(np.mean(cos))
    return E_s, G_s


def grid_search_kappa(cloak_fn, x_set, kappa_grid=DEFAULT_KAPPA_GRID, eval_fn=None):
    """Pick the grid value minimizing eval_fn's matching rate over x_set.

    cloak_fn(x, kappa) -> CloakResult; eval_fn(list of CloakResult) -> rate.
    Ties resolve to the smaller kappa.
    """
    grid = [float(k) for k in kappa_grid]
    if not grid:
        raise ValueError("kappa grid is empty")
    if any(k < 0 or k > 1 for k in grid):
        raise ValueError("kappa grid values must lie in [0, 1]")
    if eval_fn is None:
        raise ValueError("eval_fn is required")
    best_kappa, best_rate = None, None
    for kappa in sorted(grid):
        rate = float(eval_fn([cloak_fn(x, kappa) for x in x_set]))
        if best_rate is None or rate < best_rate:
            best_kappa, best_rate = kappa, rate
    return best_kappa


def write_cloak_sidecar(path, result: CloakResult) -> None:
    """Per-image record for batch cloaking runs."""
    cfg = result.config_used
    record = {
        "epsilon": cfg.epsilon,
        "kappa": cfg.kappa,
        "scenario": cfg.scenario,
        "iterations": cfg.iterations,
        "final_objective": result.objective_trace[-1],
        "max_abs_delta": float(np.max(np.abs(result.delta))),
    }
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2)
