"""Utility metrics, identity-embedding distance and the matching protocol.

MSE/SSIM/PSNR quantify how visible a perturbation is; the matching rate
quantifies whether an inversion's reconstruction still verifies as the
same identity under a pre-calibrated embedding-distance threshold.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .errors import CalibrationError, ShapeError
from .imutil import as_image, as_image_batch
from .zoo.types import FeatureExtractorHandle

SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_WINDOW = 7
SSIM_SIGMA = 1.5
PSNR_CAP_DB = 100.0


@dataclass
class UtilityReport:
    mse: float
    ssim: float
    psnr: float


def mse(image, other) -> float:
    """Mean squared pixel difference."""
    a = as_image(image).astype(np.float64)
    b = as_image(other, shape=a.shape).astype(np.float64)
    return float(np.mean((a - b) ** 2))


def _ssim_kernel(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(image, other) -> float:
    """Mean local structural similarity with a 7x7 Gaussian window
    (sigma 1.5, k1=0.01, k2=0.03, dynamic range 1). Local statistics are
    window-weighted population moments; the mean is taken over window
    centers where the full window fits. Symmetric in its arguments."""
    a = as_image(image).astype(np.float64)
    b = as_image(other, shape=a.shape).astype(np.float64)
    h, w, _ = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ShapeError(f"image {h}x{w} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")

    kernel = _ssim_kernel()
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    def local(field2d):
        return convolve2d(field2d, kernel, mode="valid")

    channel_means = []
    for ch in range(a.shape[2]):
        x, y = a[:, :, ch], b[:, :, ch]
        mu_x, mu_y = local(x), local(y)
        var_x = local(x * x) - mu_x**2
        var_y = local(y * y) - mu_y**2
        cov = local(x * y) - mu_x * mu_y
        s = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
            (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
        )
        channel_means.append(np.mean(s))
    return float(np.mean(channel_means))


def psnr(image, other) -> float:
    """Peak signal-to-noise ratio in dB for unit dynamic range; identical
    images return the 100 dB cap instead of infinity."""
    err = mse(image, other)
    if err == 0.0:
        return PSNR_CAP_DB
    return float(10.0 * np.log10(1.0 / err))


def utility_report(image, other) -> UtilityReport:
    return UtilityReport(mse=mse(image, other), ssim=ssim(image, other), psnr=psnr(image, other))


def _unit_embeddings(embedder: FeatureExtractorHandle, images) -> np.ndarray:
    feats = embedder.features_batch(images).astype(np.float64)
    norms = np.linalg.norm(feats, axis=1, keepdims=True)
    return feats / np.maximum(norms, 1e-12)


def face_distance(embedder: FeatureExtractorHandle, a, b) -> float:
    """L2 distance between unit-normalized embeddings; symmetric, zero on self."""
    ea, eb = _unit_embeddings(embedder, [as_image(a), as_image(b)])
    return float(np.linalg.norm(ea - eb))


@dataclass
class ThresholdCalibration:
    threshold: float
    pairs_used: int
    method_tag: str
    eer: float
    reliable: bool

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("calibrated threshold must be positive")


@dataclass
class MatchVerdict:
    distance: float
    same_identity: bool


def match_verdict(distance: float, calibration: ThresholdCalibration) -> MatchVerdict:
    return MatchVerdict(distance=float(distance), same_identity=float(distance) < calibration.threshold)


def calibrate_threshold(distances, same_labels) -> ThresholdCalibration:
    """Pick the distance threshold minimizing the balanced error on labeled
    same/different pairs (automated equal-error-rate stand-in for a manual
    dichotomy over the sorted distances).

    Candidates are the midpoints between consecutive sorted distances plus
    one extreme on each side; ties resolve to the smallest threshold, so
    the result is deterministic. A calibration whose equal-error rate is
    0.4 or worse is flagged unreliable.
    """
    d = np.asarray(distances, dtype=np.float64)
    labels = np.asarray(same_labels, dtype=bool)
    if d.shape != labels.shape or d.ndim != 1:
        raise CalibrationError("distances and labels must be aligned 1-d sequences")
    if len(d) == 0 or labels.all() or (~labels).all():
        raise CalibrationError("calibration needs both same- and different-identity pairs")

    lo = np.unique(d)
    candidates = np.concatenate([[lo[0] / 2.0 if lo[0] > 0 else -1.0], (lo[:-1] + lo[1:]) / 2.0, [lo[-1] + 1.0]])
    n_same = labels.sum()
    n_diff = (~labels).sum()

    best_t, best_err = None, None
    for t in candidates:
        frr = np.sum(labels & (d >= t)) / n_same
        far = np.sum(~labels & (d < t)) / n_diff
        err = (far + frr) / 2.0
        if best_err is None or err < best_err:
            best_t, best_err = float(t), float(err)
    if best_t <= 0:
        best_t = float(np.finfo(np.float64).tiny)
    return ThresholdCalibration(
        threshold=best_t,
        pairs_used=len(d),
        method_tag="balanced-error-midpoint-scan",
        eer=best_err,
        reliable=best_err < 0.4,
    )


def pair_distances(embedder: FeatureExtractorHandle, pairs) -> np.ndarray:
    """Distances for a list of (image, image) pairs, batched."""
    left = as_image_batch([p[0] for p in pairs])
    right = as_image_batch([p[1] for p in pairs])
    ea = _unit_embeddings(embedder, left)
    eb = _unit_embeddings(embedder, right)
    return np.linalg.norm(ea - eb, axis=1)


def matching_rate(embedder: FeatureExtractorHandle, targets, reconstructions, calibration: ThresholdCalibration) -> float:
    """Fraction of aligned (target, reconstruction) pairs verifying as the
    same identity under the calibrated threshold."""
    targets = list(targets)
    reconstructions = list(reconstructions)
    if len(targets) != len(reconstructions):
        raise ValueError(f"got {len(targets)} targets but {len(reconstructions)} reconstructions")
    if not targets:
        raise ValueError("matching rate over an empty pair list is undefined")
    dists = pair_distances(embedder, list(zip(targets, reconstructions)))
    return float(np.mean(dists < calibration.threshold))


@dataclass
class EvaluationReport:
    """Per-run effectiveness/utility aggregates, one row per budget level."""

    run_id: str
    scenario: str | None
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add_row(self, level, epsilon, match, utilities: list[UtilityReport]) -> dict:
        arr = lambda name: np.array([getattr(u, name) for u in utilities], dtype=np.float64)
        row = {"level": level, "epsilon": float(epsilon), "matching_rate": float(match)}
        for name in ("mse", "ssim", "psnr"):
            vals = arr(name)
            row[f"{name}_mean"] = float(vals.mean())
            row[f"{name}_std"] = float(vals.std())
        self.rows.append(row)
        return row

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "EvaluationReport":
        return cls(**json.loads(Path(path).read_text()))


def save_matching_rate_plot(reports, path) -> None:
    """Budget-vs-matching-rate curves, one line per report."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for report in reports:
        eps = [row["epsilon"] for row in report.rows]
        rates = [row["matching_rate"] for row in report.rows]
        ax.plot(eps, rates, marker="o", label=report.scenario or report.run_id)
    ax.set_xlabel("perturbation budget")
    ax.set_ylabel("matching rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_utility_scatter(points, path, value="ssim_mean") -> None:
    """Matching rate vs a utility metric for a bag of labeled points.

    points: iterable of (label, row dict) where rows come from
    EvaluationReport.rows.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    by_label: dict = {}
    for label, row in points:
        by_label.setdefault(label, []).append(row)
    for label, rows in by_label.items():
        ax.scatter([r[value] for r in rows], [r["matching_rate"] for r in rows], s=14, label=label)
    ax.set_xlabel(value)
    ax.set_ylabel("matching rate")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
