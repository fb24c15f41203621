"""Semantic directions in latent space: what a successful inversion enables.

A binary attribute defines a separating hyperplane in latent space; moving
a code along the unit normal edits the attribute, and projecting one normal
off another gives a direction that edits attribute 1 without crossing the
attribute-2 boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass
class SemanticDirection:
    normal: np.ndarray  # unit vector
    attribute_tag: str
    separator_bias: float
    train_accuracy: float
    reliable: bool

    def __post_init__(self):
        norm = float(np.linalg.norm(self.normal))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"direction normal must be unit length, got {norm}")


def fit_boundary(latents, labels, attribute_tag: str = "attribute") -> SemanticDirection:
    """Fit a linear separator (logistic surrogate of the max-margin problem)
    and return its unit normal with the bias in signed-distance units.

    Directions fit on near-random labels are flagged unreliable via the
    training accuracy."""
    from sklearn.linear_model import LogisticRegression

    z = np.asarray(latents, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if z.ndim != 2 or len(z) != len(y):
        raise ShapeError("latents must be (n, dim) aligned with labels")
    if len(np.unique(y)) < 2:
        raise ValueError("both attribute classes must be present")

    clf = LogisticRegression(C=1e4, tol=1e-10, max_iter=5000)
    clf.fit(z, y)
    w = clf.coef_[0]
    norm = np.linalg.norm(w)
    accuracy = float(clf.score(z, y))
    return SemanticDirection(
        normal=(w / norm).astype(np.float64),
        attribute_tag=attribute_tag,
        separator_bias=float(clf.intercept_[0] / norm),
        train_accuracy=accuracy,
        reliable=accuracy >= 0.7,
    )


def signed_distance(z, direction: SemanticDirection) -> float:
    """Signed distance of a latent code to the separator hyperplane."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != direction.normal.shape:
        raise ShapeError(f"latent dim {z.shape} does not match direction {direction.normal.shape}")
    return float(direction.normal @ z + direction.separator_bias)


def edit_latent(z, direction: SemanticDirection, alpha: float) -> np.ndarray:
    """Move a latent code along the attribute normal: z + alpha * n."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != direction.normal.shape:
        raise ShapeError(f"latent dim {z.shape} does not match direction {direction.normal.shape}")
    return z + alpha * direction.normal


def conditional_direction(n1, n2) -> np.ndarray:
    """Project n1 off n2: the returned direction edits attribute 1 while
    staying parallel to the attribute-2 hyperplane (orthogonal to n2)."""
    n1 = np.asarray(n1, dtype=np.float64)
    n2 = np.asarray(n2, dtype=np.float64)
    if n1.shape != n2.shape:
        raise ShapeError(f"direction dims differ: {n1.shape} vs {n2.shape}")
    norm2 = np.linalg.norm(n2)
    if norm2 == 0:
        raise ValueError("n2 must be non-zero")
    unit2 = n2 / norm2
    return n1 - (n1 @ unit2) * unit2
