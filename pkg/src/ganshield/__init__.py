"""Desk-scale toolkit for cloaking images against GAN inversion.

Subpackages and modules map to the toolkit's functional areas: ``zoo``
(generators, encoders, feature extractors, training, checkpoints),
``inversion`` (optimization-based and encoder-initialized latent recovery),
``cloaks`` (the five budgeted cloak searches), ``metrics`` (utility metrics
and the identity-matching protocol), ``distortions`` (baseline image
corruptions), ``adversaries`` (adaptive counter-strategies), ``latent_edit``
(semantic directions in latent space) and ``pipeline``/``cli`` (experiment
driver).
"""

__version__ = "0.1.0"
