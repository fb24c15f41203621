"""Checkpoint directories: opaque weight blob + structured-text manifest.

A checkpoint is a directory holding ``weights.pt`` and ``manifest.json``.
The manifest carries kind, shape metadata, seed, a content hash over the
state dict and a probe hash over outputs on a fixed seeded probe batch,
so loads are verified end to end: wrong kind raises CheckpointKindError,
any corruption raises CheckpointError.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..errors import CheckpointError, CheckpointKindError
from . import nets
from .types import (
    DiscriminatorHandle,
    EncoderHandle,
    FeatureExtractorHandle,
    GeneratorHandle,
    LatentSpec,
    _module_hash,
)

KINDS = ("generator", "encoder", "feature_extractor", "embedding", "discriminator")
_PROBE_SEED = 1234
_SCHEMA = 1


@dataclass
class CheckpointManifest:
    kind: str
    family_tag: str | None
    shapes: dict
    seed: int
    content_hash: str
    probe_hash: str
    arch: dict
    schema_version: int = _SCHEMA

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown checkpoint kind: {self.kind}")


def _probe_outputs(handle) -> np.ndarray:
    rng = np.random.default_rng(_PROBE_SEED)
    if isinstance(handle, GeneratorHandle):
        z = rng.standard_normal((4, handle.latent_spec.dim)).astype(np.float32)
        return handle.generate_batch(z)
    shape = handle.input_shape
    probe = rng.uniform(0.0, 1.0, size=(2, *shape)).astype(np.float32)
    if isinstance(handle, EncoderHandle):
        return handle.encode_batch(probe)
    if isinstance(handle, FeatureExtractorHandle):
        return handle.features_batch(probe)
    if isinstance(handle, DiscriminatorHandle):
        return handle.score_batch(probe)
    raise TypeError(f"cannot probe {type(handle).__name__}")


def _probe_hash(handle) -> str:
    return hashlib.sha256(_probe_outputs(handle).astype(np.float32).tobytes()).hexdigest()


def _kind_of(handle) -> str:
    if isinstance(handle, GeneratorHandle):
        return "generator"
    if isinstance(handle, EncoderHandle):
        return "encoder"
    if isinstance(handle, FeatureExtractorHandle):
        return "feature_extractor"
    if isinstance(handle, DiscriminatorHandle):
        return "discriminator"
    raise TypeError(f"cannot checkpoint {type(handle).__name__}")


def _shapes_of(handle) -> dict:
    if isinstance(handle, GeneratorHandle):
        return {"latent_dim": handle.latent_spec.dim, "output_shape": list(handle.output_shape)}
    if isinstance(handle, EncoderHandle):
        return {"latent_dim": handle.latent_spec.dim, "input_shape": list(handle.input_shape)}
    if isinstance(handle, FeatureExtractorHandle):
        return {"feature_dim": handle.feature_dim, "input_shape": list(handle.input_shape)}
    return {"input_shape": list(handle.input_shape)}


def save_checkpoint(handle, directory, kind: str | None = None) -> CheckpointManifest:
    """Write weights + manifest; `kind` overrides only between the two
    embedder flavors (feature_extractor vs embedding)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    inferred = _kind_of(handle)
    kind = kind or inferred
    if kind != inferred and {kind, inferred} != {"feature_extractor", "embedding"}:
        raise CheckpointKindError(f"handle is a {inferred}, cannot save as {kind}")
    module = handle.module
    if not hasattr(module, "arch_kwargs"):
        raise CheckpointError(f"{type(module).__name__} does not record arch_kwargs")

    manifest = CheckpointManifest(
        kind=kind,
        family_tag=getattr(handle, "family_tag", None),
        shapes=_shapes_of(handle),
        seed=getattr(handle, "seed", 0),
        content_hash=_module_hash(module),
        probe_hash=_probe_hash(handle),
        arch={"class": type(module).__name__, "kwargs": _jsonable(module.arch_kwargs)},
    )
    torch.save(module.state_dict(), directory / "weights.pt")
    (directory / "manifest.json").write_text(json.dumps(asdict(manifest), indent=2))
    return manifest


def _jsonable(kwargs):
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in kwargs.items()}


def read_manifest(directory) -> CheckpointManifest:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise CheckpointError(f"missing manifest: {path}")
    raw = json.loads(path.read_text())
    raw.pop("schema_version", None)
    return CheckpointManifest(**raw, schema_version=_SCHEMA)


def load_checkpoint(directory, expected_kind: str | None = None):
    """Rebuild the handle from a checkpoint directory, verifying hashes."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    if expected_kind is not None and manifest.kind != expected_kind:
        raise CheckpointKindError(f"checkpoint is a {manifest.kind}, expected {expected_kind}")

    cls = getattr(nets, manifest.arch["class"], None)
    if cls is None:
        raise CheckpointError(f"unknown architecture class: {manifest.arch['class']}")
    kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in manifest.arch["kwargs"].items()}
    module = cls(**kwargs)
    try:
        state = torch.load(directory / "weights.pt", map_location="cpu", weights_only=True)
        module.load_state_dict(state)
    except CheckpointError:
        raise
    except Exception as exc:
        raise CheckpointError(f"failed to read weights: {exc}") from exc
    if _module_hash(module) != manifest.content_hash:
        raise CheckpointError("checkpoint content hash mismatch (corrupted weights)")

    shapes = manifest.shapes
    if manifest.kind == "generator":
        handle = GeneratorHandle(
            module,
            LatentSpec(shapes["latent_dim"]),
            tuple(shapes["output_shape"]),
            manifest.family_tag or "dcgan_like",
            seed=manifest.seed,
        )
    elif manifest.kind == "encoder":
        handle = EncoderHandle(module, tuple(shapes["input_shape"]), LatentSpec(shapes["latent_dim"]), seed=manifest.seed)
    elif manifest.kind in ("feature_extractor", "embedding"):
        handle = FeatureExtractorHandle(module, tuple(shapes["input_shape"]), shapes["feature_dim"], seed=manifest.seed)
    else:
        handle = DiscriminatorHandle(module, tuple(shapes["input_shape"]), seed=manifest.seed)

    if _probe_hash(handle) != manifest.probe_hash:
        raise CheckpointError("checkpoint probe-output hash mismatch")
    return handle
