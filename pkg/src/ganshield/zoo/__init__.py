"""Model zoo: generators, encoders, feature extractors, training, checkpoints."""

from .types import (
    LatentSpec,
    GeneratorHandle,
    EncoderHandle,
    FeatureExtractorHandle,
    DiscriminatorHandle,
    sample_latent,
    generate,
    encode,
    extract_features,
)
from .nets import (
    ConvGenerator,
    ConvDiscriminator,
    ConvEncoder,
    ConvFeatureNet,
    ShadowImageGenerator,
    ToyAffineGenerator,
    ToyPointGenerator,
    ToyPointDiscriminator,
    TinyTanhEncoder,
    TinyTanhFeatureNet,
    toy_affine_generator_handle,
    tiny_encoder_handle,
    tiny_feature_handle,
)
from .data import (
    SpriteDataset,
    make_sprite_dataset,
    gaussian_ring_dataset,
    save_image_dir,
    load_image_dir,
    save_attribute_csv,
    load_attribute_csv,
)
from .training import (
    GanTrainConfig,
    EncoderTrainConfig,
    FeatureTrainConfig,
    EncoderLossWeights,
    train_gan,
    train_target_encoder,
    train_feature_extractor,
)
from .checkpoint import CheckpointManifest, save_checkpoint, load_checkpoint

__all__ = [
    "LatentSpec",
    "GeneratorHandle",
    "EncoderHandle",
    "FeatureExtractorHandle",
    "DiscriminatorHandle",
    "sample_latent",
    "generate",
    "encode",
    "extract_features",
    "ConvGenerator",
    "ConvDiscriminator",
    "ConvEncoder",
    "ConvFeatureNet",
    "ShadowImageGenerator",
    "ToyAffineGenerator",
    "ToyPointGenerator",
    "ToyPointDiscriminator",
    "TinyTanhEncoder",
    "TinyTanhFeatureNet",
    "toy_affine_generator_handle",
    "tiny_encoder_handle",
    "tiny_feature_handle",
    "SpriteDataset",
    "make_sprite_dataset",
    "gaussian_ring_dataset",
    "save_image_dir",
    "load_image_dir",
    "save_attribute_csv",
    "load_attribute_csv",
    "GanTrainConfig",
    "EncoderTrainConfig",
    "FeatureTrainConfig",
    "EncoderLossWeights",
    "train_gan",
    "train_target_encoder",
    "train_feature_extractor",
    "CheckpointManifest",
    "save_checkpoint",
    "load_checkpoint",
]
