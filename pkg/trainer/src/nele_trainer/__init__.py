"""Desk-scale GAN trainer for the nele enhancement engine."""

from .arch import GainGenerator, export_nelw, load_nelw_into, serialize_nelw
from .data import build_desk_corpus, load_manifest, prepare_item, write_corpus
from .discriminator import (
    BandDiscriminator,
    make_intelligibility_discriminator,
    make_quality_discriminator,
    top_singular_value,
)
from .losses import discriminator_loss, generator_loss
from .qproxy import log_spectral_distance, quality_proxy
from .train import DivergedTraining, TrainConfig, Trainer, train

__all__ = [
    "BandDiscriminator",
    "DivergedTraining",
    "GainGenerator",
    "TrainConfig",
    "Trainer",
    "build_desk_corpus",
    "discriminator_loss",
    "export_nelw",
    "generator_loss",
    "load_manifest",
    "load_nelw_into",
    "log_spectral_distance",
    "make_intelligibility_discriminator",
    "make_quality_discriminator",
    "prepare_item",
    "quality_proxy",
    "serialize_nelw",
    "top_singular_value",
    "train",
    "write_corpus",
]
