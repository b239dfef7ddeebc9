"""Attribute model: embedding storage, codebook, encoders, losses, training."""

from .embeddings import EmbeddingTable, load_embeddings, save_embeddings
from .codebook import Codebook, kmeans_init, quantize
from .model import AttributeEncoder, AttributeModel, init_model
from .losses import LossWeights, TrainSample, losses
from .training import train
from .inference import instruction_attributes, object_attributes, max_pair_cosine

__all__ = [
    "EmbeddingTable",
    "load_embeddings",
    "save_embeddings",
    "Codebook",
    "kmeans_init",
    "quantize",
    "AttributeEncoder",
    "AttributeModel",
    "init_model",
    "LossWeights",
    "TrainSample",
    "losses",
    "train",
    "instruction_attributes",
    "object_attributes",
    "max_pair_cosine",
]
