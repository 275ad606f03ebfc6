"""Datasets, label partitioning, vectorization, and synthetic generators."""

from .dataset import Dataset, load_jsonl, load_text_jsonl, save_jsonl, split_validation
from .hashing import hash_vectorize, vectorize_texts
from .labels import LabelSpace, partition_label_space
from .mixture import MixtureSpec, basis_means, generate_mixture
from .tagging import (
    OUTSIDE,
    TagDataset,
    TagMixtureSpec,
    TagSpace,
    generate_tag_mixture,
    split_tag_dataset,
)

__all__ = [
    "Dataset",
    "LabelSpace",
    "MixtureSpec",
    "OUTSIDE",
    "TagDataset",
    "TagMixtureSpec",
    "TagSpace",
    "basis_means",
    "generate_mixture",
    "generate_tag_mixture",
    "hash_vectorize",
    "load_jsonl",
    "load_text_jsonl",
    "partition_label_space",
    "save_jsonl",
    "split_tag_dataset",
    "split_validation",
    "vectorize_texts",
]
