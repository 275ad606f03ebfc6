"""Token tagging data: BIO tag spaces over entity types and synthetic sentences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core.rng import RngStream
from ..errors import InputError, PartitionError, SplitError
from .mixture import basis_means

_TAG_STREAM = 0x74616773
_TAG_SPLIT_STREAM = 0x74677370

OUTSIDE = "O"


@dataclass(frozen=True)
class TagSpace:
    """Entity types split across teachers; tags follow the BIO scheme.

    The global tag list is O followed by B-/I- pairs for every entity type in
    order; each teacher sees O plus the pairs for its own types only.
    """

    entity_types: tuple[str, ...]
    teacher_types: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        types = tuple(str(t) for t in self.entity_types)
        owned = tuple(tuple(str(t) for t in ts) for ts in self.teacher_types)
        if len(set(types)) != len(types):
            raise PartitionError("entity types must be unique")
        if len(owned) < 2:
            raise PartitionError("need at least 2 teachers")
        seen: set[str] = set()
        for i, ts in enumerate(owned):
            if not ts:
                raise PartitionError(f"teacher {i} owns no entity types")
            if seen & set(ts):
                raise PartitionError(f"teacher {i} overlaps another teacher")
            seen |= set(ts)
        if seen != set(types):
            raise PartitionError("teacher types must cover every entity type")
        object.__setattr__(self, "entity_types", types)
        object.__setattr__(self, "teacher_types", owned)

    @property
    def global_tags(self) -> tuple[str, ...]:
        tags = [OUTSIDE]
        for t in self.entity_types:
            tags += [f"B-{t}", f"I-{t}"]
        return tuple(tags)

    def teacher_tags(self, i: int) -> tuple[str, ...]:
        tags = [OUTSIDE]
        for t in self.teacher_types[i]:
            tags += [f"B-{t}", f"I-{t}"]
        return tuple(tags)

    def teacher_global_indices(self, i: int) -> tuple[int, ...]:
        """Global tag index for each of teacher i's local tags, O included."""
        global_tags = self.global_tags
        return tuple(global_tags.index(tag) for tag in self.teacher_tags(i))


@dataclass
class TagDataset:
    sentences: list[np.ndarray]
    tags: list[list[str]] | None = None
    provenance: str = ""

    def __post_init__(self):
        self.sentences = [np.asarray(s, dtype=np.float64) for s in self.sentences]
        dims = {s.shape[1] for s in self.sentences if s.ndim == 2}
        if any(s.ndim != 2 for s in self.sentences) or len(dims) > 1:
            raise InputError("every sentence must be a (length, feature_dim) array")
        if self.tags is not None:
            if len(self.tags) != len(self.sentences):
                raise InputError("tags must align 1:1 with sentences")
            for s, t in zip(self.sentences, self.tags):
                if len(t) != len(s):
                    raise InputError("tag sequence length must match sentence length")

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def feature_dim(self) -> int:
        return self.sentences[0].shape[1]

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def subset(self, indices) -> "TagDataset":
        idx = [int(i) for i in indices]
        return TagDataset(
            [self.sentences[i] for i in idx],
            None if self.tags is None else [self.tags[i] for i in idx],
            self.provenance,
        )

    def without_tags(self) -> "TagDataset":
        return TagDataset([s.copy() for s in self.sentences], None, self.provenance)


@dataclass(frozen=True)
class TagMixtureSpec:
    """Synthetic sentences whose token features are class Gaussians per tag."""

    entity_types: tuple[str, ...]
    n_sentences: int
    feature_dim: int
    separation: float
    spread: float
    seed: int
    length_range: tuple[int, int] = (8, 14)
    entity_prob: float = 0.3
    max_entity_len: int = 3

    def __post_init__(self):
        if len(self.entity_types) < 1:
            raise InputError("need at least one entity type")
        if self.n_sentences <= 0 or self.max_entity_len < 1:
            raise InputError("counts must be positive")
        if not 0.0 < self.entity_prob < 1.0:
            raise InputError("entity_prob must be in (0, 1)")
        lo, hi = self.length_range
        if lo < 2 or hi < lo:
            raise InputError(f"bad length_range {self.length_range}")


def generate_tag_mixture(spec: TagMixtureSpec) -> TagDataset:
    """Sample BIO sentences with one Gaussian feature cloud per tag class."""
    types = tuple(sorted(spec.entity_types))
    tag_names = [OUTSIDE]
    for t in types:
        tag_names += [f"B-{t}", f"I-{t}"]
    means = basis_means(len(tag_names), spec.feature_dim, spec.separation)
    gen = RngStream(spec.seed, _TAG_STREAM).generator()
    lo, hi = spec.length_range
    sentences, tag_rows = [], []
    for _ in range(spec.n_sentences):
        length = int(gen.integers(lo, hi + 1))
        tags: list[str] = []
        while len(tags) < length:
            room = length - len(tags)
            if room >= 1 and gen.random() < spec.entity_prob:
                t = types[int(gen.integers(len(types)))]
                span = int(gen.integers(1, min(spec.max_entity_len, room) + 1))
                tags += [f"B-{t}"] + [f"I-{t}"] * (span - 1)
            else:
                tags.append(OUTSIDE)
        rows = np.stack([
            means[tag_names.index(tag)] + spec.spread * gen.normal(size=spec.feature_dim)
            for tag in tags
        ])
        sentences.append(rows)
        tag_rows.append(tags)
    tag = f"tag_mixture(types={types}, n={spec.n_sentences}, seed={spec.seed})"
    return TagDataset(sentences, tag_rows, provenance=tag)


def split_tag_dataset(ds: TagDataset, fraction: float, seed: int) -> tuple[TagDataset, TagDataset]:
    """Sentence-level uniform split; validation gets ceil(fraction*n)."""
    if not 0.0 < fraction < 1.0:
        raise SplitError(f"fraction must be in (0, 1), got {fraction}")
    n = len(ds)
    k = math.ceil(fraction * n)
    if k == 0 or k == n:
        raise SplitError(f"fraction {fraction} leaves an empty side for n={n}")
    order = RngStream(int(seed), _TAG_SPLIT_STREAM).generator().permutation(n)
    return ds.subset(sorted(order[k:])), ds.subset(sorted(order[:k]))
