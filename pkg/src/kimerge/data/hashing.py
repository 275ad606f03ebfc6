"""Signed feature hashing for raw text."""

from __future__ import annotations

import hashlib
import re

import numpy as np

from ..errors import InputError

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _token_hash(token: str) -> int:
    # blake2b is stable across processes, unlike the builtin salted hash
    return int.from_bytes(hashlib.blake2b(token.encode(), digest_size=8).digest(), "little")


def hash_vectorize(text: str, dim: int = 4096) -> np.ndarray:
    """Hash lowercase alphanumeric tokens into a signed bag-of-words vector.

    Each token adds +-1 to one bucket; the result is L2-normalized. Empty or
    token-free text maps to the zero vector.
    """
    if dim <= 0:
        raise InputError(f"dim must be positive, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    for token in _TOKEN_RE.findall(text.lower()):
        h = _token_hash(token)
        sign = 1.0 if h & (1 << 63) else -1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


def vectorize_texts(texts, dim: int = 4096) -> np.ndarray:
    return np.stack([hash_vectorize(t, dim) for t in texts])
