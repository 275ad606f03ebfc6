"""In-memory instance datasets and their JSONL persistence.

Records serialize one per line as {"features": [...], "label": int?,
"text": str?}. A leading header line {"provenance": ..., "feature_dim": ...}
carries dataset-level metadata so round trips preserve provenance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ..core.rng import RngStream
from ..errors import DatasetFormatError, InputError, SplitError

# stream id reserved for validation splits so they never collide with
# model-init or dropout streams drawn from the same seed
_SPLIT_STREAM = 0x73706C69


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None = None
    texts: list[str] | None = None
    provenance: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise InputError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (len(self.features),):
                raise InputError("labels must align 1:1 with features")
        if self.texts is not None and len(self.texts) != len(self.features):
            raise InputError("texts must align 1:1 with features")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def subset(self, indices, provenance: str | None = None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.features[idx],
            None if self.labels is None else self.labels[idx],
            None if self.texts is None else [self.texts[i] for i in idx],
            self.provenance if provenance is None else provenance,
        )

    def without_labels(self, provenance: str | None = None) -> "Dataset":
        """Strip labels, e.g. to form the unlabeled transfer pool."""
        return Dataset(
            self.features.copy(),
            None,
            None if self.texts is None else list(self.texts),
            self.provenance if provenance is None else provenance,
        )


def split_validation(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Uniform split without replacement; validation gets ceil(fraction*n)."""
    if not 0.0 < fraction < 1.0:
        raise SplitError(f"fraction must be in (0, 1), got {fraction}")
    n = len(ds)
    k = math.ceil(fraction * n)
    if k == 0 or k == n:
        raise SplitError(f"fraction {fraction} leaves an empty side for n={n}")
    order = RngStream(int(seed), _SPLIT_STREAM).generator().permutation(n)
    val_idx = np.sort(order[:k])
    train_idx = np.sort(order[k:])
    return ds.subset(train_idx), ds.subset(val_idx)


def save_jsonl(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"provenance": ds.provenance, "feature_dim": ds.feature_dim}
        fh.write(json.dumps(header) + "\n")
        for i in range(len(ds)):
            record: dict = {"features": [float(v) for v in ds.features[i]]}
            if ds.labels is not None:
                record["label"] = int(ds.labels[i])
            if ds.texts is not None:
                record["text"] = ds.texts[i]
            fh.write(json.dumps(record) + "\n")


def load_jsonl(path) -> Dataset:
    provenance = ""
    feature_dim: int | None = None
    features: list[list[float]] = []
    labels: list[int] = []
    texts: list[str] = []
    saw_record = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: not valid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DatasetFormatError(f"line {lineno}: expected a JSON object")
            if "provenance" in record and not saw_record:
                provenance = str(record.get("provenance", ""))
                if "feature_dim" in record:
                    feature_dim = int(record["feature_dim"])
                continue
            saw_record = True
            if "features" not in record:
                raise DatasetFormatError(f"line {lineno}: record missing 'features'")
            row = record["features"]
            if not isinstance(row, list) or not all(
                isinstance(v, (int, float)) for v in row
            ):
                raise DatasetFormatError(f"line {lineno}: 'features' must be a number list")
            if feature_dim is None:
                feature_dim = len(row)
            elif len(row) != feature_dim:
                raise DatasetFormatError(
                    f"line {lineno}: feature length {len(row)} != feature_dim {feature_dim}"
                )
            has_label = "label" in record
            if features and has_label != bool(labels):
                raise DatasetFormatError(
                    f"line {lineno}: mixed labeled and unlabeled records"
                )
            features.append([float(v) for v in row])
            if has_label:
                labels.append(int(record["label"]))
            texts.append(str(record.get("text", "")))
    if feature_dim is None:
        raise DatasetFormatError("file contains no records")
    kept_texts = texts if any(texts) else None
    return Dataset(
        np.array(features, dtype=np.float64).reshape(len(features), feature_dim),
        np.array(labels, dtype=np.int64) if labels else None,
        kept_texts,
        provenance,
    )


def load_text_jsonl(path, dim: int = 4096) -> Dataset:
    """Load {"text": ..., "label": int?} records and hash-vectorize the text."""
    from .hashing import vectorize_texts

    provenance = ""
    texts: list[str] = []
    labels: list[int] = []
    saw_record = False
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: not valid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DatasetFormatError(f"line {lineno}: expected a JSON object")
            if "provenance" in record and not saw_record:
                provenance = str(record.get("provenance", ""))
                continue
            saw_record = True
            if "text" not in record:
                raise DatasetFormatError(f"line {lineno}: record missing 'text'")
            has_label = "label" in record
            if texts and has_label != bool(labels):
                raise DatasetFormatError(f"line {lineno}: mixed labeled and unlabeled records")
            texts.append(str(record["text"]))
            if has_label:
                labels.append(int(record["label"]))
    if not texts:
        raise DatasetFormatError("file contains no records")
    return Dataset(
        vectorize_texts(texts, dim),
        np.array(labels, dtype=np.int64) if labels else None,
        texts,
        provenance,
    )
