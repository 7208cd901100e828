"""Dataset representation, CSV ingestion, and feature standardization.

Canonical file format is CSV with a header: feature columns ``f0..f{D-1}``,
an integer ``label`` column, and optional ``ext_score`` / ``oracle_typ``
columns holding precomputed per-sample scores in [0, 1]. Row order is
significant (seeded shuffles reference indices), floats use ``.`` as the
decimal separator, and files are UTF-8.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InsufficientDataError, LabelRangeError

SPLIT_TAGS = ("train", "test-typical", "test-atypical")


@dataclass(frozen=True)
class ColumnSchema:
    """Column naming for dataset CSV files."""

    feature_prefix: str = "f"
    label: str = "label"
    ext_score: str = "ext_score"
    oracle_typ: str = "oracle_typ"


DEFAULT_SCHEMA = ColumnSchema()


@dataclass(frozen=True)
class Sample:
    """One labelled feature vector."""

    features: np.ndarray
    label: int
    sample_id: int
    external_score: float | None = None
    oracle_typ: float | None = None


@dataclass
class Dataset:
    """An ordered, immutable collection of samples sharing one feature space.

    Arrays are locked read-only after construction, so a Dataset can be
    shared freely across parallel workers.
    """

    features: np.ndarray            # (N, D) float64
    labels: np.ndarray              # (N,) int64, values in [0, num_classes)
    sample_ids: np.ndarray          # (N,) int64, unique
    num_classes: int
    split_tag: str = "train"
    ext_scores: np.ndarray | None = None    # (N,) float64 in [0, 1], or None
    oracle_typ: np.ndarray | None = None    # (N,) float64 in (0, 1], or None

    def __post_init__(self):
        self.features = np.ascontiguousarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        if self.features.ndim != 2:
            raise DataFormatError("features must be a 2-D array")
        n = self.features.shape[0]
        if self.labels.shape != (n,) or self.sample_ids.shape != (n,):
            raise DataFormatError("labels/sample_ids length must match features")
        if self.split_tag not in SPLIT_TAGS:
            raise DataFormatError(f"unknown split tag {self.split_tag!r}")
        if n > 0:
            if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
                bad = int(np.argmax((self.labels < 0) | (self.labels >= self.num_classes)))
                raise LabelRangeError(
                    f"row {bad}: label {self.labels[bad]} outside [0, {self.num_classes})"
                )
            if len(np.unique(self.sample_ids)) != n:
                raise DataFormatError("sample_ids must be unique within a dataset")
        for name in ("ext_scores", "oracle_typ"):
            col = getattr(self, name)
            if col is not None:
                col = np.asarray(col, dtype=np.float64)
                if col.shape != (n,):
                    raise DataFormatError(f"{name} length must match features")
                if n > 0 and (col.min() < 0.0 or col.max() > 1.0):
                    raise DataFormatError(f"{name} values must lie in [0, 1]")
                col.flags.writeable = False
                setattr(self, name, col)
        for arr in (self.features, self.labels, self.sample_ids):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(
            features=self.features[i],
            label=int(self.labels[i]),
            sample_id=int(self.sample_ids[i]),
            external_score=None if self.ext_scores is None else float(self.ext_scores[i]),
            oracle_typ=None if self.oracle_typ is None else float(self.oracle_typ[i]),
        )

    def samples(self) -> list[Sample]:
        return [self.sample(i) for i in range(len(self))]

    def with_features(self, features: np.ndarray) -> "Dataset":
        """Copy of this dataset with a replaced feature matrix."""
        return Dataset(
            features=features,
            labels=self.labels,
            sample_ids=self.sample_ids,
            num_classes=self.num_classes,
            split_tag=self.split_tag,
            ext_scores=self.ext_scores,
            oracle_typ=self.oracle_typ,
        )

    def restrict_to_class(self, label: int) -> "Dataset":
        mask = self.labels == label
        return Dataset(
            features=self.features[mask],
            labels=self.labels[mask],
            sample_ids=self.sample_ids[mask],
            num_classes=self.num_classes,
            split_tag=self.split_tag,
            ext_scores=None if self.ext_scores is None else self.ext_scores[mask],
            oracle_typ=None if self.oracle_typ is None else self.oracle_typ[mask],
        )


def _parse_float(text: str, row: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(f"row {row}: column {col!r} is not a number: {text!r}") from None


def load_dataset(
    path: str | Path,
    num_classes: int | None = None,
    split: str = "train",
    schema: ColumnSchema = DEFAULT_SCHEMA,
) -> Dataset:
    """Load a dataset from canonical CSV. Feature count is inferred from the header.

    ``num_classes`` may be declared (labels are then validated against it)
    or left None to infer ``max(label) + 1``. Row indices in error messages
    are 1-based data rows (the header is row 0).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: no samples (empty file)") from None
        header = [h.strip() for h in header]
        feat_cols = [h for h in header if h.startswith(schema.feature_prefix)
                     and h[len(schema.feature_prefix):].isdigit()]
        expected = [f"{schema.feature_prefix}{i}" for i in range(len(feat_cols))]
        if not feat_cols or feat_cols != expected:
            raise DataFormatError(
                f"{path}: header must carry contiguous feature columns "
                f"{schema.feature_prefix}0..{schema.feature_prefix}{{D-1}}, got {header}"
            )
        if schema.label not in header:
            raise DataFormatError(f"{path}: missing {schema.label!r} column")
        dim = len(feat_cols)
        idx = {name: header.index(name) for name in header}
        has_ext = schema.ext_score in header
        has_oracle = schema.oracle_typ in header

        feats, labels, exts, oracles = [], [], [], []
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: row {rownum} has {len(row)} columns, expected {len(header)}"
                )
            feats.append([_parse_float(row[idx[c]], rownum, c) for c in expected])
            raw_label = row[idx[schema.label]].strip()
            try:
                label = int(raw_label)
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {rownum}: label is not an integer: {raw_label!r}"
                ) from None
            labels.append(label)
            if has_ext:
                exts.append(_parse_float(row[idx[schema.ext_score]], rownum, schema.ext_score))
            if has_oracle:
                oracles.append(_parse_float(row[idx[schema.oracle_typ]], rownum, schema.oracle_typ))

    if not feats:
        raise DataFormatError(f"{path}: no samples")
    labels_arr = np.asarray(labels, dtype=np.int64)
    if num_classes is None:
        num_classes = int(labels_arr.max()) + 1
    return Dataset(
        features=np.asarray(feats, dtype=np.float64).reshape(len(feats), dim),
        labels=labels_arr,
        sample_ids=np.arange(len(feats), dtype=np.int64),
        num_classes=num_classes,
        split_tag=split,
        ext_scores=np.asarray(exts) if has_ext else None,
        oracle_typ=np.asarray(oracles) if has_oracle else None,
    )


def save_dataset(d: Dataset, path: str | Path, schema: ColumnSchema = DEFAULT_SCHEMA) -> None:
    """Write canonical CSV. Floats use shortest round-trip repr, so
    load(save(d)) reproduces features bit-for-bit."""
    path = Path(path)
    header = [f"{schema.feature_prefix}{i}" for i in range(d.dim)] + [schema.label]
    if d.ext_scores is not None:
        header.append(schema.ext_score)
    if d.oracle_typ is not None:
        header.append(schema.oracle_typ)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(len(d)):
            row = [repr(float(v)) for v in d.features[i]] + [str(int(d.labels[i]))]
            if d.ext_scores is not None:
                row.append(repr(float(d.ext_scores[i])))
            if d.oracle_typ is not None:
                row.append(repr(float(d.oracle_typ[i])))
            writer.writerow(row)


@dataclass(frozen=True)
class StandardizeParams:
    """Per-dimension shift/scale fitted on a train split."""

    mean: np.ndarray
    std: np.ndarray   # constant dimensions recorded as 1.0 (left unscaled)

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) / self.std


def standardize_features(d: Dataset) -> tuple[Dataset, StandardizeParams]:
    """Shift/scale each dimension to mean 0, population std 1.

    Constant dimensions are left unscaled and their std parameter is
    recorded as 1. Returns the parameters so that test splits can be
    transformed with train statistics.
    """
    if len(d) < 2:
        raise InsufficientDataError("standardization needs at least 2 samples")
    mean = d.features.mean(axis=0)
    std = d.features.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    params = StandardizeParams(mean=mean, std=std)
    return d.with_features(params.apply(d.features)), params


def apply_standardization(d: Dataset, params: StandardizeParams) -> Dataset:
    return d.with_features(params.apply(d.features))
