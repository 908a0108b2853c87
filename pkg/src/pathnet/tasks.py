"""Labelled vector datasets, splits, batching, synthetic generators and CSV I/O."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .tensorcore import make_rng

RELATED_KINDS = ("label-permutation", "fixed-rotation", "class-subset")


class DatasetError(ValueError):
    pass


class CSVParseError(DatasetError):
    def __init__(self, path, row: int, message: str):
        self.path = str(path)
        self.row = row
        super().__init__(f"{path}: row {row}: {message}")


class RaggedRowError(CSVParseError):
    pass


class NonNumericCellError(CSVParseError):
    pass


class NegativeLabelError(CSVParseError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = "dataset"

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if f.ndim != 2 or f.shape[0] < 1:
            raise DatasetError(f"{self.name}: features must be a non-empty 2-D array, got {f.shape}")
        if y.shape != (f.shape[0],):
            raise DatasetError(f"{self.name}: {y.shape[0]} labels for {f.shape[0]} rows")
        if y.min() < 0 or y.max() >= self.num_classes:
            raise DatasetError(f"{self.name}: labels must lie in [0, {self.num_classes})")
        if not np.all(np.isfinite(f)):
            raise DatasetError(f"{self.name}: non-finite feature values")
        f.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices, name: Optional[str] = None) -> "Dataset":
        return Dataset(self.features[indices], self.labels[indices], self.num_classes,
                       name or self.name)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        h.update(str(self.num_classes).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    train: Dataset
    eval: Dataset
    provenance: str = ""

    def __post_init__(self):
        if self.train.dim != self.eval.dim or self.train.num_classes != self.eval.num_classes:
            raise DatasetError(f"task {self.task_id}: train and eval splits disagree on dim/classes")

    @property
    def num_classes(self) -> int:
        return self.train.num_classes

    @property
    def dim(self) -> int:
        return self.train.dim


def make_blobs(classes: int, dim: int, per_class: int, spread: float, seed: int,
               name: str = "blobs") -> Dataset:
    """Isotropic Gaussian clusters whose means lie on the unit sphere.

    Samples are ordered class by class.
    """
    if classes < 2:
        raise DatasetError("make_blobs needs at least 2 classes")
    if per_class < 1 or dim < 1:
        raise DatasetError("make_blobs needs per_class >= 1 and dim >= 1")
    if spread < 0:
        raise DatasetError("spread must be non-negative")
    rng = make_rng(seed)
    means = rng.standard_normal((classes, dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    noise = rng.standard_normal((classes, per_class, dim)) * spread
    features = (means[:, None, :] + noise).reshape(classes * per_class, dim)
    labels = np.repeat(np.arange(classes), per_class)
    return Dataset(features, labels, classes, name)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via sign-corrected QR."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def derive_related_task(base: Dataset, kind: str, seed: int, *,
                        permutation: Optional[Sequence[int]] = None,
                        subset_size: Optional[int] = None,
                        name: Optional[str] = None) -> Dataset:
    """Build a dataset sharing structure with ``base``.

    ``label-permutation`` relabels classes, ``fixed-rotation`` applies one
    orthogonal map to every feature vector, ``class-subset`` keeps a random
    subset of classes relabelled to ``0..k-1`` (``k`` defaults to half the
    classes, at least 2).
    """
    rng = make_rng(seed)
    name = name or f"{base.name}/{kind}"
    if kind == "label-permutation":
        perm = (np.asarray(permutation, dtype=np.int64) if permutation is not None
                else rng.permutation(base.num_classes))
        if sorted(perm.tolist()) != list(range(base.num_classes)):
            raise DatasetError(f"not a permutation of {base.num_classes} classes: {perm.tolist()}")
        return Dataset(base.features, perm[base.labels], base.num_classes, name)
    if kind == "fixed-rotation":
        q = random_rotation(base.dim, rng)
        return Dataset(base.features @ q.T, base.labels, base.num_classes, name)
    if kind == "class-subset":
        k = subset_size if subset_size is not None else max(2, base.num_classes // 2)
        if k < 2 or k > base.num_classes:
            raise DatasetError(f"class subset must have between 2 and {base.num_classes} classes, got {k}")
        keep = np.sort(rng.choice(base.num_classes, size=k, replace=False))
        relabel = np.full(base.num_classes, -1)
        relabel[keep] = np.arange(k)
        rows = np.flatnonzero(np.isin(base.labels, keep))
        return Dataset(base.features[rows], relabel[base.labels[rows]], k, name)
    raise DatasetError(f"unknown related-task kind {kind!r}; expected one of {RELATED_KINDS}")


def split(ds: Dataset, eval_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified shuffle split; each class contributes round(fraction * n_c) eval rows."""
    if not 0.0 < eval_fraction < 1.0:
        raise DatasetError(f"eval_fraction must lie in (0, 1), got {eval_fraction}")
    order = make_rng(seed).permutation(len(ds))
    is_eval = np.zeros(len(ds), dtype=bool)
    for c in range(ds.num_classes):
        members = order[ds.labels[order] == c]
        is_eval[members[: int(round(eval_fraction * members.size))]] = True
    eval_idx = order[is_eval[order]]
    train_idx = order[~is_eval[order]]
    if eval_idx.size == 0 or train_idx.size == 0:
        raise DatasetError(
            f"split of {len(ds)} rows at eval_fraction={eval_fraction} leaves an empty side "
            f"(train={train_idx.size}, eval={eval_idx.size})")
    return ds.subset(train_idx, f"{ds.name}/train"), ds.subset(eval_idx, f"{ds.name}/eval")


def make_task(task_id: str, ds: Dataset, eval_fraction: float, seed: int,
              provenance: str = "") -> TaskSpec:
    train, ev = split(ds, eval_fraction, seed)
    return TaskSpec(task_id, train, ev, provenance or f"{ds.name}, split seed {seed}")


def batch_stream(train: Dataset, batch_size: int,
                 rng: np.random.Generator) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Endless mini-batches: reshuffle every pass, drop the short tail."""
    n = len(train)
    if batch_size < 1 or batch_size > n:
        raise DatasetError(f"batch_size {batch_size} must lie in [1, {n}]")
    per_pass = n // batch_size
    while True:
        order = rng.permutation(n)
        for i in range(per_pass):
            rows = order[i * batch_size:(i + 1) * batch_size]
            yield train.features[rows], train.labels[rows]


def load_csv(path, label_column: int = -1, header: bool = False,
             name: Optional[str] = None) -> Dataset:
    """Read a numeric CSV; the label column holds small non-negative integers."""
    path = Path(path)
    rows, labels = [], []
    width = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise RaggedRowError(path, lineno, "need at least one feature and a label column")
                col = label_column % width
            elif len(row) != width:
                raise RaggedRowError(path, lineno, f"expected {width} cells, found {len(row)}")
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise NonNumericCellError(path, lineno, f"non-numeric cell {bad!r}") from None
            label = values.pop(col)
            if label < 0:
                raise NegativeLabelError(path, lineno, f"negative label {label:g}")
            if label != int(label):
                raise NonNumericCellError(path, lineno, f"label {label!r} is not an integer")
            rows.append(values)
            labels.append(int(label))
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    labels_arr = np.asarray(labels, dtype=np.int64)
    return Dataset(np.asarray(rows, dtype=np.float64), labels_arr, int(labels_arr.max()) + 1,
                   name or path.stem)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def save_csv(ds: Dataset, path, header: bool = False) -> None:
    """Write features followed by the label as the last column."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i}" for i in range(ds.dim)] + ["label"])
        for x, y in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [int(y)])
