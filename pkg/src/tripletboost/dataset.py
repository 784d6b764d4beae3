"""Labeled example collections: CSV ingestion, label dictionaries, splits."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LabelDict",
    "Dataset",
    "load_csv",
    "save_csv",
    "split",
    "make_moons",
]


@dataclass(frozen=True)
class LabelDict:
    """Dense label dictionary; a label's id is its position in ``names``."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("label names must be unique")

    @property
    def size(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown label {name!r}") from None


@dataclass(frozen=True)
class Dataset:
    """Examples with dense integer labels and optional feature vectors.

    Example ids are implicit array positions 0..n-1.  Features are only
    needed to generate triplets; the learner itself never reads them.
    """

    labels: np.ndarray
    label_dict: LabelDict
    features: np.ndarray | None = None

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if labels.size and not (0 <= labels.min() and labels.max() < self.label_dict.size):
            raise ValueError("label id out of range for the label dictionary")
        object.__setattr__(self, "labels", labels)
        if self.features is not None:
            feats = np.ascontiguousarray(self.features, dtype=np.float64)
            if feats.ndim != 2 or feats.shape[0] != labels.size or feats.shape[1] < 1:
                raise ValueError("features must be an (n, D) array with D >= 1")
            object.__setattr__(self, "features", feats)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def n_labels(self) -> int:
        return self.label_dict.size

    def take(self, indices: np.ndarray) -> "Dataset":
        """Subset by example indices; the label dictionary is shared."""
        indices = np.asarray(indices, dtype=np.int64)
        feats = None if self.features is None else self.features[indices]
        return Dataset(self.labels[indices], self.label_dict, feats)


def load_csv(path, has_header: bool = False) -> Dataset:
    """Read ``label,f1,...,fD`` rows (label-only rows give a feature-free dataset).

    Label ids are assigned in first-occurrence order.  Row numbers in error
    messages are 1-based file line numbers.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    start = 1 if has_header else 0
    label_ids: dict[str, int] = {}
    labels: list[int] = []
    rows: list[list[float]] = []
    dim: int | None = None
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            if all(not rest.strip() for rest in lines[lineno:]):
                break  # trailing blank lines are tolerated
            raise ValueError(f"malformed row at row {lineno}: blank line")
        parts = line.split(",")
        name = parts[0]
        try:
            feats = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"malformed row at row {lineno}: non-numeric feature") from None
        if dim is None:
            dim = len(feats)
        elif len(feats) != dim:
            raise ValueError(f"inconsistent dimension at row {lineno}")
        labels.append(label_ids.setdefault(name, len(label_ids)))
        rows.append(feats)
    if not labels:
        raise ValueError("empty dataset")
    label_dict = LabelDict(tuple(label_ids))
    features = np.array(rows, dtype=np.float64) if dim else None
    return Dataset(np.array(labels, dtype=np.int64), label_dict, features)


def save_csv(ds: Dataset, path) -> None:
    """Write a dataset back to CSV; floats use shortest round-trip decimals."""
    with open(path, "w", encoding="utf-8") as fh:
        for idx in range(ds.n):
            name = ds.label_dict.names[ds.labels[idx]]
            if ds.features is None:
                fh.write(f"{name}\n")
            else:
                row = ",".join(repr(v) for v in ds.features[idx].tolist())
                fh.write(f"{name},{row}\n")


def split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic disjoint (train, test) partition; |test| = ceil(n * fraction)."""
    if not 0.0 <= test_fraction <= 1.0:
        raise ValueError("test_fraction must lie in [0, 1]")
    n_test = int(math.ceil(ds.n * test_fraction - 1e-12))
    perm = np.random.default_rng(seed).permutation(ds.n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return ds.take(train_idx), ds.take(test_idx)


def make_moons(n: int, noise: float = 0.1, seed: int = 0) -> Dataset:
    """Two interleaved half-circles with Gaussian feature noise, labels "0"/"1"."""
    if n < 2:
        raise ValueError("need at least two examples")
    n_top = n - n // 2
    n_bot = n // 2
    t_top = np.linspace(0.0, np.pi, n_top)
    t_bot = np.linspace(0.0, np.pi, n_bot)
    xs = np.concatenate([np.cos(t_top), 1.0 - np.cos(t_bot)])
    ys = np.concatenate([np.sin(t_top), 0.5 - np.sin(t_bot)])
    feats = np.column_stack([xs, ys])
    if noise > 0.0:
        feats += np.random.default_rng(seed).normal(0.0, noise, size=feats.shape)
    labels = np.concatenate([np.zeros(n_top, np.int64), np.ones(n_bot, np.int64)])
    return Dataset(labels, LabelDict(("0", "1")), feats)
