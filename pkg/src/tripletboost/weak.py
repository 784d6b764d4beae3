"""Reference-pair weak classifiers over triplet half-spaces.

A classifier for a pair (j, k) predicts the label set ``o_j`` on examples
known (via some triplet) to be closer to j, the set ``o_k`` on examples
closer to k, and abstains elsewhere.  Label sets are bitmasks, which caps
the label space at 64 classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .triplets import TripletStore

__all__ = [
    "MAX_LABELS",
    "TripletClassifier",
    "RoundStats",
    "bitmask",
    "mask_labels",
    "select_labels",
    "round_weights",
    "classifier_alpha",
    "z_factor",
]

MAX_LABELS = 64


@dataclass(frozen=True)
class TripletClassifier:
    """Reference pair plus per-side predicted label sets and vote weight.

    Stored canonically with j < k; constructing with j > k swaps the sides.
    o_j is the bitmask predicted for examples closer to j, o_k for examples
    closer to k.  Empty sets are legal predictions, distinct from abstention.
    """

    j: int
    k: int
    o_j: int
    o_k: int
    alpha: float

    def __post_init__(self):
        if self.j == self.k:
            raise ValueError("reference examples j and k must differ")
        if self.j > self.k:
            j, k, o_j, o_k = self.j, self.k, self.o_j, self.o_k
            object.__setattr__(self, "j", k)
            object.__setattr__(self, "k", j)
            object.__setattr__(self, "o_j", o_k)
            object.__setattr__(self, "o_k", o_j)
        if self.o_j < 0 or self.o_k < 0:
            raise ValueError("label-set bitmasks must be nonnegative")
        if not math.isfinite(self.alpha):
            raise ValueError("classifier weight must be finite")


class RoundStats:
    """Per-round bookkeeping: correct/incorrect mass, normalizer, vote weight."""

    __slots__ = ("w_plus", "w_minus", "z", "alpha")

    def __init__(self, w_plus: float, w_minus: float, z: float, alpha: float):
        self.w_plus = w_plus
        self.w_minus = w_minus
        self.z = z
        self.alpha = alpha

    def __repr__(self):
        return (f"RoundStats(w_plus={self.w_plus!r}, w_minus={self.w_minus!r}, "
                f"z={self.z!r}, alpha={self.alpha!r})")

    def __eq__(self, other):
        if not isinstance(other, RoundStats):
            return NotImplemented
        return (self.w_plus, self.w_minus, self.z, self.alpha) == \
            (other.w_plus, other.w_minus, other.z, other.alpha)


def bitmask(labels) -> int:
    """Pack an iterable of label ids into a bitmask."""
    mask = 0
    for y in labels:
        mask |= 1 << int(y)
    return mask


def mask_labels(mask: int, n_labels: int) -> list[int]:
    """Unpack a bitmask into the sorted list of label ids it contains."""
    return [y for y in range(n_labels) if (mask >> y) & 1]


def _mask_bools(mask: int, n_labels: int) -> np.ndarray:
    return np.array([(mask >> y) & 1 for y in range(n_labels)], dtype=bool)


def fired_buckets(ts: TripletStore, j: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Anchor ids with a triplet revealing their side: (closer to j, closer to k)."""
    if j == k:
        raise ValueError("reference examples j and k must differ")
    lo, hi = (j, k) if j < k else (k, j)
    pkeys, anchors, near_lo = ts.pair_groups()
    start, stop = np.searchsorted(pkeys, [lo * ts.n + hi, lo * ts.n + hi + 1])
    near_lo = near_lo[start:stop]
    anchors = anchors[start:stop]
    if j == lo:
        return anchors[near_lo], anchors[~near_lo]
    return anchors[~near_lo], anchors[near_lo]


def _select_mask(w: np.ndarray, labels: np.ndarray, bucket: np.ndarray,
                 n_labels: int) -> int:
    """Labels whose in-class minus out-of-class weighted mass is strictly positive."""
    if bucket.size == 0:
        return 0
    w_bucket = w[bucket]
    true_w = w[bucket, labels[bucket]]
    in_class = np.bincount(labels[bucket], weights=true_w, minlength=n_labels)
    margin = 2.0 * in_class - w_bucket.sum(axis=0)
    mask = 0
    for y in np.flatnonzero(margin > 0.0):
        mask |= 1 << int(y)
    return mask


def select_labels(j: int, k: int, ts: TripletStore, ds: Dataset,
                  w: np.ndarray) -> tuple[int, int]:
    """Choose the predicted label sets for both sides of the pair (j, k)."""
    fwd, rev = fired_buckets(ts, j, k)
    n_labels = ds.n_labels
    return (_select_mask(w, ds.labels, fwd, n_labels),
            _select_mask(w, ds.labels, rev, n_labels))


def _bucket_weights(w, labels, bucket, mask, n_labels) -> tuple[float, float]:
    """One side's contribution to the (correct, incorrect) weighted mass.

    An entry (i, y) counts as correct when membership of y in the predicted
    set agrees with y being i's true label; abstaining examples contribute
    nothing (they are simply not in the bucket).
    """
    if bucket.size == 0:
        return 0.0, 0.0
    member = _mask_bools(mask, n_labels)
    w_bucket = w[bucket]
    total = float(w_bucket.sum())
    true_w = w[bucket, labels[bucket]]
    all_true = float(true_w.sum())
    inside = float(w_bucket[:, member].sum())
    inside_true = float(true_w[member[labels[bucket]]].sum())
    w_plus = total - all_true - inside + 2.0 * inside_true
    w_minus = all_true + inside - 2.0 * inside_true
    return w_plus, w_minus


def round_weights(h: TripletClassifier, ts: TripletStore, ds: Dataset,
                  w: np.ndarray) -> tuple[float, float]:
    """Weighted mass of correctly and incorrectly classified (example, label) pairs."""
    fwd, rev = fired_buckets(ts, h.j, h.k)
    pj, mj = _bucket_weights(w, ds.labels, fwd, h.o_j, ds.n_labels)
    pk, mk = _bucket_weights(w, ds.labels, rev, h.o_k, ds.n_labels)
    return pj + pk, mj + mk


def classifier_alpha(w_plus: float, w_minus: float, n: int) -> float:
    """Smoothed log-odds vote weight; the 1/n terms keep it finite."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 0.5 * math.log((w_plus + 1.0 / n) / (w_minus + 1.0 / n))


def z_factor(w_plus: float, w_minus: float, n: int) -> float:
    """Weight-update normalizer; at most 1, with equality iff the vote is useless."""
    if n < 1:
        raise ValueError("n must be at least 1")
    ratio = (w_minus + 1.0 / n) / (w_plus + 1.0 / n)
    root = math.sqrt(ratio)
    return (1.0 - w_plus - w_minus) + (w_plus * root + w_minus / root)
