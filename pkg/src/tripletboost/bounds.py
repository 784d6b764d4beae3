"""Computable guarantees: training-error and margin bounds, abstention laws.

Everything here is a closed form over quantities the trainer already
records, plus Monte Carlo oracles that exist to cross-check the closed
forms mechanically rather than re-deriving them.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .boost import StrongModel, init_weights, sample_reference_pair, update_weights
from .dataset import Dataset, LabelDict
from .predict import score
from .triplets import TripletStore
from .weak import TripletClassifier, classifier_alpha, round_weights, select_labels

__all__ = [
    "training_error_bound",
    "margin",
    "margin_values",
    "empirical_margin_bound",
    "abstention_bound",
    "simulate_abstention",
    "abstention_limit",
    "bound_surface_rows",
    "end_to_end_abstention",
]

_Z_SLACK = 1e-9  # tolerated float excess over the provable z <= 1


def _check_history(z_history) -> np.ndarray:
    z = np.asarray(z_history, dtype=np.float64)
    if z.size and (z.min() <= 0.0 or z.max() > 1.0 + _Z_SLACK):
        raise ValueError("round normalizers must lie in (0, 1]")
    return z


def training_error_bound(n_labels: int, z_history) -> float:
    """Bound on the strict training error: (L/2) times the normalizer product."""
    if n_labels < 2:
        raise ValueError("need at least two labels")
    z = _check_history(z_history)
    return 0.5 * n_labels * math.exp(float(np.log(z).sum())) if z.size \
        else 0.5 * n_labels


def empirical_margin_bound(n_labels: int, z_history, w_plus_history,
                           w_minus_history, n: int, theta: float) -> float:
    """Bound on the fraction of training examples with confidence margin <= theta."""
    if theta <= 0.0:
        raise ValueError("theta must be positive")
    z = _check_history(z_history)
    w_plus = np.asarray(w_plus_history, dtype=np.float64)
    w_minus = np.asarray(w_minus_history, dtype=np.float64)
    if not (z.size == w_plus.size == w_minus.size):
        raise ValueError("round histories must have equal lengths")
    if z.size == 0:
        return 0.5 * n_labels
    smooth = 1.0 / n
    log_total = float((np.log(z) + 0.5 * theta * (np.log(w_plus + smooth)
                                                  - np.log(w_minus + smooth))).sum())
    if log_total > 700.0:  # vacuous far beyond 1; exp would overflow
        return math.inf
    return 0.5 * n_labels * math.exp(log_total)


def margin_values(signed_scores, labels, eta: float) -> np.ndarray:
    """Per-example confidence margin of the vote, in [-1, 1].

    ``signed_scores`` holds the signed per-label vote totals F(x, y) with
    abstaining classifiers contributing nothing.  The margin is half the gap
    between the softened score of the true label and the best other label;
    it is positive exactly when the true label is the strict argmax.
    """
    if eta <= 0.0:
        raise ValueError("total classifier weight must be positive")
    votes = np.asarray(signed_scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, n_labels = votes.shape
    if n_labels < 2:
        raise ValueError("need at least two labels")
    soft = np.empty_like(votes)
    for y in range(n_labels):
        arg = votes.copy()
        arg[:, y] = -arg[:, y]
        soft[:, y] = -(logsumexp(arg, axis=1) - math.log(n_labels)) / eta
    rows = np.arange(n)
    true_soft = soft[rows, labels].copy()
    soft[rows, labels] = -np.inf
    return 0.5 * (true_soft - soft.max(axis=1))


def margin(model: StrongModel, signed_scores, labels) -> np.ndarray:
    """Confidence margins under the model's own total vote weight."""
    return margin_values(signed_scores, labels, model.total_alpha)


def abstention_bound(n: int, p: float, classifier_count: float) -> float:
    """Probability that no combined classifier can vote on a fresh example."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if classifier_count < 0:
        raise ValueError("classifier count must be nonnegative")
    base = (1.0 - p) + p * (1.0 - p) ** n
    return float(base ** classifier_count)


def simulate_abstention(n: int, p: float, classifier_count: int, trials: int,
                        seed: int = 0) -> tuple[float, float]:
    """Monte Carlo oracle for ``abstention_bound``: (estimate, standard error).

    Each trial draws, per classifier, how many of the n training points it
    fires on and whether it fires on the test point; the trial abstains when
    no classifier does both.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if classifier_count < 0:
        raise ValueError("classifier count must be nonnegative")
    rng = np.random.default_rng(seed)
    abstained = 0
    block = max(1, min(trials, 2_000_000 // max(1, classifier_count)))
    done = 0
    while done < trials:
        size = min(block, trials - done)
        fires_train = rng.binomial(n, p, size=(size, classifier_count)) > 0
        fires_test = rng.random((size, classifier_count)) < p
        useful = fires_train & fires_test
        abstained += int((~useful.any(axis=1)).sum())
        done += size
    estimate = abstained / trials
    stderr = math.sqrt(estimate * (1.0 - estimate) / trials)
    return estimate, stderr


def abstention_limit(k: float, beta: float) -> float:
    """Asymptotic abstention probability when p = 2n^(k-3) and C = n^beta / 2.

    Piecewise in the exponents: below the regime threshold every test point
    is orphaned (limit 1), above it none are (limit 0), and on the boundary
    the limit is one of three exact constants.
    """
    if not 0.0 <= k < 3.0:
        raise ValueError("k must lie in [0, 3)")
    if not 0.0 <= beta <= 2.0:
        raise ValueError("beta must lie in [0, 2]")
    if beta < 1.0:
        threshold, at_threshold = 3.0 - beta, math.exp(-1.0)
    elif beta == 1.0:
        threshold, at_threshold = 2.0, math.exp(math.exp(-2.0) - 1.0)
    else:
        threshold, at_threshold = (5.0 - beta) / 2.0, math.exp(-2.0)
    if k < threshold:
        return 1.0
    if k == threshold:
        return at_threshold
    return 0.0


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def bound_surface_rows(n: int, k_grid, beta_grid):
    """Abstention bound over an exponent grid: rows (k, beta, bound).

    The classifier count n^beta / 2 is rounded half up (so never below 1);
    grid points whose implied availability exceeds 1 are skipped and
    reported in the second return value.
    """
    k_grid = list(k_grid)
    beta_grid = list(beta_grid)
    if not k_grid or not beta_grid:
        raise ValueError("grids must be nonempty")
    rows = []
    skipped = []
    for k in k_grid:
        for beta in beta_grid:
            p = 2.0 * float(n) ** (k - 3.0)
            if p > 1.0:
                skipped.append((k, beta))
                continue
            count = _round_half_up(float(n) ** beta / 2.0)
            rows.append((k, beta, abstention_bound(n, p, count)))
    return rows, skipped


def end_to_end_abstention(n: int, n_labels: int, p: float, rounds: int,
                          n_models: int, draws_per_model: int,
                          seed: int = 0) -> tuple[float, float]:
    """Measured abstention of actually trained models under random availability.

    Each model runs the real boosting round (pair sampling, label selection,
    vote weighting, weight update) with every training example revealing its
    side to the round's classifier independently with probability p — the
    regime where the closed form is exact.  Test draws fire each kept
    classifier with probability p and ask the real scorer whether the model
    abstains.  Returns the mean abstention rate and its standard error over
    models.
    """
    if n_models < 2:
        raise ValueError("need at least two models for a standard error")
    if n_labels < 2 or n_labels > n:
        raise ValueError("need 2 <= n_labels <= n")
    labels = np.arange(n, dtype=np.int64) % n_labels
    ds = Dataset(labels, LabelDict(tuple(str(y) for y in range(n_labels))))
    rates = np.empty(n_models)
    for m_idx, child in enumerate(np.random.SeedSequence(seed).spawn(n_models)):
        rng = np.random.default_rng(child)
        w = init_weights(n, n_labels)
        kept: list[TripletClassifier] = []
        for _ in range(rounds):
            j, k = sample_reference_pair(ds, w, rng)
            revealed = np.flatnonzero(rng.random(n) < p)
            says_j = rng.random(n) < 0.5
            lo, hi = (j, k) if j < k else (k, j)
            near_lo = says_j[revealed] ^ (j != lo)
            store = TripletStore(
                n, revealed,
                np.full(revealed.size, lo, dtype=np.int64),
                np.full(revealed.size, hi, dtype=np.int64),
                near_lo, _trusted=True)
            o_j, o_k = select_labels(j, k, store, ds, w)
            probe = TripletClassifier(j, k, o_j, o_k, 0.0)
            w_plus, w_minus = round_weights(probe, store, ds, w)
            alpha = classifier_alpha(w_plus, w_minus, n)
            if alpha != 0.0:
                h = TripletClassifier(j, k, o_j, o_k, alpha)
                w, _ = update_weights(w, h, store, ds)
                kept.append(h)
        model = StrongModel(kept, ds.label_dict, n)
        pair_arr = np.array([[h.j, h.k] for h in kept], dtype=np.int64).reshape(-1, 2)
        abstained = 0
        for _ in range(draws_per_model):
            fired = rng.random(len(kept)) < p if kept else np.zeros(0, dtype=bool)
            if not fired.any():
                abstained += 1
                continue
            keys = np.unique(pair_arr[fired, 0] * n + pair_arr[fired, 1])
            pairs = np.column_stack([keys // n, keys % n])
            abstained += int(score(model, pairs).abstained)
        rates[m_idx] = abstained / draws_per_model
    estimate = float(rates.mean())
    stderr = float(rates.std(ddof=1) / math.sqrt(n_models))
    return estimate, stderr
