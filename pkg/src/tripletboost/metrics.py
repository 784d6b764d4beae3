"""Evaluation reports: accuracy, abstention, and ranking metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dataset import LabelDict
from .predict import Prediction, resolve

__all__ = ["EvalReport", "evaluate_predictions", "parse_labels_file"]


@dataclass(frozen=True)
class EvalReport:
    """Flat summary of one evaluation run; all rates lie in [0, 1]."""

    accuracy: float
    abstention_rate: float
    per_class_accuracy: dict[str, float]
    precision_at_1: float
    recall_at_k: float
    k: int
    n_examples: int

    def lines(self) -> list[str]:
        out = [
            f"n_examples={self.n_examples}",
            f"accuracy={self.accuracy!r}",
            f"abstention_rate={self.abstention_rate!r}",
            f"precision_at_1={self.precision_at_1!r}",
            f"recall_at_{self.k}={self.recall_at_k!r}",
        ]
        for name, value in self.per_class_accuracy.items():
            out.append(f"per_class_accuracy_{name}={value!r}")
        return out

    def to_json(self) -> str:
        return json.dumps({
            "n_examples": self.n_examples,
            "accuracy": self.accuracy,
            "abstention_rate": self.abstention_rate,
            "precision_at_1": self.precision_at_1,
            "recall_at_k": self.recall_at_k,
            "k": self.k,
            "per_class_accuracy": self.per_class_accuracy,
        }, sort_keys=True)


def evaluate_predictions(predictions: list[Prediction], truth: list[frozenset[int]],
                         label_dict: LabelDict, policy: str = "random",
                         seed: int = 0, k: int = 5) -> EvalReport:
    """Score predictions against (possibly multi-label) ground truth.

    Accuracy counts a resolved label as correct when it belongs to the truth
    set.  Ranking metrics ignore the resolution policy: precision@1 asks
    whether the top-voted label is true, recall@k how much of the truth the
    k top-voted labels cover.  Rank ties break toward lower label ids.
    """
    if len(predictions) != len(truth):
        raise ValueError("predictions and truth differ in length")
    if not predictions:
        raise ValueError("nothing to evaluate")
    n_labels = label_dict.size
    k = max(1, min(k, n_labels))
    rng = np.random.default_rng(seed)
    correct = 0
    abstained = 0
    top1_hits = 0
    recall_sum = 0.0
    class_total = np.zeros(n_labels, dtype=np.int64)
    class_correct = np.zeros(n_labels, dtype=np.int64)
    for pred, truth_set in zip(predictions, truth):
        if not truth_set:
            raise ValueError("every example needs at least one true label")
        resolved = resolve(pred, policy, rng)
        hit = resolved in truth_set
        correct += hit
        abstained += pred.abstained
        ranking = np.lexsort((np.arange(n_labels), -pred.scores))
        top1_hits += int(ranking[0]) in truth_set
        recall_sum += len(truth_set.intersection(ranking[:k].tolist())) / len(truth_set)
        for y in truth_set:
            class_total[y] += 1
            class_correct[y] += hit
    count = len(predictions)
    per_class = {
        label_dict.names[y]: float(class_correct[y] / class_total[y])
        for y in range(n_labels) if class_total[y]
    }
    return EvalReport(
        accuracy=correct / count,
        abstention_rate=abstained / count,
        per_class_accuracy=per_class,
        precision_at_1=top1_hits / count,
        recall_at_k=recall_sum / count,
        k=k,
        n_examples=count,
    )


def parse_labels_file(path, label_dict: LabelDict,
                      has_header: bool = False) -> list[frozenset[int]]:
    """Read truth labels: first CSV cell per row, multi-labels joined by '|'."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    start = 1 if has_header else 0
    truth: list[frozenset[int]] = []
    for lineno, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        cell = line.split(",")[0]
        names = [part for part in cell.split("|") if part]
        if not names:
            raise ValueError(f"missing label at row {lineno}")
        try:
            truth.append(frozenset(label_dict.id_of(name) for name in names))
        except KeyError as exc:
            raise ValueError(f"unknown label at row {lineno}: {exc}") from None
    if not truth:
        raise ValueError("empty labels file")
    return truth
