"""Evaluation reports: accuracy, abstention, per-class, and ranking metrics."""

import numpy as np
import pytest

from tripletboost import LabelDict, StrongModel, TripletClassifier, evaluate_predictions
from tripletboost.metrics import parse_labels_file
from tripletboost.predict import score


def _preds(model, pair_lists):
    return [score(model, pairs) for pairs in pair_lists]


def _model(classifiers, n_labels):
    names = tuple(str(y) for y in range(n_labels))
    return StrongModel(classifiers, LabelDict(names), 10)


class TestEvaluate:
    def test_perfect_and_abstaining(self):
        model = _model([TripletClassifier(0, 1, 0b01, 0b10, 1.0)], 2)
        preds = _preds(model, [[(0, 1)], [(1, 0)], []])
        truth = [frozenset([0]), frozenset([1]), frozenset([0])]
        report = evaluate_predictions(preds, truth, model.label_dict,
                                      policy="fixed_lowest")
        assert report.abstention_rate == pytest.approx(1 / 3)
        assert report.accuracy == 1.0  # fixed_lowest resolves the abstainer to 0
        assert report.n_examples == 3

    def test_chance_level_for_all_abstaining(self):
        """Pure abstention under the random policy scores about 1/L."""
        model = _model([], 2)
        preds = _preds(model, [[] for _ in range(400)])
        truth = [frozenset([i % 2]) for i in range(400)]
        report = evaluate_predictions(preds, truth, model.label_dict,
                                      policy="random", seed=3)
        assert report.abstention_rate == 1.0
        assert abs(report.accuracy - 0.5) <= 0.09  # ~3.6 sigma

    def test_per_class_accuracy(self):
        model = _model([TripletClassifier(0, 1, 0b01, 0b01, 1.0)], 2)
        preds = _preds(model, [[(0, 1)], [(1, 0)]])  # both predict label 0
        truth = [frozenset([0]), frozenset([1])]
        report = evaluate_predictions(preds, truth, model.label_dict,
                                      policy="fixed_lowest")
        assert report.per_class_accuracy == {"0": 1.0, "1": 0.0}

    def test_ranking_metrics_multilabel(self):
        model = _model([TripletClassifier(0, 1, 0b011, 0, 2.0),
                        TripletClassifier(0, 2, 0b100, 0, 1.0)], 3)
        preds = _preds(model, [[(0, 1), (0, 2)]])
        truth = [frozenset([1, 2])]
        report = evaluate_predictions(preds, truth, model.label_dict,
                                      policy="fixed_lowest", k=2)
        # scores are [2, 2, 1]: top-1 is label 0 (tie toward lower id) -> miss
        assert report.precision_at_1 == 0.0
        # top-2 = {0, 1} covers one of the two true labels
        assert report.recall_at_k == pytest.approx(0.5)

    def test_recall_at_full_label_set_is_one(self):
        rng = np.random.default_rng(0)
        model = _model([TripletClassifier(0, 1, 0b01, 0b10, 0.5)], 3)
        pair_lists = [[(0, 1)], [(1, 0)], []]
        truth = [frozenset(rng.choice(3, size=int(rng.integers(1, 4)),
                                      replace=False).tolist())
                 for _ in pair_lists]
        report = evaluate_predictions(_preds(model, pair_lists), truth,
                                      model.label_dict, policy="fixed_lowest",
                                      k=3)
        assert report.recall_at_k == 1.0

    def test_report_lines_and_json(self):
        model = _model([TripletClassifier(0, 1, 0b01, 0b10, 1.0)], 2)
        preds = _preds(model, [[(0, 1)]])
        report = evaluate_predictions(preds, [frozenset([0])], model.label_dict,
                                      policy="fixed_lowest")
        lines = report.lines()
        assert any(line.startswith("accuracy=") for line in lines)
        assert '"accuracy": 1.0' in report.to_json()

    def test_length_mismatch_rejected(self):
        model = _model([], 2)
        with pytest.raises(ValueError):
            evaluate_predictions(_preds(model, [[]]), [], model.label_dict)


class TestLabelsFile:
    def test_single_and_multi_labels(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a,0.5,1.0\nb\na|b\n", encoding="utf-8")
        truth = parse_labels_file(path, LabelDict(("a", "b")))
        assert truth == [frozenset([0]), frozenset([1]), frozenset([0, 1])]

    def test_unknown_label_reports_row(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("a\nzzz\n", encoding="utf-8")
        with pytest.raises(ValueError, match="unknown label at row 2"):
            parse_labels_file(path, LabelDict(("a", "b")))

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("label\na\n", encoding="utf-8")
        truth = parse_labels_file(path, LabelDict(("a", "b")), has_header=True)
        assert truth == [frozenset([0])]
