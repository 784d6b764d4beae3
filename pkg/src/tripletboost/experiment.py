"""Seeded experiment grids over triplet proportion and noise level."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, replace

import numpy as np

from . import boost, dataset, metrics, predict, triplets

__all__ = ["ExperimentSpec", "parse_spec", "run_cell", "run_experiment"]

CSV_HEADER = ("metric", "proportion", "noise", "seed", "accuracy", "abstention_rate")


@dataclass(frozen=True)
class ExperimentSpec:
    """One grid: repetitions x proportions x noise levels on a single dataset.

    ``data`` is a CSV path or the literal "moons" for the built-in synthetic
    generator.  Every cell derives its own integer seed from (seed, rep,
    proportion index, noise index); the dataset and its split are shared by
    all cells of one repetition.
    """

    data: str
    metric: str
    proportions: tuple[float, ...]
    noise_levels: tuple[float, ...]
    rounds: int
    repetitions: int
    seed: int
    out_dir: str
    test_fraction: float = 0.3
    moons_n: int = 500
    moons_noise: float = 0.1
    has_header: bool = False

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if not self.proportions or not self.noise_levels:
            raise ValueError("need at least one proportion and one noise level")
        for value in self.proportions + self.noise_levels:
            if not 0.0 <= value <= 1.0:
                raise ValueError("proportions and noise levels must lie in [0, 1]")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")


_BOOL = {"true": True, "false": False, "1": True, "0": False,
         "yes": True, "no": False}


def parse_spec(path) -> ExperimentSpec:
    """Parse the key=value spec file ('#' starts a comment)."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"expected key=value at line {lineno}")
            values[key.strip()] = val.strip()
    try:
        spec = ExperimentSpec(
            data=values["data"],
            metric=values["metric"],
            proportions=tuple(float(v) for v in values["proportions"].split(",")),
            noise_levels=tuple(float(v) for v in values["noises"].split(",")),
            rounds=int(values["rounds"]),
            repetitions=int(values["repetitions"]),
            seed=int(values["seed"]),
            out_dir=values["out"],
        )
    except KeyError as exc:
        raise ValueError(f"missing required spec key: {exc}") from None
    optional = {}
    if "test_fraction" in values:
        optional["test_fraction"] = float(values["test_fraction"])
    if "moons_n" in values:
        optional["moons_n"] = int(values["moons_n"])
    if "moons_noise" in values:
        optional["moons_noise"] = float(values["moons_noise"])
    if "has_header" in values:
        flag = values["has_header"].lower()
        if flag not in _BOOL:
            raise ValueError(f"has_header must be boolean-like, got "
                             f"{values['has_header']!r}")
        optional["has_header"] = _BOOL[flag]
    return replace(spec, **optional) if optional else spec


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _load_data(spec: ExperimentSpec, data_seed: int) -> dataset.Dataset:
    if spec.data == "moons":
        return dataset.make_moons(spec.moons_n, spec.moons_noise, data_seed)
    return dataset.load_csv(spec.data, has_header=spec.has_header)


def run_cell(spec: ExperimentSpec, proportion: float, noise: float,
             cell_seed: int, data_seed: int) -> tuple:
    """One grid cell: generate, train, evaluate; returns a CSV row tuple."""
    ds = _load_data(spec, data_seed)
    train_ds, test_ds = dataset.split(ds, spec.test_fraction, data_seed)
    gen_seed, test_seed, train_seed, eval_seed = (
        int(s.generate_state(1)[0])
        for s in np.random.SeedSequence(cell_seed).spawn(4))
    store = triplets.generate_training_set(train_ds, spec.metric, proportion,
                                           noise, gen_seed)
    model = boost.train(train_ds, store,
                        boost.BoostConfig(rounds=spec.rounds, seed=train_seed))
    tset = triplets.generate_test_set(test_ds, train_ds, spec.metric,
                                      proportion, noise, test_seed)
    predictions = predict.predict_all(model, tset)
    truth = [frozenset([int(y)]) for y in test_ds.labels]
    report = metrics.evaluate_predictions(predictions, truth, ds.label_dict,
                                          policy="random", seed=eval_seed)
    return (spec.metric, proportion, noise, cell_seed,
            report.accuracy, report.abstention_rate)


def run_experiment(spec: ExperimentSpec, log=None) -> list[tuple]:
    """Run the whole grid deterministically and write ``results.csv``."""
    rows = []
    for p_idx, proportion in enumerate(spec.proportions):
        for n_idx, noise in enumerate(spec.noise_levels):
            for rep in range(spec.repetitions):
                cell_seed = _derived_seed(spec.seed, rep, p_idx, n_idx)
                data_seed = _derived_seed(spec.seed, rep)
                if log is not None:
                    log(f"cell proportion={proportion} noise={noise} rep={rep}")
                rows.append(run_cell(spec, proportion, noise,
                                     cell_seed, data_seed))
    os.makedirs(spec.out_dir, exist_ok=True)
    out_path = os.path.join(spec.out_dir, "results.csv")
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)
    return rows
