"""Splits, metrics, cross-validation, and the experiment grid runner.

Splits are seeded and stratified by default, preserving the class ratio
within one record per part. All feature fitting (vocabulary, standardizer,
embeddings) happens inside the training part of each split.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus, Label, ReviewRecord
from . import pipelines

HOLDOUT_RATIOS = ((90, 10), (80, 20), (70, 30), (60, 40))
RESULT_COLUMNS = (
    "experiment", "dataset", "ratio_or_cv", "embed_dim", "hidden_dim",
    "ngram", "classifier", "seed", "accuracy", "accuracy_final",
)


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    kind: str  # holdout | kfold
    ratio: tuple[int, int] = (80, 20)
    k: int = 5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("holdout", "kfold"):
            raise EvalError(f"unknown split kind {self.kind!r}")
        if self.kind == "holdout" and sum(self.ratio) != 100:
            raise EvalError("holdout ratio parts must sum to 100")
        if self.kind == "kfold" and self.k < 2:
            raise EvalError("k must be >= 2")


def _class_indices(labels: list[Label], rng: np.random.Generator, stratified: bool):
    if any(l is None for l in labels):
        raise EvalError("split requires a fully labeled corpus")
    if stratified:
        groups = []
        for cls in (Label.SPAM, Label.HAM):
            idx = np.array([i for i, l in enumerate(labels) if l is cls], dtype=np.int64)
            if idx.size == 0:
                raise EvalError(f"class {cls.value} absent from corpus")
            rng.shuffle(idx)
            groups.append(idx)
        return groups
    idx = np.arange(len(labels))
    rng.shuffle(idx)
    return [idx]


def split_holdout(labels: list[Label], spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Seeded (stratified) train/test index split at the given percent ratio."""
    if len(labels) < 2:
        raise EvalError("need at least 2 records for a holdout split")
    rng = np.random.default_rng(spec.seed)
    test_frac = spec.ratio[1] / 100.0
    groups = _class_indices(labels, rng, spec.stratified)
    total_test = int(round(test_frac * len(labels)))
    test_parts, sizes = [], []
    for g in groups:
        sizes.append(test_frac * g.size)
    floors = [int(np.floor(s)) for s in sizes]
    remainder = total_test - sum(floors)
    # largest fractional part first; stable so ties keep class order
    order = np.argsort([f - s for f, s in zip(floors, sizes)], kind="stable")
    counts = list(floors)
    for j in order[:max(0, remainder)]:
        counts[j] += 1
    for g, c in zip(groups, counts):
        test_parts.append(g[:c])
    test_idx = np.sort(np.concatenate(test_parts))
    mask = np.ones(len(labels), dtype=bool)
    mask[test_idx] = False
    train_idx = np.flatnonzero(mask)
    return train_idx, test_idx


def split_kfold(labels: list[Label], spec: SplitSpec) -> list[np.ndarray]:
    """k disjoint covering folds (round-robin per class after a seeded shuffle)."""
    if len(labels) < spec.k:
        raise EvalError(f"need at least k={spec.k} records")
    rng = np.random.default_rng(spec.seed)
    groups = _class_indices(labels, rng, spec.stratified)
    folds: list[list[int]] = [[] for _ in range(spec.k)]
    position = 0
    for g in groups:
        for idx in g:
            folds[position % spec.k].append(int(idx))
            position += 1
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int
    config: dict = field(default_factory=dict)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return 100.0 * (self.tp + self.tn) / self.total

    def per_class(self) -> dict:
        def prf(tp, fp, fn):
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            return {"precision": precision, "recall": recall, "f1": f1}

        return {
            "spam": prf(self.tp, self.fp, self.fn),
            "ham": prf(self.tn, self.fn, self.fp),
        }

    def to_json_obj(self) -> dict:
        return {
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "accuracy": self.accuracy,
            "per_class": self.per_class(),
            "config": self.config,
        }


def evaluate_predictions(true: list[Label], pred: list[Label], config: dict | None = None) -> EvalReport:
    """Confusion-matrix report with spam as the positive class."""
    if not true:
        raise EvalError("empty test set")
    if len(true) != len(pred):
        raise EvalError("prediction/label length mismatch")
    tp = sum(1 for t, p in zip(true, pred) if t is Label.SPAM and p is Label.SPAM)
    fp = sum(1 for t, p in zip(true, pred) if t is Label.HAM and p is Label.SPAM)
    tn = sum(1 for t, p in zip(true, pred) if t is Label.HAM and p is Label.HAM)
    fn = sum(1 for t, p in zip(true, pred) if t is Label.SPAM and p is Label.HAM)
    return EvalReport(tp=tp, fp=fp, tn=tn, fn=fn, config=config or {})


@dataclass
class CvResult:
    fold_reports: list[EvalReport]
    mean_accuracy: float
    std_accuracy: float


def cross_validate(records: list[ReviewRecord], factory, spec: SplitSpec) -> CvResult:
    """Train a fresh pipeline per fold via ``factory(train_records) -> predict_fn``.

    ``predict_fn(test_records)`` must return labels; all feature fitting
    happens inside the factory, so nothing leaks from the test fold.
    """
    labels = [r.label for r in records]
    folds = split_kfold(labels, spec)
    reports = []
    for i, test_idx in enumerate(folds):
        test_set = set(test_idx.tolist())
        train_records = [r for j, r in enumerate(records) if j not in test_set]
        test_records = [records[j] for j in test_idx]
        predict_fn = factory(train_records)
        pred = predict_fn(test_records)
        reports.append(evaluate_predictions([r.label for r in test_records], pred,
                                            config={"fold": i}))
    accs = np.array([r.accuracy for r in reports])
    return CvResult(fold_reports=reports, mean_accuracy=float(accs.mean()),
                    std_accuracy=float(accs.std()))


# --- experiment grid runner -------------------------------------------------


@dataclass
class ExperimentGrid:
    """Default grids mirror the reported hyper-parameter search; overrides
    restrict any axis for quick runs."""

    ratios: tuple[tuple[int, int], ...] = HOLDOUT_RATIOS
    embed_dims: tuple[int, ...] = (50, 100, 200)
    hidden_dims: tuple[int, ...] = (50, 100, 200)
    ngram_ranges: tuple[tuple[int, int], ...] = ((1, 1), (2, 2), (3, 3), (1, 2), (2, 3), (1, 3))
    folds: tuple[int, ...] = (5, 10)
    classifiers: tuple[str, ...] = ("svm", "knn", "nb")
    seeds: tuple[int, ...] = (0, 1, 2)
    epochs: int = 20
    batch_size: int = 32
    dropout: float = 0.5
    mlp_min_df: int = 3  # prunes hapax n-grams so the 3x170 net stays tractable
    w2v_epochs: int = 5
    w2v_window: int = 5
    w2v_negatives: int = 5
    max_len_cap: int = 400


def _ngram_name(n_range: tuple[int, int]) -> str:
    names = {1: "uni", 2: "bi", 3: "tri"}
    lo, hi = n_range
    return "+".join(names[n] for n in range(lo, hi + 1))


def run_experiment(
    experiment_id: str,
    corpora: dict[str, Corpus],
    grid: ExperimentGrid | None = None,
    out_dir: str | Path | None = None,
) -> list[dict]:
    """Run one of the four experiment grids and return result rows.

    I: CNN+LSTM holdout grid on the first corpus. II: the same on the second
    (or named "yelp") corpus. III: MLP k-fold CV over n-gram combos on every
    corpus. IV: traditional classifiers, k-fold CV over n-gram combos.
    """
    grid = grid or ExperimentGrid()
    experiment_id = experiment_id.upper()
    rows: list[dict] = []
    if experiment_id in ("I", "II"):
        name, corpus = _pick_corpus(corpora, experiment_id)
        for seed in grid.seeds:
            for ratio in grid.ratios:
                for dim in grid.embed_dims:
                    rows.extend(_neural_holdout_rows("cnn", experiment_id, name, corpus,
                                                     ratio, dim, None, seed, grid))
                    for hidden in grid.hidden_dims:
                        rows.extend(_neural_holdout_rows("lstm", experiment_id, name, corpus,
                                                         ratio, dim, hidden, seed, grid))
    elif experiment_id == "III":
        for name, corpus in corpora.items():
            for seed in grid.seeds:
                for k in grid.folds:
                    for n_range in grid.ngram_ranges:
                        acc = pipelines.mlp_cv_accuracy(corpus, n_range, k, seed, grid)
                        rows.append(_row("III", name, f"{k}-fold", "", "",
                                         _ngram_name(n_range), "mlp", seed, acc, acc))
    elif experiment_id == "IV":
        name, corpus = _pick_corpus(corpora, "IV")
        for seed in grid.seeds:
            for k in grid.folds:
                for n_range in grid.ngram_ranges:
                    for clf in grid.classifiers:
                        acc = pipelines.classic_cv_accuracy(corpus, clf, n_range, k, seed)
                        rows.append(_row("IV", name, f"{k}-fold", "", "",
                                         _ngram_name(n_range), clf, seed, acc, acc))
    else:
        raise EvalError(f"unknown experiment id {experiment_id!r}")
    if out_dir is not None:
        write_result_table(rows, Path(out_dir), experiment_id)
    return rows


def _pick_corpus(corpora: dict[str, Corpus], experiment_id: str) -> tuple[str, Corpus]:
    if not corpora:
        raise EvalError("no corpus supplied")
    names = list(corpora)
    if experiment_id == "II" and len(names) > 1:
        return names[1], corpora[names[1]]
    return names[0], corpora[names[0]]


def _neural_holdout_rows(kind, experiment_id, name, corpus, ratio, dim, hidden, seed, grid):
    best, final = pipelines.neural_holdout_accuracy(
        corpus, kind=kind, ratio=ratio, embed_dim=dim, hidden_dim=hidden,
        seed=seed, grid=grid,
    )
    return [_row(experiment_id, name, f"{ratio[0]}:{ratio[1]}", dim,
                 hidden if hidden is not None else "", "", kind, seed, best, final)]


def _row(experiment, dataset, ratio_or_cv, embed_dim, hidden_dim, ngram,
         classifier, seed, accuracy, accuracy_final) -> dict:
    return {
        "experiment": experiment,
        "dataset": dataset,
        "ratio_or_cv": ratio_or_cv,
        "embed_dim": embed_dim,
        "hidden_dim": hidden_dim,
        "ngram": ngram,
        "classifier": classifier,
        "seed": seed,
        "accuracy": accuracy,
        "accuracy_final": accuracy_final,
    }


_SUMMARY_KEYS = {
    "I": ("dataset", "classifier", "ratio_or_cv"),
    "II": ("dataset", "classifier", "ratio_or_cv"),
    "III": ("dataset",),
    "IV": ("dataset", "classifier"),
}


def summarize_best(rows: list[dict], experiment_id: str) -> list[dict]:
    """Best-of-grid row per group (per ratio for holdout experiments, per
    classifier for the traditional grid); ties keep the first cell."""
    keys = _SUMMARY_KEYS[experiment_id.upper()]
    best: dict[tuple, dict] = {}
    for row in rows:
        group = tuple(row[k] for k in keys)
        if group not in best or row["accuracy"] > best[group]["accuracy"]:
            best[group] = row
    return [best[g] for g in sorted(best)]


def write_result_table(rows: list[dict], out_dir: Path, experiment_id: str) -> tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"experiment_{experiment_id}.csv"
    json_path = out_dir / f"experiment_{experiment_id}.json"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    json_path.write_text(json.dumps(rows, sort_keys=True, indent=1), encoding="utf-8")
    summary = summarize_best(rows, experiment_id)
    with open(out_dir / f"experiment_{experiment_id}_summary.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        writer.writerows(summary)
    (out_dir / f"experiment_{experiment_id}_summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=1), encoding="utf-8")
    return csv_path, json_path
