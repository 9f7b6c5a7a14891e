import json

import numpy as np
import pytest

from reviewguard.corpus import Corpus, Label, ReviewRecord
from reviewguard.evaluation import (
    EvalError,
    EvalReport,
    ExperimentGrid,
    SplitSpec,
    cross_validate,
    evaluate_predictions,
    run_experiment,
    split_holdout,
    split_kfold,
    RESULT_COLUMNS,
)
from reviewguard.features import fit_vocab
from reviewguard.pipelines import fit_classic
from reviewguard.synthetic import make_linear_corpus
from reviewguard.textprep import PrepConfig, preprocess_corpus

SPAM, HAM = Label.SPAM, Label.HAM


def balanced_labels(n):
    return [SPAM if i % 2 == 0 else HAM for i in range(n)]


def test_holdout_80_20_on_1600():
    labels = balanced_labels(1600)
    train, test = split_holdout(labels, SplitSpec(kind="holdout", ratio=(80, 20), seed=0))
    assert len(train) == 1280
    assert len(test) == 320
    assert set(train) | set(test) == set(range(1600))
    assert not set(train) & set(test)
    assert sum(1 for i in test if labels[i] is SPAM) == 160


def test_holdout_stratification_on_balanced_ten():
    labels = balanced_labels(10)
    train, test = split_holdout(labels, SplitSpec(kind="holdout", ratio=(50, 50), seed=3))
    assert len(train) == len(test) == 5
    for part in (train, test):
        spam = sum(1 for i in part if labels[i] is SPAM)
        assert abs(spam - (len(part) - spam)) <= 1


def test_holdout_all_ratios_cover():
    labels = balanced_labels(127)
    for ratio in ((90, 10), (80, 20), (70, 30), (60, 40)):
        train, test = split_holdout(labels, SplitSpec(kind="holdout", ratio=ratio, seed=5))
        assert len(train) + len(test) == 127
        assert abs(len(test) - round(127 * ratio[1] / 100)) <= 1


def test_kfold_disjoint_covering():
    labels = balanced_labels(100)
    folds = split_kfold(labels, SplitSpec(kind="kfold", k=5, seed=1))
    assert len(folds) == 5
    assert all(len(f) == 20 for f in folds)
    union = np.concatenate(folds)
    assert len(set(union.tolist())) == 100


def test_kfold_stratified_within_one():
    labels = [SPAM] * 30 + [HAM] * 70
    folds = split_kfold(labels, SplitSpec(kind="kfold", k=5, seed=2))
    for f in folds:
        spam = sum(1 for i in f if labels[i] is SPAM)
        assert 5 <= spam <= 7


def test_split_requires_both_classes():
    with pytest.raises(EvalError):
        split_holdout([SPAM] * 10, SplitSpec(kind="holdout", ratio=(80, 20)))


def test_split_deterministic_given_seed():
    labels = balanced_labels(40)
    s = SplitSpec(kind="holdout", ratio=(70, 30), seed=9)
    t1 = split_holdout(labels, s)
    t2 = split_holdout(labels, s)
    assert np.array_equal(t1[0], t2[0]) and np.array_equal(t1[1], t2[1])


def test_metrics_hand_confusion():
    report = EvalReport(tp=9, tn=9, fp=1, fn=1)
    assert report.accuracy == 90.0


def test_metrics_perfect_classifier():
    true = [SPAM] * 5 + [HAM] * 5
    report = evaluate_predictions(true, list(true))
    pc = report.per_class()
    for cls in ("spam", "ham"):
        assert pc[cls] == {"precision": 1.0, "recall": 1.0, "f1": 1.0}


def test_metrics_constant_ham_on_imbalanced_set():
    true = [SPAM] * 350 + [HAM] * 1650
    report = evaluate_predictions(true, [HAM] * 2000)
    assert report.accuracy == 82.5
    assert report.per_class()["spam"]["recall"] == 0.0


def test_accuracy_equals_confusion_recomputation():
    rng = np.random.default_rng(0)
    true = [SPAM if rng.random() < 0.5 else HAM for _ in range(97)]
    pred = [SPAM if rng.random() < 0.5 else HAM for _ in range(97)]
    report = evaluate_predictions(true, pred)
    assert report.total == 97
    assert report.accuracy == 100.0 * (report.tp + report.tn) / report.total


def test_evaluate_empty_rejected():
    with pytest.raises(EvalError):
        evaluate_predictions([], [])


def test_cross_validate_trains_fresh_model_per_fold():
    corpus, _ = make_linear_corpus(40, seed=4)
    calls = []

    def factory(train_records):
        calls.append(len(train_records))
        pipeline = fit_classic(train_records, "nb", n_range=(1, 1))
        return pipeline.predict

    result = cross_validate(corpus.records, factory, SplitSpec(kind="kfold", k=5, seed=0))
    assert len(calls) == 5
    assert all(c == 32 for c in calls)
    assert result.mean_accuracy > 90.0
    assert len(result.fold_reports) == 5


def test_no_leakage_test_only_tokens_stay_oov():
    corpus, _ = make_linear_corpus(30, seed=6)
    poisoned = []
    for i, rec in enumerate(corpus.records):
        text = rec.text + " poisonzzz" if i < 6 else rec.text
        poisoned.append(ReviewRecord(id=rec.id, text=text, label=rec.label, source=rec.source))
    train_records = poisoned[6:]
    prep = PrepConfig(stopwords=frozenset())
    docs = preprocess_corpus(Corpus("train", train_records), prep)
    vocab = fit_vocab(docs, (1, 1))
    assert "poisonzzz" not in vocab.entries


def test_experiment_one_cell_grid_override(tmp_path):
    corpus, _ = make_linear_corpus(40, seed=7)
    grid = ExperimentGrid(ratios=((80, 20),), embed_dims=(8,), hidden_dims=(6,),
                          seeds=(0,), epochs=2, batch_size=8,
                          w2v_epochs=1, max_len_cap=12)
    rows = run_experiment("I", {"toy": corpus}, grid=grid, out_dir=tmp_path)
    assert len(rows) == 2  # one cnn cell + one lstm cell
    assert {r["classifier"] for r in rows} == {"cnn", "lstm"}
    assert (tmp_path / "experiment_I.csv").exists()
    assert (tmp_path / "experiment_I.json").exists()
    header = (tmp_path / "experiment_I.csv").read_text().splitlines()[0]
    assert header == ",".join(RESULT_COLUMNS)


def test_experiment_iv_table_layout(tmp_path):
    corpus, _ = make_linear_corpus(30, seed=8)
    grid = ExperimentGrid(folds=(5,), ngram_ranges=((1, 1),), seeds=(0,),
                          classifiers=("svm", "knn", "nb"))
    rows = run_experiment("IV", {"yelp": corpus}, grid=grid, out_dir=tmp_path)
    assert len(rows) == 3
    assert all(set(RESULT_COLUMNS) == set(r.keys()) for r in rows)
    assert all(r["ratio_or_cv"] == "5-fold" for r in rows)
    assert {r["classifier"] for r in rows} == {"svm", "knn", "nb"}


def test_experiment_iii_ngram_combos():
    corpus, _ = make_linear_corpus(20, seed=9)
    grid = ExperimentGrid(folds=(5,), ngram_ranges=((1, 1), (1, 2)), seeds=(0,),
                          epochs=2, batch_size=8)
    rows = run_experiment("III", {"toy": corpus}, grid=grid)
    assert len(rows) == 2
    assert {r["ngram"] for r in rows} == {"uni", "uni+bi"}
    assert all(r["classifier"] == "mlp" for r in rows)


def test_unknown_experiment_rejected():
    with pytest.raises(EvalError):
        run_experiment("V", {})


def test_experiment_summary_one_best_row_per_ratio(tmp_path):
    corpus, _ = make_linear_corpus(40, seed=12)
    grid = ExperimentGrid(embed_dims=(8,), hidden_dims=(6,), seeds=(0, 1),
                          epochs=2, batch_size=8, w2v_epochs=1, max_len_cap=12)
    rows = run_experiment("I", {"toy": corpus}, grid=grid, out_dir=tmp_path)
    assert len(rows) == 2 * 4 * 2  # seeds x ratios x {cnn, lstm}
    summary = json.loads((tmp_path / "experiment_I_summary.json").read_text())
    assert len(summary) == 8  # 4 ratio rows per classifier
    for classifier in ("cnn", "lstm"):
        ratios = [r["ratio_or_cv"] for r in summary if r["classifier"] == classifier]
        assert ratios == sorted(["90:10", "80:20", "70:30", "60:40"])
        for row in summary:
            peers = [r["accuracy"] for r in rows
                     if (r["classifier"], r["ratio_or_cv"]) == (row["classifier"], row["ratio_or_cv"])]
            assert row["accuracy"] == max(peers)


def test_experiment_iv_summary_one_row_per_classifier(tmp_path):
    corpus, _ = make_linear_corpus(30, seed=13)
    grid = ExperimentGrid(folds=(5, 10), ngram_ranges=((1, 1), (2, 2)), seeds=(0,))
    run_experiment("IV", {"yelp": corpus}, grid=grid, out_dir=tmp_path)
    summary = json.loads((tmp_path / "experiment_IV_summary.json").read_text())
    assert sorted(r["classifier"] for r in summary) == ["knn", "nb", "svm"]
