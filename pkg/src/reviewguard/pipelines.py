"""End-to-end pipelines: preprocessing, feature fitting (train side only),
and classifier training, shared by the experiment runner and the CLI."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classic, models
from .corpus import Corpus, Label, ReviewRecord
from .embed import EmbeddingTable, default_max_len, encode, train_word2vec
from .features import (
    NgramVocab,
    Standardizer,
    count_transform,
    fit_standardizer,
    fit_vocab,
    tfidf_transform,
    transform_all,
)
from .models import ModelSpec, SequenceDataset
from .textprep import PrepConfig, preprocess_corpus


def _tokenized(records: list[ReviewRecord], prep: PrepConfig):
    return preprocess_corpus(Corpus("tmp", list(records)), prep)


# --- classic classifiers ------------------------------------------------------


@dataclass
class ClassicPipeline:
    """A vocabulary plus a fitted traditional classifier."""

    classifier: str
    vocab: NgramVocab
    model: object
    prep: PrepConfig

    def predict(self, records: list[ReviewRecord]) -> list[Label]:
        docs = _tokenized(records, self.prep)
        out = []
        for doc in docs:
            if self.classifier == "nb":
                out.append(classic.nb_predict(self.model, count_transform(doc, self.vocab)))
            elif self.classifier == "knn":
                out.append(classic.knn_predict(self.model, tfidf_transform(doc, self.vocab)))
            else:
                out.append(classic.svm_predict(self.model, tfidf_transform(doc, self.vocab)))
        return out


def fit_classic(
    records: list[ReviewRecord],
    classifier: str,
    n_range: tuple[int, int] = (1, 1),
    prep: PrepConfig | None = None,
    seed: int = 0,
    knn_k: int = 5,
    svm_lam: float = 1e-4,
    svm_epochs: int = 20,
) -> ClassicPipeline:
    prep = prep or PrepConfig()
    docs = _tokenized(records, prep)
    labels = [r.label for r in records]
    vocab = fit_vocab(docs, n_range=n_range, min_df=1)
    if classifier == "nb":
        model = classic.nb_train(transform_all(docs, vocab, weighting="counts"), labels)
    elif classifier == "knn":
        model = classic.knn_fit(transform_all(docs, vocab, weighting="tfidf"), labels,
                                k=min(knn_k, len(records)))
    elif classifier == "svm":
        model = classic.svm_train(transform_all(docs, vocab, weighting="tfidf"), labels,
                                  lam=svm_lam, epochs=svm_epochs, seed=seed, calibrate=False)
    else:
        raise ValueError(f"unknown classic classifier {classifier!r}")
    return ClassicPipeline(classifier=classifier, vocab=vocab, model=model, prep=prep)


def classic_cv_accuracy(corpus: Corpus, classifier: str, n_range: tuple[int, int],
                        k: int, seed: int, prep: PrepConfig | None = None) -> float:
    from .evaluation import SplitSpec, cross_validate

    def factory(train_records):
        pipeline = fit_classic(train_records, classifier, n_range=n_range,
                               prep=prep, seed=seed)
        return pipeline.predict

    result = cross_validate(corpus.records, factory,
                            SplitSpec(kind="kfold", k=k, seed=seed))
    return result.mean_accuracy


# --- MLP over TF-IDF ------------------------------------------------------------


@dataclass
class MlpPipeline:
    vocab: NgramVocab
    standardizer: Standardizer
    model: object
    prep: PrepConfig

    def predict(self, records: list[ReviewRecord]) -> list[Label]:
        dataset = self.to_dataset(records)
        return models.predict(self.model, dataset, batch_size=64)

    def to_dataset(self, records: list[ReviewRecord]) -> models.StandardizedSparseDataset:
        docs = _tokenized(records, self.prep)
        vectors = [tfidf_transform(d, self.vocab) for d in docs]
        labels = [r.label for r in records]
        y = (models.labels_to_targets(labels) if all(l is not None for l in labels)
             else np.zeros(len(records), dtype=np.int64))
        return models.StandardizedSparseDataset(vectors, self.standardizer, y)


def fit_mlp(
    train_records: list[ReviewRecord],
    test_records: list[ReviewRecord] | None = None,
    n_range: tuple[int, int] = (1, 3),
    prep: PrepConfig | None = None,
    spec: ModelSpec | None = None,
    min_df: int = 1,
) -> tuple[MlpPipeline, models.TrainReport]:
    prep = prep or PrepConfig()
    spec = spec or ModelSpec(kind="mlp")
    docs = _tokenized(train_records, prep)
    vocab = fit_vocab(docs, n_range=n_range, min_df=min_df)
    train_vecs = [tfidf_transform(d, vocab) for d in docs]
    scaler = fit_standardizer(train_vecs)
    train_set = models.StandardizedSparseDataset(
        train_vecs, scaler, models.labels_to_targets([r.label for r in train_records]))
    pipeline = MlpPipeline(vocab=vocab, standardizer=scaler, model=None, prep=prep)
    test_set = pipeline.to_dataset(test_records) if test_records else train_set
    model, report = models.train(spec, train_set, test_set)
    pipeline.model = model
    return pipeline, report


def mlp_cv_accuracy(corpus: Corpus, n_range: tuple[int, int], k: int, seed: int,
                    grid=None, prep: PrepConfig | None = None) -> float:
    from .evaluation import SplitSpec, cross_validate

    epochs = grid.epochs if grid is not None else 20
    batch_size = grid.batch_size if grid is not None else 32
    min_df = grid.mlp_min_df if grid is not None else 1

    def factory(train_records):
        spec = ModelSpec(kind="mlp", epochs=epochs, batch_size=batch_size, seed=seed)
        pipeline, _ = fit_mlp(train_records, n_range=n_range, prep=prep, spec=spec,
                              min_df=min_df)
        return pipeline.predict

    result = cross_validate(corpus.records, factory,
                            SplitSpec(kind="kfold", k=k, seed=seed))
    return result.mean_accuracy


# --- CNN / LSTM over word2vec -----------------------------------------------------


@dataclass
class NeuralSequencePipeline:
    table: EmbeddingTable
    max_len: int
    model: object
    prep: PrepConfig

    def to_dataset(self, records: list[ReviewRecord]) -> SequenceDataset:
        docs = _tokenized(records, self.prep)
        seqs = [encode(d, self.table, self.max_len) for d in docs]
        labels = [r.label for r in records]
        return SequenceDataset.from_encoded(
            seqs, labels if all(l is not None for l in labels) else None)

    def predict(self, records: list[ReviewRecord]) -> list[Label]:
        return models.predict(self.model, self.to_dataset(records))


def fit_neural_sequence(
    train_records: list[ReviewRecord],
    test_records: list[ReviewRecord],
    kind: str,
    embed_dim: int = 100,
    hidden_dim: int | None = None,
    prep: PrepConfig | None = None,
    spec: ModelSpec | None = None,
    seed: int = 0,
    w2v_epochs: int = 5,
    w2v_window: int = 5,
    w2v_negatives: int = 5,
    max_len_cap: int = 400,
) -> tuple[NeuralSequencePipeline, models.TrainReport]:
    """Embeddings and sequence length are fitted on the training records only."""
    prep = prep or PrepConfig()
    train_docs = _tokenized(train_records, prep)
    table = train_word2vec(train_docs, dim=embed_dim, window=w2v_window,
                           negatives=w2v_negatives, epochs=w2v_epochs, seed=seed)
    max_len = default_max_len(train_docs, cap=max_len_cap)
    if spec is None:
        spec = ModelSpec(kind=kind, lstm_hidden=hidden_dim or 100, seed=seed)
    train_seqs = [encode(d, table, max_len) for d in train_docs]
    train_set = SequenceDataset.from_encoded(
        train_seqs, [r.label for r in train_records])
    pipeline = NeuralSequencePipeline(table=table, max_len=max_len, model=None, prep=prep)
    test_set = pipeline.to_dataset(test_records)
    model, report = models.train(spec, train_set, test_set, table=table)
    pipeline.model = model
    return pipeline, report


def neural_holdout_accuracy(
    corpus: Corpus,
    kind: str,
    ratio: tuple[int, int],
    embed_dim: int,
    hidden_dim: int | None,
    seed: int,
    grid,
) -> tuple[float, float]:
    """(best-epoch, final-epoch) test accuracy for one holdout grid cell."""
    from .evaluation import SplitSpec, split_holdout

    labels = [r.label for r in corpus.records]
    train_idx, test_idx = split_holdout(labels, SplitSpec(kind="holdout", ratio=ratio, seed=seed))
    train_records = [corpus.records[i] for i in train_idx]
    test_records = [corpus.records[i] for i in test_idx]
    spec = ModelSpec(kind=kind, lstm_hidden=hidden_dim or 100, epochs=grid.epochs,
                     batch_size=grid.batch_size, dropout=grid.dropout, seed=seed)
    _, report = fit_neural_sequence(
        train_records, test_records, kind=kind, embed_dim=embed_dim,
        hidden_dim=hidden_dim, spec=spec, seed=seed,
        w2v_epochs=grid.w2v_epochs, w2v_window=grid.w2v_window,
        w2v_negatives=grid.w2v_negatives, max_len_cap=grid.max_len_cap,
    )
    return report.best_test_accuracy, report.test_accuracy[-1]


# --- persistence -----------------------------------------------------------------

PIPELINE_FORMAT_VERSION = 1


def _prep_to_obj(prep: PrepConfig) -> dict:
    return {
        "stopwords": sorted(prep.stopwords),
        "stem": prep.stem,
        "min_token_len": prep.min_token_len,
    }


def _prep_from_obj(obj: dict) -> PrepConfig:
    return PrepConfig(stopwords=frozenset(obj["stopwords"]), stem=obj["stem"],
                      min_token_len=obj["min_token_len"])


def _vocab_hash(vocab_obj: dict) -> str:
    return hashlib.sha256(json.dumps(vocab_obj, sort_keys=True).encode()).hexdigest()


def save_classic(pipeline: ClassicPipeline, path: str | Path) -> None:
    vocab_obj = pipeline.vocab.to_json_obj()
    m = pipeline.model
    if pipeline.classifier == "nb":
        params = {
            "class_log_prior": m.class_log_prior.tolist(),
            "feature_log_prob": m.feature_log_prob.tolist(),
            "dim": m.dim,
        }
    elif pipeline.classifier == "knn":
        params = {
            "indptr": m.indptr.tolist(),
            "col_indices": m.col_indices.tolist(),
            "data": m.data.tolist(),
            "labels": [l.value for l in m.labels],
            "k": m.k,
            "dim": m.dim,
        }
    else:
        params = {"w": m.w.tolist(), "b": m.b, "lam": m.lam,
                  "platt_a": m.platt_a, "platt_b": m.platt_b}
    obj = {
        "format_version": PIPELINE_FORMAT_VERSION,
        "pipeline": "classic",
        "classifier": pipeline.classifier,
        "vocab": vocab_obj,
        "vocab_hash": _vocab_hash(vocab_obj),
        "params": params,
        "prep": _prep_to_obj(pipeline.prep),
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


def _classic_from_obj(obj: dict) -> ClassicPipeline:
    vocab = NgramVocab.from_json_obj(obj["vocab"])
    params = obj["params"]
    kind = obj["classifier"]
    if kind == "nb":
        model = classic.NaiveBayesModel(
            class_log_prior=np.asarray(params["class_log_prior"]),
            feature_log_prob=np.asarray(params["feature_log_prob"]),
            dim=params["dim"],
        )
    elif kind == "knn":
        model = classic.KnnModel(
            indptr=np.asarray(params["indptr"], dtype=np.int64),
            col_indices=np.asarray(params["col_indices"], dtype=np.int64),
            data=np.asarray(params["data"]),
            labels=[Label(v) for v in params["labels"]],
            k=params["k"],
            dim=params["dim"],
        )
    else:
        model = classic.SvmModel(w=np.asarray(params["w"]), b=params["b"], lam=params["lam"],
                                 platt_a=params["platt_a"], platt_b=params["platt_b"])
    return ClassicPipeline(classifier=kind, vocab=vocab, model=model,
                           prep=_prep_from_obj(obj["prep"]))


def save_neural(pipeline, path: str | Path) -> None:
    if isinstance(pipeline, MlpPipeline):
        obj = {
            "format_version": PIPELINE_FORMAT_VERSION,
            "pipeline": "mlp",
            "vocab": pipeline.vocab.to_json_obj(),
            "standardizer": {"mean": pipeline.standardizer.mean.tolist(),
                             "stdev": pipeline.standardizer.stdev.tolist()},
            "model": models.model_to_obj(pipeline.model),
            "prep": _prep_to_obj(pipeline.prep),
        }
    else:
        obj = {
            "format_version": PIPELINE_FORMAT_VERSION,
            "pipeline": "sequence",
            "max_len": pipeline.max_len,
            "model": models.model_to_obj(pipeline.model),
            "prep": _prep_to_obj(pipeline.prep),
        }
    Path(path).write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


def load_any(path: str | Path):
    """Load any saved pipeline (classic, mlp, or sequence) for predict/evaluate."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format_version") != PIPELINE_FORMAT_VERSION:
        raise models.ModelError(f"unsupported pipeline format {obj.get('format_version')!r}")
    kind = obj.get("pipeline")
    if kind == "classic":
        return _classic_from_obj(obj)
    if kind == "mlp":
        return MlpPipeline(
            vocab=NgramVocab.from_json_obj(obj["vocab"]),
            standardizer=Standardizer(mean=np.asarray(obj["standardizer"]["mean"]),
                                      stdev=np.asarray(obj["standardizer"]["stdev"])),
            model=models.model_from_obj(obj["model"]),
            prep=_prep_from_obj(obj["prep"]),
        )
    if kind == "sequence":
        model = models.model_from_obj(obj["model"])
        return NeuralSequencePipeline(table=model.frontend.table, max_len=obj["max_len"],
                                      model=model, prep=_prep_from_obj(obj["prep"]))
    raise models.ModelError(f"unknown pipeline kind {kind!r}")
