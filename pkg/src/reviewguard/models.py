"""Neural classifiers assembled from the nnet kernel.

MLP consumes standardized TF-IDF vectors; CNN and LSTM consume encoded token
sequences looked up in a word2vec table (fine-tuned during training by
default, with the pad row frozen at zero). Training follows the plain
epoch/batch loop: shuffled mini-batches, mean cross-entropy, Adam updates,
and an evaluation of train and test accuracy after every epoch with running
best values.

Class order is (spam, ham): target index 0 is spam. Prediction ties break
toward ham.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .corpus import Label
from .embed import EmbeddingTable, EncodedSeq
from .nnet import (
    LSTM,
    Adam,
    Conv1d,
    Dense,
    Dropout,
    MaxOverTime,
    Param,
    ReLU,
    grad_check,
    softmax,
    softmax_cross_entropy,
)

MODEL_FORMAT_VERSION = 1
SPAM_INDEX, HAM_INDEX = 0, 1


class ModelError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    pass


def labels_to_targets(labels: list[Label]) -> np.ndarray:
    return np.array([SPAM_INDEX if l is Label.SPAM else HAM_INDEX for l in labels], dtype=np.int64)


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # mlp | cnn | lstm
    hidden_sizes: tuple[int, ...] = (170, 170, 170)  # mlp
    filter_widths: tuple[int, ...] = (3, 4, 5)  # cnn
    filters_per_width: int = 100
    lstm_hidden: int = 100
    dropout: float = 0.5
    lr: float = 0.001
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    train_embeddings: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("mlp", "cnn", "lstm"):
            raise ModelError(f"unknown model kind {self.kind!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError("dropout must be in [0, 1)")
        if min(self.epochs, self.batch_size, self.filters_per_width, self.lstm_hidden) < 1:
            raise ModelError("counts must be >= 1")
        if any(h < 1 for h in self.hidden_sizes):
            raise ModelError("hidden sizes must be >= 1")


@dataclass
class TrainReport:
    train_loss: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    test_accuracy: list[float] = field(default_factory=list)
    best_train_accuracy: float = 0.0
    best_test_accuracy: float = 0.0

    def to_json_obj(self) -> dict:
        return asdict(self)


# --- datasets -----------------------------------------------------------


@dataclass
class DenseDataset:
    """Standardized dense feature rows for the MLP."""

    X: np.ndarray  # (N, D)
    y: np.ndarray  # (N,) target indices

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return self.X[idx]


class StandardizedSparseDataset:
    """Sparse TF-IDF rows standardized on the fly, one batch at a time, so a
    wide n-gram vocabulary never materializes as a full dense matrix."""

    def __init__(self, vectors, standardizer, y: np.ndarray):
        from .features import standardize  # local import avoids a cycle

        self._vectors = vectors
        self._standardizer = standardizer
        self._standardize = standardize
        self.y = y

    def __len__(self) -> int:
        return len(self._vectors)

    @property
    def dim(self) -> int:
        return self._standardizer.mean.shape[0]

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return np.stack([self._standardize(self._vectors[i], self._standardizer)
                         for i in idx])


@dataclass
class SequenceDataset:
    """Encoded, padded token sequences for CNN/LSTM."""

    indices: np.ndarray  # (N, L)
    lengths: np.ndarray  # (N,)
    y: np.ndarray

    def __len__(self) -> int:
        return self.indices.shape[0]

    @classmethod
    def from_encoded(cls, seqs: list[EncodedSeq], labels: list[Label] | None) -> "SequenceDataset":
        y = labels_to_targets(labels) if labels is not None else np.zeros(len(seqs), dtype=np.int64)
        return cls(
            indices=np.stack([s.indices for s in seqs]),
            lengths=np.array([s.true_len for s in seqs], dtype=np.int64),
            y=y,
        )


# --- models -------------------------------------------------------------


class MlpClassifier:
    kind = "mlp"

    def __init__(self, spec: ModelSpec, in_dim: int):
        self.spec = spec
        self.in_dim = in_dim
        ss = np.random.SeedSequence(spec.seed)
        rng = np.random.default_rng(ss.spawn(1)[0])
        self.layers = []
        prev = in_dim
        for li, width in enumerate(spec.hidden_sizes):
            self.layers.append(Dense(prev, width, rng, name=f"hidden{li}"))
            self.layers.append(ReLU())
            prev = width
        self.head = Dense(prev, 2, rng, name="head")

    def params(self) -> list[Param]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out + self.head.params()

    def set_train(self, train: bool) -> None:
        pass

    def forward(self, batch, idx: np.ndarray) -> np.ndarray:
        x = batch.rows(idx)
        for layer in self.layers:
            x = layer.forward(x)
        return self.head.forward(x)

    def backward(self, dlogits: np.ndarray) -> None:
        dx = self.head.backward(dlogits)
        for layer in reversed(self.layers):
            dx = layer.backward(dx)


class _EmbeddingFrontend:
    """Shared lookup/update logic for sequence models."""

    def __init__(self, table: EmbeddingTable, trainable: bool):
        self.table = table
        self.trainable = trainable
        self.emb = Param("embedding", table.vectors.copy())
        self._idx: np.ndarray | None = None
        self._mask: np.ndarray | None = None

    def forward(self, indices: np.ndarray, lengths: np.ndarray) -> np.ndarray:
        self._idx = indices
        self._mask = (np.arange(indices.shape[1])[None, :] < lengths[:, None]).astype(np.float64)
        # masking padded positions to exact zeros makes the loss independent of
        # the (frozen) pad row, keeping analytic and numeric gradients consistent
        return self.emb.data[indices] * self._mask[:, :, None]

    def backward(self, dE: np.ndarray) -> None:
        if not self.trainable:
            return
        dE = dE * self._mask[:, :, None]  # no updates from padded positions
        np.add.at(self.emb.grad, self._idx, dE)
        self.emb.grad[self.table.pad_index, :] = 0.0

    def params(self) -> list[Param]:
        return [self.emb] if self.trainable else []


class CnnClassifier:
    kind = "cnn"

    def __init__(self, spec: ModelSpec, table: EmbeddingTable, max_len: int):
        if max_len < max(spec.filter_widths):
            raise ModelError(f"max_len {max_len} shorter than widest filter "
                             f"{max(spec.filter_widths)}")
        self.spec = spec
        self.max_len = max_len
        ss = np.random.SeedSequence(spec.seed)
        init_seq, drop_seq = ss.spawn(2)
        rng = np.random.default_rng(init_seq)
        self.frontend = _EmbeddingFrontend(table, spec.train_embeddings)
        self.convs = [Conv1d(w, table.dim, spec.filters_per_width, rng) for w in spec.filter_widths]
        self.relus = [ReLU() for _ in spec.filter_widths]
        self.pools = [MaxOverTime() for _ in spec.filter_widths]
        self.dropout = Dropout(spec.dropout, np.random.default_rng(drop_seq))
        self.head = Dense(spec.filters_per_width * len(spec.filter_widths), 2, rng, name="head")

    def params(self) -> list[Param]:
        out = self.frontend.params()
        for conv in self.convs:
            out.extend(conv.params())
        return out + self.head.params()

    def set_train(self, train: bool) -> None:
        self.dropout.train = train

    def forward(self, batch: SequenceDataset, idx: np.ndarray) -> np.ndarray:
        E = self.frontend.forward(batch.indices[idx], batch.lengths[idx])
        pooled = []
        for conv, relu, pool in zip(self.convs, self.relus, self.pools):
            pooled.append(pool.forward(relu.forward(conv.forward(E))))
        features = np.concatenate(pooled, axis=1)
        return self.head.forward(self.dropout.forward(features))

    def backward(self, dlogits: np.ndarray) -> None:
        dfeat = self.dropout.backward(self.head.backward(dlogits))
        F = self.spec.filters_per_width
        dE = None
        for i, (conv, relu, pool) in enumerate(zip(self.convs, self.relus, self.pools)):
            d = pool.backward(dfeat[:, i * F : (i + 1) * F])
            d = conv.backward(relu.backward(d))
            dE = d if dE is None else dE + d
        self.frontend.backward(dE)


class LstmClassifier:
    kind = "lstm"

    def __init__(self, spec: ModelSpec, table: EmbeddingTable, max_len: int):
        self.spec = spec
        self.max_len = max_len
        ss = np.random.SeedSequence(spec.seed)
        init_seq, drop_seq = ss.spawn(2)
        rng = np.random.default_rng(init_seq)
        self.frontend = _EmbeddingFrontend(table, spec.train_embeddings)
        self.lstm = LSTM(table.dim, spec.lstm_hidden, rng)
        self.dropout = Dropout(spec.dropout, np.random.default_rng(drop_seq))
        self.head = Dense(spec.lstm_hidden, 2, rng, name="head")

    def params(self) -> list[Param]:
        return self.frontend.params() + self.lstm.params() + self.head.params()

    def set_train(self, train: bool) -> None:
        self.dropout.train = train

    def forward(self, batch: SequenceDataset, idx: np.ndarray) -> np.ndarray:
        lengths = batch.lengths[idx]
        E = self.frontend.forward(batch.indices[idx], lengths)
        h = self.lstm.forward(E, lengths)
        return self.head.forward(self.dropout.forward(h))

    def backward(self, dlogits: np.ndarray) -> None:
        dh = self.dropout.backward(self.head.backward(dlogits))
        self.frontend.backward(self.lstm.backward(dh))


# --- training loop --------------------------------------------------------


def _zero_grads(model) -> None:
    for p in model.params():
        p.zero_grad()


def predict_proba(model, dataset, batch_size: int | None = None) -> np.ndarray:
    """(N, 2) softmax probabilities, order (spam, ham)."""
    if batch_size is None:
        batch_size = 64 if isinstance(dataset, StandardizedSparseDataset) else 256
    model.set_train(False)
    out = []
    n = len(dataset)
    for start in range(0, n, batch_size):
        idx = np.arange(start, min(start + batch_size, n))
        out.append(softmax(model.forward(dataset, idx)))
    return np.concatenate(out) if out else np.empty((0, 2))


def predict(model, dataset, batch_size: int | None = None) -> list[Label]:
    probs = predict_proba(model, dataset, batch_size)
    return [Label.SPAM if p[SPAM_INDEX] > p[HAM_INDEX] else Label.HAM for p in probs]


def accuracy(model, dataset) -> float:
    """Percentage of correct argmax predictions, ties toward ham."""
    probs = predict_proba(model, dataset)
    pred = np.where(probs[:, SPAM_INDEX] > probs[:, HAM_INDEX], SPAM_INDEX, HAM_INDEX)
    return 100.0 * float((pred == dataset.y).sum()) / len(dataset)


def build_model(spec: ModelSpec, dataset, table: EmbeddingTable | None = None):
    if spec.kind == "mlp":
        if not isinstance(dataset, (DenseDataset, StandardizedSparseDataset)):
            raise ModelError("mlp requires a dataset of standardized TF-IDF rows")
        return MlpClassifier(spec, in_dim=dataset.dim)
    if not isinstance(dataset, SequenceDataset):
        raise ModelError(f"{spec.kind} requires a SequenceDataset of encoded sequences")
    if table is None:
        raise ModelError(f"{spec.kind} requires an embedding table")
    max_len = dataset.indices.shape[1]
    if spec.kind == "cnn":
        return CnnClassifier(spec, table, max_len)
    return LstmClassifier(spec, table, max_len)


def train(
    spec: ModelSpec,
    train_set,
    test_set,
    table: EmbeddingTable | None = None,
    check_grads: bool = False,
):
    """Train per the epoch/batch loop and return (model, TrainReport)."""
    if len(train_set) == 0 or len(test_set) == 0:
        raise ModelError("train and test sets must be non-empty")
    model = build_model(spec, train_set, table)
    if check_grads:
        err = model_grad_check(model, train_set)
        if err >= 1e-4:
            raise ModelError(f"gradient check failed before training: rel err {err:.3g}")
    optimizer = Adam(model.params(), lr=spec.lr)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(spec.seed).spawn(3)[2])
    report = TrainReport()
    n = len(train_set)
    for _ in range(spec.epochs):
        model.set_train(True)
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, spec.batch_size):
            idx = order[start : start + spec.batch_size]
            _zero_grads(model)
            logits = model.forward(train_set, idx)
            loss, dlogits = softmax_cross_entropy(logits, train_set.y[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {len(report.train_loss)}")
            model.backward(dlogits)
            optimizer.step()
            epoch_loss += loss * len(idx)
        report.train_loss.append(epoch_loss / n)
        report.train_accuracy.append(accuracy(model, train_set))
        report.test_accuracy.append(accuracy(model, test_set))
        report.best_train_accuracy = max(report.best_train_accuracy, report.train_accuracy[-1])
        report.best_test_accuracy = max(report.best_test_accuracy, report.test_accuracy[-1])
    return model, report


def model_grad_check(model, dataset, n_samples: int = 2, seed: int = 0,
                     max_coords_per_param: int | None = 60,
                     jitter: float = 0.05) -> float:
    """Finite-difference check of the composed model on a small batch.

    Zero-initialized biases put ReLU kinks and pooling ties exactly at the
    evaluation point, where central differences are undefined, so the check
    runs at a jittered copy of the parameters and restores them afterwards.
    """
    idx = np.arange(min(n_samples, len(dataset)))
    model.set_train(False)  # dropout in eval mode: deterministic loss surface
    params = model.params()
    saved = [p.data.copy() for p in params]
    if jitter:
        jitter_rng = np.random.default_rng(seed)
        for p in params:
            p.data = p.data + jitter_rng.uniform(-jitter, jitter, size=p.data.shape)

    def loss_fn(compute_grads: bool) -> float:
        if compute_grads:
            _zero_grads(model)
        logits = model.forward(dataset, idx)
        loss, dlogits = softmax_cross_entropy(logits, dataset.y[idx])
        if compute_grads:
            model.backward(dlogits)
        return loss

    try:
        return grad_check(loss_fn, params, seed=seed,
                          max_coords_per_param=max_coords_per_param)
    finally:
        for p, data in zip(params, saved):
            p.data = data
            p.zero_grad()


# --- persistence ----------------------------------------------------------


def model_to_obj(model) -> dict:
    obj = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "spec": asdict(model.spec),
        "params": [
            {"name": p.name, "shape": list(p.data.shape), "data": p.data.ravel().tolist()}
            for p in model.params()
        ],
    }
    if model.kind == "mlp":
        obj["in_dim"] = model.in_dim
    else:
        obj["max_len"] = model.max_len
        obj["embedding"] = {
            "vocab": model.frontend.table.vocab,
            "vectors": model.frontend.table.vectors.tolist(),
            "dim": model.frontend.table.dim,
        }
    return obj


def model_from_obj(obj: dict):
    if obj.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"unsupported model format {obj.get('format_version')!r}")
    spec_obj = dict(obj["spec"])
    for key in ("hidden_sizes", "filter_widths"):
        spec_obj[key] = tuple(spec_obj[key])
    spec = ModelSpec(**spec_obj)
    if obj["kind"] == "mlp":
        model = MlpClassifier(spec, in_dim=obj["in_dim"])
    else:
        emb = obj["embedding"]
        table = EmbeddingTable(
            vocab={k: int(v) for k, v in emb["vocab"].items()},
            vectors=np.asarray(emb["vectors"], dtype=np.float64),
            dim=emb["dim"],
        )
        cls = CnnClassifier if obj["kind"] == "cnn" else LstmClassifier
        model = cls(spec, table, max_len=obj["max_len"])
    saved = {p["name"]: p for p in obj["params"]}
    for p in model.params():
        entry = saved[p.name]
        p.data = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
    return model


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_obj(model), sort_keys=True), encoding="utf-8")


def load_model(path: str | Path):
    return model_from_obj(json.loads(Path(path).read_text(encoding="utf-8")))
