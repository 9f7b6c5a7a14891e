"""Traditional classifiers: multinomial Naive Bayes, KNN, and a linear SVM
trained with the Pegasos stochastic subgradient schedule and calibrated with
a Platt sigmoid fitted on out-of-fold decision values.

Class order is (spam, ham) everywhere; spam maps to y = +1 internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import Label
from .features import SparseVector


class ClassicError(ValueError):
    pass


def labels_to_y(labels: list[Label]) -> np.ndarray:
    """Spam -> +1, Ham -> -1."""
    return np.array([1.0 if lbl is Label.SPAM else -1.0 for lbl in labels])


# ---------------------------------------------------------------------------
# Multinomial Naive Bayes


@dataclass
class NaiveBayesModel:
    class_log_prior: np.ndarray  # (2,) order (spam, ham)
    feature_log_prob: np.ndarray  # (2, dim)
    dim: int


def nb_train(X: list[SparseVector], labels: list[Label], alpha: float = 1.0) -> NaiveBayesModel:
    """Fit from count-valued vectors with Laplace smoothing."""
    if not X:
        raise ClassicError("empty training set")
    if len(X) != len(labels):
        raise ClassicError("feature/label length mismatch")
    dim = X[0].dim
    counts = np.zeros((2, dim))
    class_n = np.zeros(2)
    for v, lbl in zip(X, labels):
        if lbl is None:
            raise ClassicError("unlabeled record in NB training set")
        row = 0 if lbl is Label.SPAM else 1
        counts[row, v.indices] += v.values
        class_n[row] += 1
    if (class_n == 0).any():
        raise ClassicError("both classes must be present")
    class_log_prior = np.log(class_n / class_n.sum())
    smoothed = counts + alpha
    feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    return NaiveBayesModel(class_log_prior=class_log_prior, feature_log_prob=feature_log_prob, dim=dim)


def nb_log_joint(m: NaiveBayesModel, x: SparseVector) -> np.ndarray:
    if x.dim != m.dim:
        raise ClassicError(f"dimension mismatch: {x.dim} != {m.dim}")
    return m.class_log_prior + m.feature_log_prob[:, x.indices] @ x.values


def nb_predict_proba(m: NaiveBayesModel, x: SparseVector) -> tuple[float, float]:
    joint = nb_log_joint(m, x)
    joint = joint - joint.max()
    p = np.exp(joint)
    p /= p.sum()
    return float(p[0]), float(p[1])


def nb_predict(m: NaiveBayesModel, x: SparseVector) -> Label:
    p_spam, p_ham = nb_predict_proba(m, x)
    return Label.SPAM if p_spam > p_ham else Label.HAM


# ---------------------------------------------------------------------------
# K nearest neighbors (cosine distance)


@dataclass
class KnnModel:
    indptr: np.ndarray  # CSR row offsets over the stored normalized vectors
    col_indices: np.ndarray
    data: np.ndarray
    labels: list[Label]
    k: int
    dim: int


def _unit(v: SparseVector) -> np.ndarray:
    norm = v.norm()
    return v.values / norm if norm > 0 else v.values


def knn_fit(X: list[SparseVector], labels: list[Label], k: int = 5) -> KnnModel:
    if not 1 <= k <= len(X):
        raise ClassicError(f"k must be in [1, {len(X)}], got {k}")
    indptr = np.zeros(len(X) + 1, dtype=np.int64)
    cols, data = [], []
    for i, v in enumerate(X):
        indptr[i + 1] = indptr[i] + v.indices.size
        cols.append(v.indices)
        data.append(_unit(v))
    return KnnModel(
        indptr=indptr,
        col_indices=np.concatenate(cols) if cols else np.empty(0, dtype=np.int64),
        data=np.concatenate(data) if data else np.empty(0),
        labels=list(labels),
        k=k,
        dim=X[0].dim,
    )


def knn_predict(m: KnnModel, x: SparseVector) -> Label:
    """Majority vote among the k nearest stored vectors by cosine distance.

    Distance ties break toward the lower training index, vote ties toward Ham.
    """
    if x.dim != m.dim:
        raise ClassicError(f"dimension mismatch: {x.dim} != {m.dim}")
    dense = np.zeros(m.dim)
    dense[x.indices] = _unit(x)
    prods = m.data * dense[m.col_indices]
    n = len(m.labels)
    sims = np.zeros(n)
    nonempty = np.flatnonzero(np.diff(m.indptr) > 0)
    if nonempty.size:
        sums = np.add.reduceat(prods, m.indptr[nonempty])
        sims[nonempty] = sums
    dist = 1.0 - sims
    order = np.lexsort((np.arange(n), dist))[: m.k]
    spam_votes = sum(1 for i in order if m.labels[i] is Label.SPAM)
    return Label.SPAM if spam_votes > m.k - spam_votes else Label.HAM


# ---------------------------------------------------------------------------
# Linear SVM: Pegasos + Platt scaling


@dataclass
class SvmModel:
    w: np.ndarray
    b: float
    lam: float
    platt_a: float | None = None
    platt_b: float | None = None
    objective_by_epoch: list[float] = field(default_factory=list)

    @property
    def calibrated(self) -> bool:
        return self.platt_a is not None


def _pegasos(
    X: list[SparseVector], y: np.ndarray, lam: float, epochs: int, rng: np.random.Generator
) -> tuple[np.ndarray, list[float]]:
    """Primal hinge-loss SGD with step size 1/(lam*t); returns the averaged
    iterate's objective after each epoch alongside the final weights."""
    n, dim = len(X), X[0].dim
    w = np.zeros(dim)
    w_sum = np.zeros(dim)
    objectives = []
    t = 0
    for _ in range(epochs):
        for i in rng.integers(0, n, size=n):
            t += 1
            eta = 1.0 / (lam * t)
            xi, yi = X[i], y[i]
            margin = yi * xi.dot_dense(w)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w[xi.indices] += eta * yi * xi.values
            w_sum += w
        w_avg = w_sum / t
        hinge = np.mean([max(0.0, 1.0 - y[j] * X[j].dot_dense(w_avg)) for j in range(n)])
        objectives.append(0.5 * lam * float(w_avg @ w_avg) + float(hinge))
    return w, objectives


def fit_platt(scores: np.ndarray, y: np.ndarray, max_iter: int = 100) -> tuple[float, float]:
    """Fit P(spam|s) = 1 / (1 + exp(a*s + b)) by damped Newton iterations on
    the regularized log-likelihood (the standard sigmoid-fitting procedure)."""
    prior1 = float((y > 0).sum())
    prior0 = float(len(y) - prior1)
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(y > 0, hi, lo)
    a, b = 0.0, math.log((prior0 + 1.0) / (prior1 + 1.0))
    sigma = 1e-12
    eps = 1e-5
    min_step = 1e-10

    def nll(a_, b_):
        f = scores * a_ + b_
        return float(np.sum(np.where(f >= 0, t * f + np.log1p(np.exp(-f)), (t - 1) * f + np.log1p(np.exp(f)))))

    fval = nll(a, b)
    for _ in range(max_iter):
        f = scores * a + b
        p = np.where(f >= 0, np.exp(-f) / (1 + np.exp(-f)), 1 / (1 + np.exp(f)))
        q = 1.0 - p
        d2 = p * q
        h11 = float(np.sum(scores * scores * d2)) + sigma
        h22 = float(np.sum(d2)) + sigma
        h21 = float(np.sum(scores * d2))
        d1 = t - p
        g1 = float(np.sum(scores * d1))
        g2 = float(np.sum(d1))
        if abs(g1) < eps and abs(g2) < eps:
            break
        det = h11 * h22 - h21 * h21
        da = -(h22 * g1 - h21 * g2) / det
        db = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * da + g2 * db
        step = 1.0
        while step >= min_step:
            na, nb = a + step * da, b + step * db
            nf = nll(na, nb)
            if nf < fval + 1e-4 * step * gd:
                a, b, fval = na, nb, nf
                break
            step /= 2.0
        else:
            break
    return a, b


def svm_train(
    X: list[SparseVector],
    labels: list[Label],
    lam: float = 1e-4,
    epochs: int = 20,
    seed: int = 0,
    calibrate: bool = True,
    calibration_folds: int = 3,
) -> SvmModel:
    """Train the linear scorer on all data; calibrate the sigmoid on decision
    values produced by per-fold models so no score is seen by its own fold."""
    y = labels_to_y(labels)
    if len(X) != len(y) or not len(X):
        raise ClassicError("empty or mismatched training set")
    if len(np.unique(y)) < 2:
        raise ClassicError("both classes must be present")
    ss = np.random.SeedSequence(seed)
    rng_final, rng_folds, rng_shuffle = (np.random.default_rng(s) for s in ss.spawn(3))
    w, objectives = _pegasos(X, y, lam, epochs, rng_final)
    model = SvmModel(w=w, b=0.0, lam=lam, objective_by_epoch=objectives)
    if not calibrate:
        return model

    n = len(X)
    folds = max(2, min(calibration_folds, n))
    order = np.concatenate([
        _shuffled(np.flatnonzero(y > 0), rng_shuffle),
        _shuffled(np.flatnonzero(y < 0), rng_shuffle),
    ])
    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = np.arange(n) % folds
    scores = np.empty(n)
    for fold in range(folds):
        train_idx = np.flatnonzero(assignment != fold)
        test_idx = np.flatnonzero(assignment == fold)
        y_fold = y[train_idx]
        if len(np.unique(y_fold)) < 2:
            fold_w = w
        else:
            fold_w, _ = _pegasos([X[i] for i in train_idx], y_fold, lam, epochs, rng_folds)
        for i in test_idx:
            scores[i] = X[i].dot_dense(fold_w)
    model.platt_a, model.platt_b = fit_platt(scores, y)
    return model


def _shuffled(idx: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = idx.copy()
    rng.shuffle(out)
    return out


def svm_decision(m: SvmModel, x: SparseVector) -> float:
    return x.dot_dense(m.w) + m.b


def svm_predict_proba(m: SvmModel, x: SparseVector) -> tuple[float, float]:
    if not m.calibrated:
        raise ClassicError("model is not calibrated; train with calibrate=True")
    f = m.platt_a * svm_decision(m, x) + m.platt_b
    p_spam = math.exp(-f) / (1.0 + math.exp(-f)) if f >= 0 else 1.0 / (1.0 + math.exp(f))
    return p_spam, 1.0 - p_spam


def svm_predict(m: SvmModel, x: SparseVector) -> Label:
    if m.calibrated:
        p_spam, p_ham = svm_predict_proba(m, x)
        return Label.SPAM if p_spam > p_ham else Label.HAM
    return Label.SPAM if svm_decision(m, x) > 0 else Label.HAM
