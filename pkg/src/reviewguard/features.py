"""Sparse n-gram features: vocabulary fitting, TF-IDF weighting, standardization.

TF is the raw in-document count; IDF is the smoothed ln((1+N)/(1+df)) + 1 and
TF-IDF vectors are L2-normalized. Vocabulary indices are lexicographic over
the n-gram strings, so fitting is deterministic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .textprep import TokenizedDoc

VOCAB_FORMAT_VERSION = 1


class FeatureError(ValueError):
    pass


@dataclass
class SparseVector:
    """Sorted (index, value) pairs over a fixed-dimension space."""

    dim: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.indices.shape != self.values.shape:
            raise FeatureError("indices and values must have equal length")
        if self.indices.size:
            if (np.diff(self.indices) <= 0).any():
                raise FeatureError("indices must be strictly increasing")
            if self.indices[0] < 0 or self.indices[-1] >= self.dim:
                raise FeatureError("index out of range")
        if not np.isfinite(self.values).all():
            raise FeatureError("values must be finite")

    @property
    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def norm(self) -> float:
        return float(np.sqrt((self.values ** 2).sum()))

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.indices] = self.values
        return dense

    def dot_dense(self, w: np.ndarray) -> float:
        return float(w[self.indices] @ self.values)


def ngrams(tokens: list[str], n_range: tuple[int, int]) -> list[str]:
    """All contiguous n-grams for n in the inclusive range, space-joined."""
    lo, hi = n_range
    grams: list[str] = []
    for n in range(lo, hi + 1):
        grams.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return grams


@dataclass
class NgramVocab:
    entries: dict[str, int]
    n_range: tuple[int, int]
    doc_count: int
    df: np.ndarray

    def __len__(self) -> int:
        return len(self.entries)

    def to_json_obj(self) -> dict:
        inverse = sorted(self.entries.items(), key=lambda kv: kv[1])
        return {
            "format_version": VOCAB_FORMAT_VERSION,
            "n_range": list(self.n_range),
            "doc_count": self.doc_count,
            "entries": [
                {"gram": gram, "index": idx, "df": int(self.df[idx])} for gram, idx in inverse
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "NgramVocab":
        if obj.get("format_version") != VOCAB_FORMAT_VERSION:
            raise FeatureError(f"unsupported vocab format {obj.get('format_version')!r}")
        entries = {e["gram"]: e["index"] for e in obj["entries"]}
        df = np.zeros(len(entries), dtype=np.int64)
        for e in obj["entries"]:
            df[e["index"]] = e["df"]
        return cls(entries=entries, n_range=tuple(obj["n_range"]), doc_count=obj["doc_count"], df=df)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_obj(), sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NgramVocab":
        return cls.from_json_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_vocab(
    docs: list[TokenizedDoc], n_range: tuple[int, int] = (1, 1), min_df: int = 1
) -> NgramVocab:
    """Index every n-gram with document frequency >= min_df, lexicographically."""
    lo, hi = n_range
    if not 1 <= lo <= hi <= 3:
        raise FeatureError(f"n_range must satisfy 1 <= lo <= hi <= 3, got {n_range}")
    if not docs:
        raise FeatureError("cannot fit a vocabulary on an empty document list")
    df_counts: dict[str, int] = {}
    for doc in docs:
        for gram in set(ngrams(doc.tokens, n_range)):
            df_counts[gram] = df_counts.get(gram, 0) + 1
    kept = sorted(g for g, c in df_counts.items() if c >= min_df)
    entries = {gram: idx for idx, gram in enumerate(kept)}
    df = np.array([df_counts[g] for g in kept], dtype=np.int64)
    return NgramVocab(entries=entries, n_range=n_range, doc_count=len(docs), df=df)


def _term_counts(doc: TokenizedDoc, vocab: NgramVocab) -> tuple[np.ndarray, np.ndarray]:
    counts: dict[int, int] = {}
    for gram in ngrams(doc.tokens, vocab.n_range):
        idx = vocab.entries.get(gram)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if not counts:
        return np.empty(0, dtype=np.int64), np.empty(0)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    return indices, values


def count_transform(doc: TokenizedDoc, vocab: NgramVocab) -> SparseVector:
    """Raw in-vocabulary n-gram counts (the representation multinomial NB needs)."""
    indices, values = _term_counts(doc, vocab)
    return SparseVector(dim=len(vocab), indices=indices, values=values)


def idf_vector(vocab: NgramVocab) -> np.ndarray:
    return np.log((1.0 + vocab.doc_count) / (1.0 + vocab.df)) + 1.0


def tfidf_transform(doc: TokenizedDoc, vocab: NgramVocab) -> SparseVector:
    """TF-IDF weights, L2-normalized; out-of-vocabulary n-grams are ignored."""
    indices, values = _term_counts(doc, vocab)
    if indices.size:
        values = values * (np.log((1.0 + vocab.doc_count) / (1.0 + vocab.df[indices])) + 1.0)
        norm = math.sqrt(float(values @ values))
        if norm > 0:
            values = values / norm
    return SparseVector(dim=len(vocab), indices=indices, values=values)


def transform_all(
    docs: list[TokenizedDoc], vocab: NgramVocab, weighting: str = "tfidf"
) -> list[SparseVector]:
    fn = tfidf_transform if weighting == "tfidf" else count_transform
    return [fn(doc, vocab) for doc in docs]


@dataclass
class Standardizer:
    mean: np.ndarray
    stdev: np.ndarray

    def __post_init__(self) -> None:
        if (self.stdev < 0).any():
            raise FeatureError("stdev must be non-negative")


def fit_standardizer(matrix: list[SparseVector]) -> Standardizer:
    """Per-column mean and population standard deviation over the fitting set."""
    if not matrix:
        raise FeatureError("cannot fit a standardizer on an empty matrix")
    dim = matrix[0].dim
    n = len(matrix)
    total = np.zeros(dim)
    total_sq = np.zeros(dim)
    for v in matrix:
        if v.dim != dim:
            raise FeatureError(f"dimension mismatch: {v.dim} != {dim}")
        total[v.indices] += v.values
        total_sq[v.indices] += v.values ** 2
    mean = total / n
    var = np.maximum(total_sq / n - mean ** 2, 0.0)
    return Standardizer(mean=mean, stdev=np.sqrt(var))


def standardize(v: SparseVector, s: Standardizer) -> np.ndarray:
    """Dense zero-mean unit-variance vector; zero-stdev columns map to 0."""
    if v.dim != s.mean.shape[0]:
        raise FeatureError(f"dimension mismatch: vector {v.dim}, standardizer {s.mean.shape[0]}")
    denom = np.where(s.stdev == 0.0, 1.0, s.stdev)
    return (v.to_dense() - s.mean) / denom
