"""Skip-gram word2vec with negative sampling, trained from scratch.

Vocabulary is capped at the 30,000 most frequent tokens (ties broken
lexicographically); rows 0 and 1 are reserved for padding and unknowns. The
pad row stays all-zero forever. Training pairs are every (center, context)
position pair within the window; each positive update is paired with
``negatives`` noise words drawn from the unigram^0.75 distribution. Updates
are applied in fixed-size chunks, so training is bitwise deterministic for a
given seed.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .nnet.core import assert_finite, sigmoid
from .textprep import TokenizedDoc

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
EMBED_FORMAT_VERSION = 1
_MAX_CHUNK = 4096  # update batching cap; chunks shrink on small corpora


class EmbedError(ValueError):
    pass


@dataclass
class EmbeddingTable:
    vocab: dict[str, int]  # token -> row index (>= 2)
    vectors: np.ndarray  # (|V| + 2, dim)
    dim: int
    pad_index: int = 0
    unk_index: int = 1
    epoch_losses: list[float] = field(default_factory=list)

    def row(self, token: str) -> int:
        return self.vocab.get(token, self.unk_index)

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass
class EncodedSeq:
    indices: np.ndarray  # (max_len,) int rows
    true_len: int


def build_vocab(docs: list[TokenizedDoc], max_size: int = 30000) -> dict[str, int]:
    counts = Counter(tok for doc in docs for tok in doc.tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    return {tok: i + 2 for i, (tok, _) in enumerate(ranked)}


def skipgram_pairs(indices: list[int], window: int) -> list[tuple[int, int]]:
    """Every (center, context) pair within the fixed window, in sentence order."""
    pairs = []
    n = len(indices)
    for i, center in enumerate(indices):
        for j in range(max(0, i - window), min(n, i + window + 1)):
            if j != i:
                pairs.append((center, indices[j]))
    return pairs


def train_word2vec(
    docs: list[TokenizedDoc],
    dim: int = 100,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    lr: float = 0.025,
    seed: int = 0,
    max_vocab: int = 30000,
    min_lr_fraction: float = 1e-4,
) -> EmbeddingTable:
    """Train input vectors; returns the table with per-epoch mean losses attached."""
    if not docs:
        raise EmbedError("cannot train embeddings on an empty document list")
    vocab = build_vocab(docs, max_size=max_vocab)
    n_rows = len(vocab) + 2
    rng = np.random.default_rng(seed)
    # training math runs in float32 for speed; the published table is float64
    syn0 = ((rng.random((n_rows, dim)) - 0.5) / dim).astype(np.float32)
    syn0[0, :] = 0.0  # pad row, never touched
    syn1 = np.zeros((n_rows, dim), dtype=np.float32)

    sentences = [[vocab.get(t, 1) for t in doc.tokens] for doc in docs if doc.tokens]
    all_pairs = []
    for sent in sentences:
        all_pairs.extend(skipgram_pairs(sent, window))
    if not all_pairs:
        raise EmbedError("no training pairs: documents too short for the window")
    pairs = np.asarray(all_pairs, dtype=np.int64)

    # noise distribution over real rows (2..) plus unk, proportional to count^0.75
    counts = np.zeros(n_rows)
    for sent in sentences:
        for idx in sent:
            counts[idx] += 1
    noise = counts ** 0.75
    noise[0] = 0.0
    noise_cum = np.cumsum(noise / noise.sum())

    total_steps = epochs * len(pairs)
    done = 0
    chunk_size = int(np.clip(len(pairs) // 64, 64, _MAX_CHUNK))
    losses: list[float] = []
    for _ in range(epochs):
        epoch_loss = 0.0
        for start in range(0, len(pairs), chunk_size):
            chunk = pairs[start : start + chunk_size]
            alpha = max(lr * (1.0 - done / total_steps), lr * min_lr_fraction)
            epoch_loss += _sgns_update(syn0, syn1, chunk, negatives, alpha, rng, noise_cum)
            done += len(chunk)
        losses.append(epoch_loss / len(pairs))
    vectors = syn0.astype(np.float64)
    assert_finite("embedding vectors", vectors)
    return EmbeddingTable(vocab=vocab, vectors=vectors, dim=dim, epoch_losses=losses)


def _scatter_add(target: np.ndarray, rows: np.ndarray, values: np.ndarray) -> None:
    """target[rows] += values with duplicate rows, via sort + reduceat
    (equivalent to np.add.at but far faster)."""
    order = np.argsort(rows, kind="stable")
    sorted_rows = rows[order]
    starts = np.flatnonzero(np.r_[True, sorted_rows[1:] != sorted_rows[:-1]])
    sums = np.add.reduceat(values[order], starts, axis=0)
    target[sorted_rows[starts]] += sums


def _sgns_update(syn0, syn1, chunk, negatives, alpha, rng, noise_cum) -> float:
    centers = chunk[:, 0]
    contexts = chunk[:, 1]
    B = len(chunk)
    alpha = np.float32(alpha)
    v = syn0[centers]  # (B, d)
    u_pos = syn1[contexts]
    s_pos = sigmoid(np.sum(v * u_pos, axis=1))  # (B,)
    loss = -float(np.sum(np.log(np.maximum(s_pos, np.float32(1e-12)))))
    coef_pos = (s_pos - np.float32(1.0))[:, None] * alpha

    dv = coef_pos * u_pos
    du_rows = contexts
    du_vals = -coef_pos * v

    if negatives > 0:
        draws = rng.random((B, negatives))
        neg = np.minimum(np.searchsorted(noise_cum, draws, side="right"), noise_cum.size - 1)
        keep = neg != contexts[:, None]  # skip accidental hits of the true context
        u_neg = syn1[neg]  # (B, K, d)
        s_neg = sigmoid(np.einsum("bd,bkd->bk", v, u_neg))
        s_neg = np.where(keep, s_neg, np.float32(0.0))
        loss += -float(np.sum(np.where(
            keep, np.log(np.maximum(np.float32(1.0) - s_neg, np.float32(1e-12))), 0.0)))
        coef_neg = s_neg * alpha  # masked entries are zero
        dv += np.einsum("bk,bkd->bd", coef_neg, u_neg)
        du_rows = np.concatenate([du_rows, neg.reshape(-1)])
        du_vals = np.concatenate([
            du_vals, (-coef_neg[:, :, None] * v[:, None, :]).reshape(-1, v.shape[1])])

    _scatter_add(syn1, du_rows, du_vals)
    _scatter_add(syn0, centers, -dv)
    syn0[0, :] = 0.0
    return loss


def encode(doc: TokenizedDoc, table: EmbeddingTable, max_len: int) -> EncodedSeq:
    """First max_len tokens to row indices (unk for OOV), right-padded."""
    if max_len < 1:
        raise EmbedError("max_len must be >= 1")
    rows = [table.row(t) for t in doc.tokens[:max_len]]
    true_len = len(rows)
    rows.extend([table.pad_index] * (max_len - true_len))
    return EncodedSeq(indices=np.asarray(rows, dtype=np.int64), true_len=true_len)


def default_max_len(docs: list[TokenizedDoc], percentile: int = 95,
                    cap: int = 400, floor: int = 5) -> int:
    lengths = [len(d.tokens) for d in docs]
    if not lengths:
        return floor
    value = int(np.percentile(lengths, percentile, method="nearest"))
    return max(floor, min(cap, value))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(a @ b) / denom if denom else 0.0


# --- persistence ---------------------------------------------------------

def save_text(table: EmbeddingTable, path: str | Path) -> None:
    """word2vec-style text format: header "|V| d", then "word v1 .. vd" lines."""
    tokens = [PAD_TOKEN, UNK_TOKEN] + [t for t, _ in sorted(table.vocab.items(), key=lambda kv: kv[1])]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(tokens)} {table.dim}\n")
        for row, tok in enumerate(tokens):
            vec = " ".join(repr(x) for x in table.vectors[row].tolist())
            fh.write(f"{tok} {vec}\n")


def load_text(path: str | Path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        n_rows, dim = int(header[0]), int(header[1])
        vocab: dict[str, int] = {}
        vectors = np.zeros((n_rows, dim))
        for row in range(n_rows):
            parts = fh.readline().rstrip("\n").split(" ")
            tok, vals = parts[0], parts[1:]
            if len(vals) != dim:
                raise EmbedError(f"row {row}: expected {dim} values, got {len(vals)}")
            vectors[row] = [float(x) for x in vals]
            if tok not in (PAD_TOKEN, UNK_TOKEN):
                vocab[tok] = row
    return EmbeddingTable(vocab=vocab, vectors=vectors, dim=dim)


def save_json(table: EmbeddingTable, path: str | Path) -> None:
    obj = {
        "format_version": EMBED_FORMAT_VERSION,
        "dim": table.dim,
        "vocab": table.vocab,
        "vectors": table.vectors.tolist(),
        "epoch_losses": table.epoch_losses,
    }
    Path(path).write_text(json.dumps(obj, sort_keys=True), encoding="utf-8")


def load_json(path: str | Path) -> EmbeddingTable:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format_version") != EMBED_FORMAT_VERSION:
        raise EmbedError(f"unsupported embedding format {obj.get('format_version')!r}")
    return EmbeddingTable(
        vocab={k: int(v) for k, v in obj["vocab"].items()},
        vectors=np.asarray(obj["vectors"], dtype=np.float64),
        dim=obj["dim"],
        epoch_losses=list(obj.get("epoch_losses", [])),
    )
