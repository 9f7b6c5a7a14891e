"""Text preprocessing: tokenize, lowercase, strip punctuation, drop stopwords, stem.

The five operations run in exactly that order; stopword membership is tested
on the pre-stem token.
"""
from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import Corpus
from .porter import porter_stem


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a one-word-per-line stopword file; defaults to the bundled list."""
    if path is None:
        text = resources.files("reviewguard.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class PrepConfig:
    stopwords: frozenset[str] = field(default_factory=load_stopwords)
    punctuation: frozenset[str] = frozenset(string.punctuation)
    stem: bool = True
    min_token_len: int = 1

    def __post_init__(self) -> None:
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")


@dataclass
class TokenizedDoc:
    id: str
    tokens: list[str]


def tokenize(text: str, punctuation: frozenset[str]) -> list[str]:
    """Split into maximal runs of alphanumeric, non-punctuation characters."""
    tokens: list[str] = []
    current: list[str] = []
    for ch in text:
        if ch.isalnum() and ch not in punctuation:
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def preprocess(text: str, cfg: PrepConfig | None = None) -> list[str]:
    """Run the five-step pipeline on one raw text, returning the token list."""
    cfg = cfg or PrepConfig()
    out: list[str] = []
    for tok in tokenize(text.lower(), cfg.punctuation):
        if len(tok) < cfg.min_token_len or tok.isdigit():
            continue
        if tok in cfg.stopwords:
            continue
        out.append(porter_stem(tok) if cfg.stem else tok)
    return out


def preprocess_corpus(corpus: Corpus, cfg: PrepConfig | None = None) -> list[TokenizedDoc]:
    cfg = cfg or PrepConfig()
    return [TokenizedDoc(id=rec.id, tokens=preprocess(rec.text, cfg)) for rec in corpus]


def write_tokens_jsonl(docs: list[TokenizedDoc], path: str | Path) -> int:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"id": doc.id, "tokens": doc.tokens}, ensure_ascii=False) + "\n")
    return len(docs)


def read_tokens_jsonl(path: str | Path) -> list[TokenizedDoc]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                docs.append(TokenizedDoc(id=obj["id"], tokens=list(obj["tokens"])))
    return docs
