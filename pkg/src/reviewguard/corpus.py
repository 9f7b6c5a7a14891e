"""Ingest labeled and unlabeled review corpora and persist labeled outputs.

The canonical on-disk format is JSONL: one UTF-8 object per line with keys
``id``, ``text``, ``label`` ("spam"|"ham", omitted when unknown), ``source``
and ``meta`` (omitted when empty).
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    """Raised for malformed or inconsistent corpus data."""


class Label(Enum):
    SPAM = "spam"
    HAM = "ham"

    @classmethod
    def parse(cls, value: str) -> "Label":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise CorpusError(f"unknown label {value!r} (expected 'spam' or 'ham')") from None


class Source(Enum):
    OTT = "ott"
    YELP = "yelp"
    OTHER = "other"

    @classmethod
    def parse(cls, value: str) -> "Source":
        try:
            return cls(value.strip().lower())
        except ValueError:
            return cls.OTHER


@dataclass
class ReviewRecord:
    """One raw review, the unit flowing through every phase."""

    id: str
    text: str
    label: Label | None = None
    source: Source = Source.OTHER
    meta: dict[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("record id must be non-empty")
        if not self.text.strip():
            raise CorpusError(f"record {self.id!r}: text empty after whitespace trim")
        if self.meta == {}:
            self.meta = None

    def to_json_obj(self) -> dict:
        obj: dict = {"id": self.id, "text": self.text}
        if self.label is not None:
            obj["label"] = self.label.value
        obj["source"] = self.source.value
        if self.meta:
            obj["meta"] = self.meta
        return obj


@dataclass
class Corpus:
    """Ordered, duplicate-free collection of review records."""

    name: str
    records: list[ReviewRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise CorpusError(f"duplicate record id {rec.id!r} in corpus {self.name!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def label_counts(self) -> dict[str, int]:
        counts = {"spam": 0, "ham": 0, "unlabeled": 0}
        for rec in self.records:
            counts["unlabeled" if rec.label is None else rec.label.value] += 1
        return counts

    def fully_labeled(self) -> bool:
        return all(rec.label is not None for rec in self.records)


DEFAULT_OTT_MANIFEST: tuple[tuple[str, Label], ...] = (
    ("deceptive", Label.SPAM),
    ("truthful", Label.HAM),
)


def import_ott(
    root_path: str | Path,
    manifest: tuple[tuple[str, Label], ...] = DEFAULT_OTT_MANIFEST,
    strict: bool = False,
    name: str | None = None,
) -> Corpus:
    """Import a tree of one-review-per-file texts, labeling by path substring.

    The manifest is an ordered list of (path substring, label) rules; the
    first rule whose substring occurs in the file's relative path wins.
    Record ids are paths relative to the root, so ingestion order (sorted
    paths) is deterministic.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise CorpusError(f"Ott root {root} is not a directory")
    records: list[ReviewRecord] = []
    paths = sorted(p for p in root.rglob("*") if p.is_file())
    for path in paths:
        rel = path.relative_to(root).as_posix()
        label = next((lbl for pat, lbl in manifest if pat in rel), None)
        if label is None:
            if strict:
                raise CorpusError(f"{rel}: no manifest rule matches")
            logger.warning("skipping %s: no manifest rule matches", rel)
            continue
        try:
            text = path.read_text(encoding="utf-8", errors="replace")
        except OSError as exc:
            if strict:
                raise CorpusError(f"{rel}: unreadable ({exc})") from exc
            logger.warning("skipping unreadable file %s: %s", rel, exc)
            continue
        if not text.strip():
            if strict:
                raise CorpusError(f"{rel}: empty review text")
            logger.warning("skipping %s: empty review text", rel)
            continue
        records.append(ReviewRecord(id=rel, text=text, label=label, source=Source.OTT))
    corpus = Corpus(name=name or root.name, records=records)
    logger.info("imported %d records from %s", len(corpus), root)
    return corpus


def import_jsonl(
    path: str | Path,
    text_field: str = "text",
    label_field: str | None = "label",
    limit: int | None = None,
    strict: bool = False,
    default_source: Source = Source.OTHER,
    name: str | None = None,
) -> Corpus:
    """Import line-delimited JSON records in file order.

    The first ``limit`` valid lines become records. A label is attached only
    when ``label_field`` is given and present on the line; malformed lines
    are skipped with a warning unless ``strict``.
    """
    path = Path(path)
    records: list[ReviewRecord] = []
    seen_ids: set[str] = set()

    def reject(lineno: int, why: str) -> None:
        if strict:
            raise CorpusError(f"{path.name}:{lineno}: {why}")
        logger.warning("%s:%d: %s (line skipped)", path.name, lineno, why)

    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            if limit is not None and len(records) >= limit:
                break
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                reject(lineno, f"invalid JSON ({exc.msg})")
                continue
            if not isinstance(obj, dict) or text_field not in obj:
                reject(lineno, f"missing text field {text_field!r}")
                continue
            text = obj[text_field]
            if not isinstance(text, str) or not text.strip():
                reject(lineno, "empty or non-string text")
                continue
            label = None
            if label_field is not None and obj.get(label_field) is not None:
                try:
                    label = Label.parse(str(obj[label_field]))
                except CorpusError as exc:
                    reject(lineno, str(exc))
                    continue
            rec_id = str(obj.get("id") or f"{path.name}:{lineno}")
            if rec_id in seen_ids:
                reject(lineno, f"duplicate id {rec_id!r}")
                continue
            source = Source.parse(obj["source"]) if "source" in obj else default_source
            meta = obj.get("meta")
            if meta is not None and not (
                isinstance(meta, dict) and all(isinstance(v, str) for v in meta.values())
            ):
                reject(lineno, "meta must be a string-to-string map")
                continue
            seen_ids.add(rec_id)
            records.append(
                ReviewRecord(id=rec_id, text=text, label=label, source=source, meta=meta)
            )
    return Corpus(name=name or path.stem, records=records)


def export_jsonl(corpus: Corpus, path: str | Path, require_labels: bool = False) -> int:
    """Write one JSON object per record; returns the number of lines written."""
    if require_labels and not corpus.fully_labeled():
        raise CorpusError(f"corpus {corpus.name!r} has unlabeled records")
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            fh.write(json.dumps(rec.to_json_obj(), ensure_ascii=False) + "\n")
    return len(corpus.records)


def export_jsonl_str(corpus: Corpus) -> str:
    """Render a corpus to the JSONL wire format as a single string."""
    return "".join(json.dumps(rec.to_json_obj(), ensure_ascii=False) + "\n" for rec in corpus.records)
