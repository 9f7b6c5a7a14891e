"""Modified active learning: grow a labeled set from an unlabeled pool.

Each iteration dequeues a batch of 20 pool records, vectorizes them with a
TF-IDF vocabulary refitted on the current labeled set, and scores each with
the calibrated SVM's probability gap |p_spam - p_ham|. Records scoring above
the 0.20 threshold are auto-labeled with the predicted class; of the rest, at
most 4 minimum-score records go to the expert oracle and the remainder return
to the pool tail. The learner retrains after every iteration and the loop
runs until the pool is empty.
"""
from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Protocol

import numpy as np

from .classic import SvmModel, svm_predict_proba, svm_train
from .corpus import Corpus, CorpusError, Label, ReviewRecord
from .features import NgramVocab, fit_vocab, tfidf_transform
from .textprep import PrepConfig, TokenizedDoc, preprocess

logger = logging.getLogger(__name__)


class ActiveLearningError(RuntimeError):
    pass


class OracleAbort(RuntimeError):
    """Raised by an oracle to abandon the current iteration."""


class Provenance(Enum):
    SEED = "seed"
    AUTO = "auto"
    EXPERT = "expert"


@dataclass(frozen=True)
class ActiveConfig:
    batch_size: int = 20
    threshold: float = 0.20
    max_expert_per_iter: int = 4
    retrain_every_iteration: bool = True
    n_range: tuple[int, int] = (1, 1)
    svm_lam: float = 1e-4
    svm_epochs: int = 10
    seed: int = 0
    eval_holdout_fraction: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must be in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_expert_per_iter < 0:
            raise ValueError("max_expert_per_iter must be >= 0")
        if not 0 <= self.eval_holdout_fraction < 1:
            raise ValueError("eval_holdout_fraction must be in [0, 1)")


class Oracle(Protocol):
    def label(self, record: ReviewRecord) -> Label: ...


class SimulatedOracle:
    """Answers from a ground-truth map, optionally flipping labels at a fixed rate."""

    def __init__(self, truth: dict[str, Label], flip_noise: float = 0.0, seed: int = 0):
        self.truth = truth
        self.flip_noise = flip_noise
        self._rng = np.random.default_rng(seed)
        self.queries = 0

    def label(self, record: ReviewRecord) -> Label:
        self.queries += 1
        answer = self.truth[record.id]
        if self.flip_noise > 0 and self._rng.random() < self.flip_noise:
            answer = Label.HAM if answer is Label.SPAM else Label.SPAM
        return answer


@dataclass
class LabeledItem:
    record: ReviewRecord
    label: Label
    provenance: Provenance
    score: float | None = None
    p_spam: float | None = None


@dataclass
class PendingItem:
    record: ReviewRecord
    score: float
    p_spam: float
    iteration: int


@dataclass
class IterationOutcome:
    iteration: int
    auto_ids: list[str]
    expert_ids: list[str]
    requeued_ids: list[str]

    @property
    def labeled_count(self) -> int:
        return len(self.auto_ids) + len(self.expert_ids)


@dataclass
class SessionReport:
    seed_count: int
    auto_count: int
    expert_count: int
    iterations: int
    expert_queries: int
    auto_agreement: float | None = None

    def to_json_obj(self) -> dict:
        return {
            "seed": self.seed_count,
            "auto": self.auto_count,
            "expert": self.expert_count,
            "iterations": self.iterations,
            "expert_queries": self.expert_queries,
            "auto_agreement": self.auto_agreement,
        }


class ActiveSession:
    """Mutable state of one labeling run; owned by a single worker."""

    def __init__(self, seed_corpus: Corpus, pool_corpus: Corpus, cfg: ActiveConfig,
                 prep: PrepConfig | None = None):
        if not seed_corpus.fully_labeled():
            raise CorpusError("seed corpus must be fully labeled")
        if any(rec.label is not None for rec in pool_corpus):
            raise CorpusError("pool corpus must be unlabeled")
        seed_ids = {rec.id for rec in seed_corpus}
        dup = seed_ids & {rec.id for rec in pool_corpus}
        if dup:
            raise CorpusError(f"{len(dup)} record ids appear in both seed and pool")
        self.cfg = cfg
        self.prep = prep or PrepConfig()
        self._seed_seq = np.random.SeedSequence(cfg.seed)
        self.iteration = 0
        self.pool: deque[ReviewRecord] = deque(pool_corpus.records)
        self.pending: list[PendingItem] = []
        self.events: list[dict] = []
        self._token_cache: dict[str, list[str]] = {}

        rng = np.random.default_rng(self._spawn_rng_seed())
        records = list(seed_corpus.records)
        holdout_n = min(int(round(cfg.eval_holdout_fraction * len(records))), len(records) - 1)
        order = rng.permutation(len(records))
        holdout_idx = set(order[:holdout_n].tolist())
        self.holdout = [records[i] for i in sorted(holdout_idx)]
        self.labeled: list[LabeledItem] = [
            LabeledItem(record=records[i], label=records[i].label, provenance=Provenance.SEED)
            for i in sorted(set(range(len(records))) - holdout_idx)
        ]
        self.seed_count = len(self.labeled)
        self.vocab: NgramVocab | None = None
        self.learner: SvmModel | None = None
        self.learner_accuracy: float | None = None
        self.retrain()

    # -- learner ---------------------------------------------------------

    def _spawn_rng_seed(self) -> np.random.SeedSequence:
        return self._seed_seq.spawn(1)[0]

    def _tokens(self, record: ReviewRecord) -> TokenizedDoc:
        toks = self._token_cache.get(record.id)
        if toks is None:
            toks = preprocess(record.text, self.prep)
            self._token_cache[record.id] = toks
        return TokenizedDoc(id=record.id, tokens=toks)

    def retrain(self) -> None:
        docs = [self._tokens(item.record) for item in self.labeled]
        labels = [item.label for item in self.labeled]
        self.vocab = fit_vocab(docs, n_range=self.cfg.n_range, min_df=1)
        X = [tfidf_transform(doc, self.vocab) for doc in docs]
        seed_entropy = int(self._spawn_rng_seed().generate_state(1)[0])
        self.learner = svm_train(
            X, labels, lam=self.cfg.svm_lam, epochs=self.cfg.svm_epochs, seed=seed_entropy
        )
        if self.holdout:
            correct = sum(
                1 for rec in self.holdout
                if self._classify(rec)[0] is rec.label
            )
            self.learner_accuracy = 100.0 * correct / len(self.holdout)

    def _classify(self, record: ReviewRecord) -> tuple[Label, float, float]:
        vec = tfidf_transform(self._tokens(record), self.vocab)
        p_spam, p_ham = svm_predict_proba(self.learner, vec)
        predicted = Label.SPAM if p_spam > p_ham else Label.HAM
        return predicted, p_spam, probability_gap(p_spam, p_ham)

    # -- bookkeeping -----------------------------------------------------

    @property
    def complete(self) -> bool:
        return not self.pool and not self.pending

    def counts(self) -> dict[str, int]:
        by_prov = {Provenance.SEED: 0, Provenance.AUTO: 0, Provenance.EXPERT: 0}
        for item in self.labeled:
            by_prov[item.provenance] += 1
        return {
            "seed": by_prov[Provenance.SEED],
            "auto": by_prov[Provenance.AUTO],
            "expert": by_prov[Provenance.EXPERT],
            "pool_remaining": len(self.pool),
            "pending": len(self.pending),
        }

    def acquired_corpus(self, name: str = "labeled-pool") -> Corpus:
        """Pool records labeled during the run, in acquisition order."""
        records = []
        for item in self.labeled:
            if item.provenance is Provenance.SEED:
                continue
            rec = item.record
            meta = dict(rec.meta or {})
            meta["provenance"] = item.provenance.value
            records.append(ReviewRecord(
                id=rec.id, text=rec.text, label=item.label, source=rec.source, meta=meta,
            ))
        return Corpus(name=name, records=records)


def probability_gap(p_spam: float, p_ham: float) -> float:
    """Confidence score: absolute gap between the two class probabilities."""
    return abs(p_spam - p_ham)


def run_iteration(
    session: ActiveSession,
    oracle: Oracle,
    observer: Callable[[ActiveSession], None] | None = None,
) -> IterationOutcome:
    """Run one labeling iteration; on oracle failure the session is unchanged."""
    cfg = session.cfg
    if not session.pool:
        return IterationOutcome(session.iteration, [], [], [])
    batch = [session.pool.popleft() for _ in range(min(cfg.batch_size, len(session.pool)))]
    scored = [(pos, rec, *session._classify(rec)) for pos, rec in enumerate(batch)]

    auto = [item for item in scored if item[4] > cfg.threshold]
    low = [item for item in scored if item[4] <= cfg.threshold]
    low_by_score = sorted(low, key=lambda item: item[4])  # stable: ties keep pool order
    expert_cap = cfg.max_expert_per_iter
    forced = False
    if not auto and expert_cap == 0:
        # livelock guard: max_expert_per_iter == 0 and nothing auto-labelable
        forced = True
        expert_cap = 1
        logger.warning("iteration %d: forcing one expert query to guarantee progress",
                       session.iteration)
    to_expert = low_by_score[:expert_cap]
    requeue = sorted(low_by_score[expert_cap:], key=lambda item: item[0])  # batch order

    iteration = session.iteration
    session.pending = [PendingItem(rec, score, p_spam, iteration)
                       for _, rec, _, p_spam, score in to_expert]
    if observer:
        observer(session)
    try:
        expert_labels = [oracle.label(rec) for _, rec, _, _, _ in to_expert]
    except Exception:
        # roll back: no partial labels, batch returns to the pool head
        session.pending = []
        session.pool.extendleft(reversed(batch))
        if observer:
            observer(session)
        raise

    events: list[dict] = []
    for _, rec, pred, p_spam, score in auto:
        session.labeled.append(LabeledItem(rec, pred, Provenance.AUTO, score, p_spam))
        events.append(_event(iteration, rec.id, "auto", score, p_spam, pred))
    for (_, rec, _, p_spam, score), label in zip(to_expert, expert_labels):
        session.labeled.append(LabeledItem(rec, label, Provenance.EXPERT, score, p_spam))
        events.append(_event(iteration, rec.id, "expert", score, p_spam, label))
    for _, rec, _, p_spam, score in requeue:
        session.pool.append(rec)
        events.append(_event(iteration, rec.id, "requeue", score, p_spam, None))
    session.pending = []
    session.events.extend(events)
    session.iteration += 1
    if forced:
        logger.info("iteration %d: livelock override expert-labeled %s",
                    iteration, to_expert[0][1].id)
    if cfg.retrain_every_iteration and (auto or to_expert):
        session.retrain()
    if observer:
        observer(session)
    return IterationOutcome(
        iteration,
        [rec.id for _, rec, *_ in auto],
        [rec.id for _, rec, *_ in to_expert],
        [rec.id for _, rec, *_ in requeue],
    )


def run_to_completion(
    seed_corpus: Corpus,
    pool_corpus: Corpus,
    cfg: ActiveConfig,
    oracle: Oracle,
    prep: PrepConfig | None = None,
    observer: Callable[[ActiveSession], None] | None = None,
    event_log_path=None,
) -> tuple[Corpus, SessionReport, ActiveSession]:
    """Label the whole pool; returns the acquired corpus, a report, and the session."""
    session = ActiveSession(seed_corpus, pool_corpus, cfg, prep=prep)
    if observer:
        observer(session)
    while not session.complete:
        run_iteration(session, oracle, observer=observer)
    counts = session.counts()
    agreement = None
    if isinstance(oracle, SimulatedOracle):
        auto_items = [i for i in session.labeled if i.provenance is Provenance.AUTO]
        if auto_items:
            hits = sum(1 for i in auto_items if oracle.truth.get(i.record.id) is i.label)
            agreement = hits / len(auto_items)
    report = SessionReport(
        seed_count=counts["seed"],
        auto_count=counts["auto"],
        expert_count=counts["expert"],
        iterations=session.iteration,
        expert_queries=counts["expert"],
        auto_agreement=agreement,
    )
    if event_log_path is not None:
        write_event_log(session.events, event_log_path)
    return session.acquired_corpus(), report, session


# --- event log ---------------------------------------------------------------


def _event(iteration: int, record_id: str, action: str, score: float,
           p_spam: float, label: Label | None) -> dict:
    return {
        "iter": iteration,
        "record_id": record_id,
        "action": action,
        "score": score,
        "p_spam": p_spam,
        "label": label.value if label is not None else None,
    }


def write_event_log(events: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True) + "\n")


def read_event_log(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def replay_events(
    events: list[dict], seed_ids: set[str], pool_ids: list[str], cfg: ActiveConfig
) -> None:
    """Re-run the event stream, asserting the session invariants at every step.

    Raises ActiveLearningError on the first violation: a record leaving or
    entering the wrong partition, an auto label at or below the threshold, an
    expert label above it, or an iteration exceeding the expert-query cap.
    """
    pool = set(pool_ids)
    labeled = set(seed_ids)
    expert_by_iter: dict[int, int] = {}

    def fail(msg: str, event: dict) -> None:
        raise ActiveLearningError(f"event log violation: {msg} at {event!r}")

    for event in events:
        rid, action, score = event["record_id"], event["action"], event["score"]
        if rid in labeled:
            fail("record already labeled", event)
        if rid not in pool:
            fail("record not in pool", event)
        if action == "auto":
            if score <= cfg.threshold:
                fail(f"auto label with score {score} <= threshold", event)
            if event["label"] not in ("spam", "ham"):
                fail("auto event without label", event)
            pool.remove(rid)
            labeled.add(rid)
        elif action == "expert":
            if score > cfg.threshold:
                fail(f"expert label with score {score} > threshold", event)
            it = event["iter"]
            expert_by_iter[it] = expert_by_iter.get(it, 0) + 1
            cap = max(1, cfg.max_expert_per_iter)
            if expert_by_iter[it] > cap:
                fail(f"more than {cap} expert queries in iteration {it}", event)
            pool.remove(rid)
            labeled.add(rid)
        elif action == "requeue":
            if score > cfg.threshold:
                fail(f"requeue with score {score} > threshold", event)
        else:
            fail(f"unknown action {action!r}", event)
    if pool:
        raise ActiveLearningError(f"event log ends with {len(pool)} records still in pool")
