"""Synthetic linearly-separable review corpora for protocol tests and demos.

Documents are bags of invented marker words: spam records draw mostly from a
spam vocabulary, ham records from a ham vocabulary. A configurable fraction
of "margin noise" records mix both vocabularies (still majority own-class, so
the set stays separable) to land near the decision boundary.
"""
from __future__ import annotations

import numpy as np

from .corpus import Corpus, Label, ReviewRecord, Source

_ONSETS = "zvblkmdrpt"
_CODAS = "bdkmptxz"
_VOWELS = "aeiou"


def _word_bank(tag: str, count: int) -> list[str]:
    # three-letter CVC words with stem-inert endings, prefixed for disjointness
    words = []
    i = 0
    while len(words) < count:
        onset = _ONSETS[i % len(_ONSETS)]
        vowel = _VOWELS[(i // len(_ONSETS)) % len(_VOWELS)]
        coda = _CODAS[(i // (len(_ONSETS) * len(_VOWELS))) % len(_CODAS)]
        words.append(f"{tag}{onset}{vowel}{coda}")
        i += 1
    return words


SPAM_WORDS = _word_bank("spam", 25)
HAM_WORDS = _word_bank("genu", 25)
NEUTRAL_WORDS = _word_bank("fill", 20)


def _make_text(rng: np.random.Generator, label: Label, noisy: bool) -> str:
    own = SPAM_WORDS if label is Label.SPAM else HAM_WORDS
    other = HAM_WORDS if label is Label.SPAM else SPAM_WORDS
    if noisy:
        tokens = (
            list(rng.choice(own, size=5)) + list(rng.choice(other, size=4))
            + list(rng.choice(NEUTRAL_WORDS, size=2))
        )
    else:
        tokens = list(rng.choice(own, size=7)) + list(rng.choice(NEUTRAL_WORDS, size=3))
    rng.shuffle(tokens)
    return " ".join(tokens)


def make_linear_corpus(
    n: int,
    seed: int = 0,
    noise: float = 0.0,
    labeled: bool = True,
    prefix: str = "rec",
    name: str = "synthetic",
) -> tuple[Corpus, dict[str, Label]]:
    """Build a balanced corpus of n records; returns it plus the ground truth map."""
    rng = np.random.default_rng(seed)
    records = []
    truth: dict[str, Label] = {}
    for i in range(n):
        label = Label.SPAM if i % 2 == 0 else Label.HAM
        noisy = bool(rng.random() < noise)
        rec_id = f"{prefix}-{i:04d}"
        truth[rec_id] = label
        records.append(ReviewRecord(
            id=rec_id,
            text=_make_text(rng, label, noisy),
            label=label if labeled else None,
            source=Source.OTHER,
        ))
    return Corpus(name=name, records=records), truth


def make_active_learning_fixture(
    n_seed: int = 200,
    n_pool: int = 500,
    noise: float = 0.10,
    seed: int = 0,
) -> tuple[Corpus, Corpus, dict[str, Label]]:
    """Labeled seed corpus, unlabeled pool with margin noise, and pool ground truth."""
    seed_corpus, _ = make_linear_corpus(n_seed, seed=seed, noise=0.0,
                                        labeled=True, prefix="seed", name="seed")
    pool_corpus, truth = make_linear_corpus(n_pool, seed=seed + 1, noise=noise,
                                            labeled=False, prefix="pool", name="pool")
    return seed_corpus, pool_corpus, truth
