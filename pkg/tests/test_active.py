import pytest

from reviewguard.active import (
    ActiveConfig,
    ActiveSession,
    OracleAbort,
    Provenance,
    SimulatedOracle,
    probability_gap,
    read_event_log,
    replay_events,
    run_iteration,
    run_to_completion,
    write_event_log,
)
from reviewguard.corpus import Corpus, CorpusError, Label, ReviewRecord
from reviewguard.synthetic import make_active_learning_fixture, make_linear_corpus

FAST = dict(svm_epochs=5)


def small_fixture(n_seed=40, n_pool=30, noise=0.0, seed=0):
    return make_active_learning_fixture(n_seed=n_seed, n_pool=n_pool, noise=noise, seed=seed)


def test_probability_gap_examples():
    assert probability_gap(0.9, 0.1) == pytest.approx(0.8)
    assert probability_gap(0.5, 0.5) == 0.0
    assert probability_gap(0.55, 0.45) == pytest.approx(0.10)
    assert probability_gap(0.1, 0.9) == probability_gap(0.9, 0.1)


def test_all_confident_batch_is_all_auto():
    seed_corpus, pool_corpus, truth = small_fixture(n_pool=20)
    session = ActiveSession(seed_corpus, pool_corpus, ActiveConfig(**FAST))
    outcome = run_iteration(session, SimulatedOracle(truth))
    assert len(outcome.auto_ids) == 20
    assert outcome.expert_ids == []
    assert outcome.requeued_ids == []
    assert session.iteration == 1


def scripted_session(scores, n_seed=20, cfg=None):
    """Session whose classifier is stubbed to emit fixed probability gaps."""
    seed_corpus, _, _ = small_fixture(n_seed=n_seed, n_pool=4)
    pool = Corpus("pool", [
        ReviewRecord(id=f"p{i:02d}", text=f"text {i}") for i in range(len(scores))
    ])
    session = ActiveSession(seed_corpus, pool, cfg or ActiveConfig(**FAST))
    by_id = {f"p{i:02d}": s for i, s in enumerate(scores)}

    def fake_classify(record):
        gap = by_id[record.id]
        p_spam = (1 + gap) / 2
        return Label.SPAM, p_spam, gap

    session._classify = fake_classify
    session.retrain = lambda: None
    return session, pool


def test_expert_selection_minimum_scores_and_requeue_order():
    scores = [0.9] * 13 + [0.01, 0.05, 0.02, 0.11, 0.03, 0.04, 0.12]
    session, _ = scripted_session(scores)
    oracle = SimulatedOracle({f"p{i:02d}": Label.HAM for i in range(20)})
    outcome = run_iteration(session, oracle)
    # lowest four gaps: p13 (.01), p15 (.02), p17 (.03), p18 (.04)
    assert outcome.expert_ids == ["p13", "p15", "p17", "p18"]
    # remaining low-confidence records return to the pool tail in batch order
    assert outcome.requeued_ids == ["p14", "p16", "p19"]
    assert [r.id for r in session.pool] == ["p14", "p16", "p19"]
    assert oracle.queries == 4


def test_score_tie_broken_by_pool_order():
    scores = [0.05] * 6
    session, _ = scripted_session(scores)
    oracle = SimulatedOracle({f"p{i:02d}": Label.SPAM for i in range(6)})
    outcome = run_iteration(session, oracle)
    assert outcome.expert_ids == ["p00", "p01", "p02", "p03"]
    assert outcome.requeued_ids == ["p04", "p05"]


def test_empty_pool_is_noop():
    seed_corpus, _, _ = small_fixture()
    session = ActiveSession(seed_corpus, Corpus("pool", []), ActiveConfig(**FAST))
    assert session.complete
    outcome = run_iteration(session, SimulatedOracle({}))
    assert outcome.labeled_count == 0
    assert session.iteration == 0


def test_pool_of_one_takes_one_iteration():
    seed_corpus, pool_corpus, truth = small_fixture(n_pool=1)
    _, report, _ = run_to_completion(seed_corpus, pool_corpus, ActiveConfig(**FAST),
                                     SimulatedOracle(truth))
    assert report.iterations == 1
    assert report.auto_count + report.expert_count == 1


def test_run_to_completion_partition_and_protocol(tmp_path):
    seed_corpus, pool_corpus, truth = small_fixture(n_seed=40, n_pool=50, noise=0.2, seed=3)
    cfg = ActiveConfig(**FAST)
    log_path = tmp_path / "events.jsonl"
    labeled, report, session = run_to_completion(
        seed_corpus, pool_corpus, cfg, SimulatedOracle(truth), event_log_path=log_path)
    assert session.complete
    assert len(labeled) == 50
    assert labeled.fully_labeled()
    assert report.seed_count == 40
    assert report.auto_count + report.expert_count == 50
    events = read_event_log(log_path)
    replay_events(events, {r.id for r in seed_corpus}, [r.id for r in pool_corpus], cfg)
    # per-iteration expert cap
    by_iter = {}
    for e in events:
        if e["action"] == "expert":
            by_iter[e["iter"]] = by_iter.get(e["iter"], 0) + 1
    assert all(v <= cfg.max_expert_per_iter for v in by_iter.values())
    assert report.expert_queries <= 4 * report.iterations


def test_auto_labels_above_threshold_expert_below():
    seed_corpus, pool_corpus, truth = small_fixture(n_seed=40, n_pool=40, noise=0.3, seed=5)
    cfg = ActiveConfig(**FAST)
    _, _, session = run_to_completion(seed_corpus, pool_corpus, cfg, SimulatedOracle(truth))
    for item in session.labeled:
        if item.provenance is Provenance.AUTO:
            assert item.score > cfg.threshold
        elif item.provenance is Provenance.EXPERT:
            assert item.score <= cfg.threshold


def test_determinism_same_seed_same_corpus():
    seed_corpus, pool_corpus, truth = small_fixture(n_seed=30, n_pool=30, noise=0.2, seed=7)
    cfg = ActiveConfig(**FAST, seed=11)
    out1, rep1, _ = run_to_completion(seed_corpus, pool_corpus, cfg, SimulatedOracle(truth, seed=1))
    out2, rep2, _ = run_to_completion(seed_corpus, pool_corpus, cfg, SimulatedOracle(truth, seed=1))
    assert out1.records == out2.records
    assert rep1.to_json_obj() == rep2.to_json_obj()


def test_livelock_guard_forces_single_expert():
    scores = [0.01, 0.02, 0.03]
    session, _ = scripted_session(scores, cfg=ActiveConfig(max_expert_per_iter=0, **FAST))
    oracle = SimulatedOracle({f"p{i:02d}": Label.SPAM for i in range(3)})
    outcome = run_iteration(session, oracle)
    assert len(outcome.expert_ids) == 1
    assert outcome.expert_ids == ["p00"]
    assert len(outcome.requeued_ids) == 2


def test_oracle_abort_rolls_back_iteration():
    scores = [0.9, 0.05, 0.04, 0.03, 0.02, 0.01]
    session, pool = scripted_session(scores)

    class AbortingOracle:
        def __init__(self):
            self.calls = 0

        def label(self, record):
            self.calls += 1
            if self.calls == 3:
                raise OracleAbort("expert walked away")
            return Label.SPAM

    oracle = AbortingOracle()
    before_pool = [r.id for r in session.pool]
    before_labeled = len(session.labeled)
    with pytest.raises(OracleAbort):
        run_iteration(session, oracle)
    assert [r.id for r in session.pool] == before_pool
    assert len(session.labeled) == before_labeled
    assert session.pending == []
    assert session.iteration == 0
    assert session.events == []
    # a working oracle can then finish the iteration
    outcome = run_iteration(session, SimulatedOracle({r.id: Label.HAM for r in pool}))
    assert outcome.labeled_count == 5


def test_seed_corpus_must_be_labeled():
    unlabeled = Corpus("seed", [ReviewRecord(id="a", text="x")])
    pool = Corpus("pool", [ReviewRecord(id="b", text="y")])
    with pytest.raises(CorpusError):
        ActiveSession(unlabeled, pool, ActiveConfig())


def test_pool_must_be_unlabeled():
    seed_corpus, _ = make_linear_corpus(10, labeled=True, prefix="s")
    labeled_pool, _ = make_linear_corpus(4, labeled=True, prefix="p")
    with pytest.raises(CorpusError):
        ActiveSession(seed_corpus, labeled_pool, ActiveConfig())


def test_simulated_oracle_flip_noise_deterministic():
    truth = {f"r{i}": Label.SPAM for i in range(50)}
    recs = [ReviewRecord(id=f"r{i}", text="t") for i in range(50)]
    answers1 = [SimulatedOracle(truth, flip_noise=0.3, seed=5).label(r) for r in recs[:1]]
    o1 = SimulatedOracle(truth, flip_noise=0.3, seed=5)
    o2 = SimulatedOracle(truth, flip_noise=0.3, seed=5)
    assert [o1.label(r) for r in recs] == [o2.label(r) for r in recs]
    flipped = sum(1 for r in recs if SimulatedOracle(truth, flip_noise=1.0).label(r) is Label.HAM)
    assert flipped == 50
    assert answers1[0] in (Label.SPAM, Label.HAM)


from hypothesis import given, settings
from hypothesis import strategies as st


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1, max_size=20))
def test_iteration_rules_hold_for_arbitrary_score_patterns(scores):
    session, _ = scripted_session(scores)
    cfg = session.cfg
    oracle = SimulatedOracle({f"p{i:02d}": Label.HAM for i in range(len(scores))})
    outcome = run_iteration(session, oracle)
    high = [i for i, s in enumerate(scores) if s > cfg.threshold]
    low = sorted((s, i) for i, s in enumerate(scores) if s <= cfg.threshold)
    assert outcome.auto_ids == [f"p{i:02d}" for i in high]
    assert outcome.expert_ids == [f"p{i:02d}" for _, i in low[: cfg.max_expert_per_iter]]
    requeued = sorted(i for _, i in low[cfg.max_expert_per_iter :])
    assert outcome.requeued_ids == [f"p{i:02d}" for i in requeued]
    assert oracle.queries == len(outcome.expert_ids)
    assert len(outcome.auto_ids) + len(outcome.expert_ids) + len(outcome.requeued_ids) == len(scores)


def test_event_log_byte_identical_across_runs(tmp_path):
    seed_corpus, pool_corpus, truth = small_fixture(n_seed=30, n_pool=25, noise=0.3, seed=9)
    cfg = ActiveConfig(**FAST, seed=4)
    paths = [tmp_path / "a.jsonl", tmp_path / "b.jsonl"]
    for path in paths:
        run_to_completion(seed_corpus, pool_corpus, cfg, SimulatedOracle(truth, seed=2),
                          event_log_path=path)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_no_retrain_mode_still_terminates():
    seed_corpus, pool_corpus, truth = small_fixture(n_seed=30, n_pool=15, noise=0.2, seed=10)
    cfg = ActiveConfig(**FAST, retrain_every_iteration=False)
    labeled, report, session = run_to_completion(seed_corpus, pool_corpus, cfg,
                                                 SimulatedOracle(truth))
    assert session.complete
    assert len(labeled) == 15
    assert report.iterations >= 1


def test_event_log_round_trip(tmp_path):
    seed_corpus, pool_corpus, truth = small_fixture(n_pool=10)
    cfg = ActiveConfig(**FAST)
    path = tmp_path / "ev.jsonl"
    _, _, session = run_to_completion(seed_corpus, pool_corpus, cfg,
                                      SimulatedOracle(truth), event_log_path=path)
    assert read_event_log(path) == session.events
    write_event_log(session.events, path)
    assert read_event_log(path) == session.events
