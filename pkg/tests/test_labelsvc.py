import json
import time
import urllib.error
import urllib.request

import pytest

from reviewguard.active import ActiveConfig, SimulatedOracle, run_to_completion
from reviewguard.corpus import export_jsonl
from reviewguard.labelsvc import LabelService
from reviewguard.synthetic import make_active_learning_fixture


def http(method, url, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, resp.read().decode()
    except urllib.error.HTTPError as exc:
        return exc.code, exc.read().decode()


def http_json(method, url, body=None):
    status, text = http(method, url, body)
    return status, json.loads(text) if text else None


@pytest.fixture
def service(tmp_path):
    svc = LabelService(host="127.0.0.1", port=0)
    base = svc.start()
    yield svc, base, tmp_path
    svc.stop()


def fixture_paths(tmp_path, n_seed=30, n_pool=12, noise=0.6, seed=0):
    seed_c, pool_c, truth = make_active_learning_fixture(
        n_seed=n_seed, n_pool=n_pool, noise=noise, seed=seed)
    seed_path = tmp_path / "seed.jsonl"
    pool_path = tmp_path / "pool.jsonl"
    export_jsonl(seed_c, seed_path)
    export_jsonl(pool_c, pool_path)
    return seed_c, pool_c, truth, str(seed_path), str(pool_path)


def start_session(base, seed_path, pool_path, **overrides):
    config = {"seed_corpus": seed_path, "pool_corpus": pool_path,
              "svm_epochs": 5, "seed": 0}
    config.update(overrides)
    return http_json("POST", f"{base}/api/v1/session", config)


def wait_until(predicate, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        value = predicate()
        if value:
            return value
        time.sleep(0.02)
    raise AssertionError("timed out waiting for service state")


def drain_session(base, truth, max_labels=10_000):
    """Label every queued item with the ground truth until completion."""
    submitted = 0
    def finished():
        _, view = http_json("GET", f"{base}/api/v1/session")
        return view if view["state"] in ("complete", "aborted") else None
    while submitted < max_labels:
        _, view = http_json("GET", f"{base}/api/v1/session")
        if view["state"] == "complete":
            return view
        assert view["state"] != "aborted"
        _, queue = http_json("GET", f"{base}/api/v1/queue")
        if not queue:
            time.sleep(0.02)
            continue
        for item in queue:
            status, _ = http_json("POST", f"{base}/api/v1/labels",
                                  {"record_id": item["record_id"],
                                   "label": truth[item["record_id"]].value})
            assert status == 200
            submitted += 1
    return wait_until(finished)


def test_endpoints_404_without_session(service):
    _, base, _ = service
    for path in ("session", "queue", "progress", "export"):
        status, _ = http_json("GET", f"{base}/api/v1/{path}")
        assert status == 404


def test_session_lifecycle_and_export_equality(service):
    svc, base, tmp_path = service
    seed_c, pool_c, truth, seed_path, pool_path = fixture_paths(tmp_path)
    status, view = start_session(base, seed_path, pool_path)
    assert status == 201
    assert view["session_id"] == "session-1"
    assert view["counts"]["seed"] == 30

    # export is refused while the loop is running
    status, _ = http_json("GET", f"{base}/api/v1/export")
    assert status == 409

    final = drain_session(base, truth)
    assert final["counts"]["pool_remaining"] == 0
    assert final["counts"]["auto"] + final["counts"]["expert"] == 12

    status, text = http(f"GET", f"{base}/api/v1/export")
    assert status == 200

    # the same pool driven offline with the same answers must export identically
    cfg = ActiveConfig(svm_epochs=5, seed=0)
    labeled, _, _ = run_to_completion(seed_c, pool_c, cfg, SimulatedOracle(truth))
    from reviewguard.corpus import export_jsonl_str
    assert text == export_jsonl_str(labeled)


def test_queue_items_carry_text_and_score(service):
    svc, base, tmp_path = service
    _, _, truth, seed_path, pool_path = fixture_paths(tmp_path, noise=1.0, seed=3)
    start_session(base, seed_path, pool_path)
    queue = wait_until(lambda: http_json("GET", f"{base}/api/v1/queue")[1])
    item = queue[0]
    assert set(item) == {"record_id", "text", "score", "p_spam", "iteration"}
    assert item["score"] <= 0.20
    assert len(queue) <= 4
    drain_session(base, truth)


def test_label_replay_and_conflict(service):
    svc, base, tmp_path = service
    _, _, truth, seed_path, pool_path = fixture_paths(tmp_path, noise=1.0, seed=4)
    start_session(base, seed_path, pool_path)
    queue = wait_until(lambda: http_json("GET", f"{base}/api/v1/queue")[1])
    rid = queue[0]["record_id"]
    label = truth[rid].value
    other = "ham" if label == "spam" else "spam"

    status, payload = http_json("POST", f"{base}/api/v1/labels",
                                {"record_id": rid, "label": label})
    assert status == 200 and payload["status"] == "accepted"
    status, payload = http_json("POST", f"{base}/api/v1/labels",
                                {"record_id": rid, "label": label})
    assert status == 200 and payload["status"] == "already_accepted"
    status, payload = http_json("POST", f"{base}/api/v1/labels",
                                {"record_id": rid, "label": other})
    assert status == 409
    drain_session(base, truth)


def test_unknown_record_404_and_bad_body_400(service):
    svc, base, tmp_path = service
    _, _, truth, seed_path, pool_path = fixture_paths(tmp_path, noise=1.0, seed=5)
    start_session(base, seed_path, pool_path)
    wait_until(lambda: http_json("GET", f"{base}/api/v1/queue")[1])

    status, payload = http_json("POST", f"{base}/api/v1/labels",
                                {"record_id": "no-such-record", "label": "spam"})
    assert status == 404 and payload["error"] == "unknown_record"

    status, payload = http_json("POST", f"{base}/api/v1/labels", {"record_id": "x"})
    assert status == 400

    status, payload = http_json("POST", f"{base}/api/v1/labels",
                                {"record_id": "x", "label": "maybe"})
    assert status == 400 and payload["error"] == "bad_label"
    drain_session(base, truth)


def test_second_session_rejected_while_running(service):
    svc, base, tmp_path = service
    _, _, truth, seed_path, pool_path = fixture_paths(tmp_path, noise=1.0, seed=6)
    status, _ = start_session(base, seed_path, pool_path)
    assert status == 201
    status, payload = start_session(base, seed_path, pool_path)
    assert status == 409 and payload["error"] == "session_already_running"
    drain_session(base, truth)
    # after completion a new session may start
    status, view = start_session(base, seed_path, pool_path)
    assert status == 201 and view["session_id"] == "session-2"
    drain_session(base, truth)


def test_progress_reports_events_and_state(service):
    svc, base, tmp_path = service
    _, _, truth, seed_path, pool_path = fixture_paths(tmp_path, noise=0.5, seed=7)
    start_session(base, seed_path, pool_path)
    drain_session(base, truth)
    status, progress = http_json("GET", f"{base}/api/v1/progress")
    assert status == 200
    assert progress["state"] == "complete"
    assert 1 <= len(progress["last_events"]) <= 10
    assert progress["report"]["auto"] + progress["report"]["expert"] == 12


def test_bad_session_config_rejected(service):
    svc, base, tmp_path = service
    status, payload = http_json("POST", f"{base}/api/v1/session", {"seed_corpus": "x"})
    assert status == 400 and payload["error"] == "missing_field"
    status, payload = http_json("POST", f"{base}/api/v1/session",
                                {"seed_corpus": "/no/such.jsonl", "pool_corpus": "/no/such2.jsonl"})
    assert status == 400 and payload["error"] == "bad_config"


def test_stop_while_awaiting_expert_does_not_hang(tmp_path):
    svc = LabelService(host="127.0.0.1", port=0)
    base = svc.start()
    _, _, truth, seed_path, pool_path = fixture_paths(tmp_path, noise=1.0, seed=8)
    start_session(base, seed_path, pool_path)
    wait_until(lambda: http_json("GET", f"{base}/api/v1/session")[1]["state"] == "awaiting_expert")
    started = time.time()
    svc.stop()
    assert time.time() - started < 10


def test_static_files_served_from_root(tmp_path):
    static = tmp_path / "static"
    static.mkdir()
    (static / "index.html").write_text("<html><body>labeler</body></html>")
    (static / "app.js").write_text("console.log('ok');")
    svc = LabelService(host="127.0.0.1", port=0, static_dir=str(static))
    base = svc.start()
    try:
        status, text = http("GET", f"{base}/")
        assert status == 200 and "labeler" in text
        status, text = http("GET", f"{base}/app.js")
        assert status == 200 and "console" in text
        status, _ = http("GET", f"{base}/../etc/passwd")
        assert status == 404
        status, _ = http("GET", f"{base}/missing.css")
        assert status == 404
    finally:
        svc.stop()
