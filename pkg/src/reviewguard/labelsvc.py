"""HTTP facade over an active-learning session with a human expert oracle.

One session runs at a time. A worker thread drives the labeling loop; request
handlers never touch the session directly. Reads serve a snapshot the worker
publishes at safe points, and label submissions are handed to the worker
through the oracle's serialized queue, so all mutations happen on the worker.

Endpoints (JSON over HTTP, UTF-8):
  POST /api/v1/session   start a session           201 | 400 | 409
  GET  /api/v1/session   current SessionView       200 | 404
  GET  /api/v1/queue     pending expert items      200 | 404
  POST /api/v1/labels    submit {record_id,label}  200 | 400 | 404 | 409
  GET  /api/v1/progress  counts + last 10 events   200 | 404
  GET  /api/v1/export    labeled corpus JSONL      200 | 404 | 409
Static UI assets are served from / when a static directory is configured.
"""
from __future__ import annotations

import json
import logging
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .active import ActiveConfig, OracleAbort, Provenance, run_to_completion
from .corpus import CorpusError, Label, export_jsonl_str, import_jsonl

logger = logging.getLogger(__name__)

STATE_RUNNING = "running"
STATE_AWAITING = "awaiting_expert"
STATE_COMPLETE = "complete"
STATE_ABORTED = "aborted"


class HumanOracle:
    """Blocks the worker until the expert's label for each record arrives."""

    def __init__(self):
        self._cond = threading.Condition()
        self._pending_ids: set[str] = set()
        self._submitted: dict[str, Label] = {}
        self._answered: dict[str, Label] = {}
        self._aborted = False

    def publish(self, pending_ids: set[str]) -> None:
        with self._cond:
            self._pending_ids = set(pending_ids)
            self._cond.notify_all()

    def label(self, record) -> Label:
        with self._cond:
            while record.id not in self._submitted:
                if self._aborted:
                    raise OracleAbort("labeling session aborted")
                self._cond.wait(timeout=0.5)
            answer = self._submitted.pop(record.id)
            self._answered[record.id] = answer
            return answer

    def submit(self, record_id: str, label: Label) -> str:
        """Returns one of accepted | replay | conflict | unknown."""
        with self._cond:
            for store in (self._answered, self._submitted):
                if record_id in store:
                    return "replay" if store[record_id] is label else "conflict"
            if record_id not in self._pending_ids:
                return "unknown"
            self._submitted[record_id] = label
            self._cond.notify_all()
            return "accepted"

    def abort(self) -> None:
        with self._cond:
            self._aborted = True
            self._cond.notify_all()


class LabelService:
    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 static_dir: str | None = None, default_seed: int = 0):
        self.host = host
        self.port = port
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self.default_seed = default_seed
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._server_thread: threading.Thread | None = None
        self._worker: threading.Thread | None = None
        self._oracle: HumanOracle | None = None
        self._session_counter = 0
        self._view: dict | None = None
        self._queue: list[dict] = []
        self._events: list[dict] = []
        self._labeled: dict[str, str] = {}  # record id -> provenance
        self._export_text: str | None = None
        self._report: dict | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> str:
        handler = type("Handler", (_Handler,), {"service": self})
        self._server = ThreadingHTTPServer((self.host, self.port), handler)
        self.port = self._server.server_address[1]
        self._server_thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._server_thread.start()
        return f"http://{self.host}:{self.port}"

    def join(self) -> None:
        if self._server_thread:
            self._server_thread.join()

    def stop(self) -> None:
        if self._oracle:
            self._oracle.abort()
        if self._worker and self._worker.is_alive():
            self._worker.join(timeout=5)
        if self._server:
            self._server.shutdown()
            self._server.server_close()
        if self._server_thread:
            self._server_thread.join(timeout=5)

    # -- session control -----------------------------------------------------

    def start_session(self, config: dict) -> tuple[int, dict]:
        with self._lock:
            if self._worker and self._worker.is_alive():
                return 409, {"error": "session_already_running"}
        for field in ("seed_corpus", "pool_corpus"):
            if field not in config:
                return 400, {"error": "missing_field", "field": field}
        try:
            seed_corpus = import_jsonl(config["seed_corpus"])
            pool_corpus = import_jsonl(config["pool_corpus"], label_field=None)
            cfg = ActiveConfig(
                batch_size=int(config.get("batch_size", 20)),
                threshold=float(config.get("threshold", 0.20)),
                max_expert_per_iter=int(config.get("max_expert_per_iter", 4)),
                n_range=tuple(config.get("ngram", (1, 1))),
                svm_epochs=int(config.get("svm_epochs", 10)),
                seed=int(config.get("seed", self.default_seed)),
                eval_holdout_fraction=float(config.get("eval_holdout_fraction", 0.0)),
            )
        except (CorpusError, FileNotFoundError, ValueError) as exc:
            return 400, {"error": "bad_config", "detail": str(exc)}
        with self._lock:
            self._session_counter += 1
            session_id = f"session-{self._session_counter}"
            self._oracle = HumanOracle()
            self._view = {
                "session_id": session_id,
                "iteration": 0,
                "state": STATE_RUNNING,
                "counts": {"seed": len(seed_corpus), "auto": 0, "expert": 0,
                           "pool_remaining": len(pool_corpus), "pending": 0},
                "learner_accuracy": None,
            }
            self._queue = []
            self._events = []
            self._labeled = {}
            self._export_text = None
            self._report = None
            self._worker = threading.Thread(
                target=self._run_worker, args=(seed_corpus, pool_corpus, cfg),
                daemon=True,
            )
            self._worker.start()
        return 201, self.session_view()

    def _run_worker(self, seed_corpus, pool_corpus, cfg) -> None:
        try:
            labeled, report, _ = run_to_completion(
                seed_corpus, pool_corpus, cfg, self._oracle, observer=self._observe)
        except Exception as exc:
            logger.warning("labeling worker stopped: %s", exc)
            with self._lock:
                if self._view is not None:
                    self._view["state"] = STATE_ABORTED
                    self._view["error"] = str(exc)
            return
        with self._lock:
            self._view["state"] = STATE_COMPLETE
            self._view["counts"]["pending"] = 0
            self._export_text = export_jsonl_str(labeled)
            self._report = report.to_json_obj()

    def _observe(self, session) -> None:
        pending_ids = {item.record.id for item in session.pending}
        self._oracle.publish(pending_ids)
        with self._lock:
            counts = session.counts()
            self._view.update({
                "iteration": session.iteration,
                "state": STATE_AWAITING if session.pending else STATE_RUNNING,
                "counts": counts,
                "learner_accuracy": session.learner_accuracy,
            })
            self._queue = [
                {"record_id": item.record.id, "text": item.record.text,
                 "score": item.score, "p_spam": item.p_spam, "iteration": item.iteration}
                for item in session.pending
            ]
            self._events = list(session.events)
            self._labeled = {
                item.record.id: item.provenance.value
                for item in session.labeled if item.provenance is not Provenance.SEED
            }

    # -- read endpoints --------------------------------------------------------

    def session_view(self) -> dict | None:
        with self._lock:
            return dict(self._view) if self._view is not None else None

    def queue_view(self) -> list[dict] | None:
        with self._lock:
            if self._view is None:
                return None
            return list(self._queue)

    def progress_view(self) -> dict | None:
        with self._lock:
            if self._view is None:
                return None
            return {
                "counts": dict(self._view["counts"]),
                "state": self._view["state"],
                "iteration": self._view["iteration"],
                "learner_accuracy": self._view["learner_accuracy"],
                "last_events": self._events[-10:],
                "report": self._report,
            }

    def export_text(self) -> tuple[int, str | dict]:
        with self._lock:
            if self._view is None:
                return 404, {"error": "no_session"}
            if self._view["state"] != STATE_COMPLETE or self._export_text is None:
                return 409, {"error": "session_not_complete"}
            return 200, self._export_text

    def submit_label(self, record_id: str, label: Label) -> tuple[int, dict]:
        with self._lock:
            if self._view is None:
                return 404, {"error": "no_session"}
            oracle = self._oracle
            provenance = self._labeled.get(record_id)
        if provenance == "auto":
            return 409, {"error": "already_labeled", "provenance": "auto"}
        status = oracle.submit(record_id, label)
        if status == "accepted":
            return 200, {"status": "accepted", "record_id": record_id}
        if status == "replay":
            return 200, {"status": "already_accepted", "record_id": record_id}
        if status == "conflict":
            return 409, {"error": "already_labeled", "provenance": "expert"}
        return 404, {"error": "unknown_record", "record_id": record_id}


class _Handler(BaseHTTPRequestHandler):
    service: LabelService = None

    def log_message(self, fmt, *args):
        logger.debug("%s - %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json_body(self):
        try:
            length = int(self.headers.get("Content-Length", 0))
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            return None

    def do_GET(self):
        svc = self.service
        if self.path == "/api/v1/session":
            view = svc.session_view()
            self._send_json(200, view) if view else self._send_json(404, {"error": "no_session"})
        elif self.path == "/api/v1/queue":
            queue = svc.queue_view()
            self._send_json(200, queue) if queue is not None else self._send_json(404, {"error": "no_session"})
        elif self.path == "/api/v1/progress":
            progress = svc.progress_view()
            self._send_json(200, progress) if progress else self._send_json(404, {"error": "no_session"})
        elif self.path == "/api/v1/export":
            status, payload = svc.export_text()
            if status == 200:
                body = payload.encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/jsonl; charset=utf-8")
                self.send_header("Content-Disposition", "attachment; filename=labeled.jsonl")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)
            else:
                self._send_json(status, payload)
        else:
            self._serve_static()

    def do_POST(self):
        svc = self.service
        if self.path == "/api/v1/session":
            body = self._read_json_body()
            if not isinstance(body, dict):
                self._send_json(400, {"error": "bad_json"})
                return
            status, payload = svc.start_session(body)
            self._send_json(status, payload)
        elif self.path == "/api/v1/labels":
            body = self._read_json_body()
            if not isinstance(body, dict) or "record_id" not in body or "label" not in body:
                self._send_json(400, {"error": "bad_json"})
                return
            try:
                label = Label.parse(str(body["label"]))
            except CorpusError:
                self._send_json(400, {"error": "bad_label"})
                return
            status, payload = svc.submit_label(str(body["record_id"]), label)
            self._send_json(status, payload)
        else:
            self._send_json(404, {"error": "not_found"})

    def _serve_static(self):
        svc = self.service
        if svc.static_dir is None:
            self._send_json(404, {"error": "not_found"})
            return
        rel = self.path.lstrip("/") or "index.html"
        target = (svc.static_dir / rel).resolve()
        if not str(target).startswith(str(svc.static_dir)) or not target.is_file():
            self._send_json(404, {"error": "not_found"})
            return
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)
