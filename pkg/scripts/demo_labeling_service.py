#!/usr/bin/env python3
"""Start the labeling service on synthetic fixtures and open a session, so the
browser UI can be tried end to end without any real data."""
import argparse
import json
import tempfile
import urllib.request
from pathlib import Path

from reviewguard.corpus import export_jsonl
from reviewguard.labelsvc import LabelService
from reviewguard.synthetic import make_active_learning_fixture


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--n-pool", type=int, default=60)
    parser.add_argument("--noise", type=float, default=0.6)
    parser.add_argument("--static-dir", default="frontend/dist",
                        help="built UI assets (see frontend/README)")
    args = parser.parse_args()

    workdir = Path(tempfile.mkdtemp(prefix="reviewguard-demo-"))
    seed_corpus, pool_corpus, _ = make_active_learning_fixture(
        n_seed=120, n_pool=args.n_pool, noise=args.noise, seed=0)
    export_jsonl(seed_corpus, workdir / "seed.jsonl")
    export_jsonl(pool_corpus, workdir / "pool.jsonl")

    static = args.static_dir if Path(args.static_dir).is_dir() else None
    service = LabelService(host="127.0.0.1", port=args.port, static_dir=static)
    base = service.start()
    body = json.dumps({"seed_corpus": str(workdir / "seed.jsonl"),
                       "pool_corpus": str(workdir / "pool.jsonl"),
                       "svm_epochs": 5, "eval_holdout_fraction": 0.1}).encode()
    req = urllib.request.Request(f"{base}/api/v1/session", data=body, method="POST",
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        print("session:", resp.read().decode())
    if static is None:
        print("note: no built UI found; only the JSON API is served")
    print(f"labeling service: {base}  (ctrl-c to stop)")
    try:
        service.join()
    except KeyboardInterrupt:
        service.stop()


if __name__ == "__main__":
    main()
