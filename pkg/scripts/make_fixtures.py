#!/usr/bin/env python3
"""Generate synthetic seed/pool/truth corpora for demos and service testing."""
import argparse
from pathlib import Path

from reviewguard.corpus import Corpus, ReviewRecord, export_jsonl
from reviewguard.synthetic import make_active_learning_fixture


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="fixtures")
    parser.add_argument("--n-seed", type=int, default=200)
    parser.add_argument("--n-pool", type=int, default=60)
    parser.add_argument("--noise", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed_corpus, pool_corpus, truth = make_active_learning_fixture(
        n_seed=args.n_seed, n_pool=args.n_pool, noise=args.noise, seed=args.seed)
    truth_corpus = Corpus("truth", [
        ReviewRecord(id=r.id, text=r.text, label=truth[r.id], source=r.source)
        for r in pool_corpus
    ])
    export_jsonl(seed_corpus, out / "seed.jsonl")
    export_jsonl(pool_corpus, out / "pool.jsonl")
    export_jsonl(truth_corpus, out / "truth.jsonl")
    print(f"wrote seed ({len(seed_corpus)}), pool ({len(pool_corpus)}), "
          f"truth ({len(truth_corpus)}) under {out}/")


if __name__ == "__main__":
    main()
