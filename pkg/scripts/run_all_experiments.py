#!/usr/bin/env python3
"""Run the four experiment grids end to end and write result tables.

Expects canonical labeled corpora (JSONL). Typical use:

    python scripts/run_all_experiments.py --ott ott.jsonl --yelp yelp_labeled.jsonl \
        --out results/

For a quick smoke run pass --quick, which restricts every grid to one cell.
"""
import argparse
import sys

from reviewguard.cli import dispatch


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ott", required=True, help="labeled corpus for experiments I/III/IV")
    parser.add_argument("--yelp", help="second labeled corpus for experiments II/III/IV")
    parser.add_argument("--out", default="results")
    parser.add_argument("--seeds", default="0,1,2")
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    quick = []
    if args.quick:
        quick = ["--ratios", "80:20", "--embed-dims", "50", "--hidden-dims", "50",
                 "--ngrams", "uni", "--folds", "5", "--epochs", "2", "--w2v-epochs", "1"]

    corpora = ["--corpus", args.ott] + (["--corpus", args.yelp] if args.yelp else [])
    for experiment in ("I", "II", "III", "IV"):
        if experiment == "II" and not args.yelp:
            print("skipping experiment II (no second corpus)")
            continue
        argv = (["experiment", "--id", experiment, "--out", args.out,
                 "--seeds", args.seeds] + corpora + quick)
        print(f"$ reviewguard {' '.join(argv)}")
        code = dispatch(argv)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
