"""Single command-line entry point wiring all modules together.

Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime failure.
Settings come from flags, falling back to a ``key = value`` INI config file
(``--config``) and then to defaults; all randomness flows from one seed
(``--seed`` flag, then the REVIEWGUARD_SEED environment variable).
"""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from pathlib import Path

from . import pipelines
from .active import ActiveConfig, ActiveLearningError, SimulatedOracle, run_to_completion
from .corpus import CorpusError, Source, export_jsonl, import_jsonl, import_ott
from .embed import EmbedError, save_json as save_embed_json, save_text as save_embed_text, train_word2vec
from .evaluation import EvalError, ExperimentGrid, evaluate_predictions, run_experiment
from .features import FeatureError
from .models import ModelError, ModelSpec, TrainingDiverged
from .nnet import NumericsError
from .classic import ClassicError
from .textprep import PrepConfig, load_stopwords, preprocess_corpus, read_tokens_jsonl, write_tokens_jsonl

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

_DATA_ERRORS = (CorpusError, FeatureError, EvalError, EmbedError, ClassicError,
                ModelError, FileNotFoundError, NotADirectoryError, json.JSONDecodeError)
_RUNTIME_ERRORS = (TrainingDiverged, NumericsError, ActiveLearningError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise UsageError(message)


def resolve_seed(args, cfg: configparser.ConfigParser) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("REVIEWGUARD_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"REVIEWGUARD_SEED must be an integer, got {env!r}") from None
    if cfg.has_option("run", "seed"):
        return cfg.getint("run", "seed")
    return 0


def _load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    if path:
        if not Path(path).is_file():
            raise CorpusError(f"config file not found: {path}")
        cfg.read(path, encoding="utf-8")
    return cfg


def _setting(args, cfg, section: str, key: str, default, cast=str):
    flag = getattr(args, key.replace("-", "_"), None)
    if flag is not None:
        return flag
    if cfg.has_option(section, key):
        raw = cfg.get(section, key)
        if cast is bool:
            return cfg.getboolean(section, key)
        return cast(raw)
    return default


def _prep_config(args, cfg) -> PrepConfig:
    stopword_path = _setting(args, cfg, "prep", "stopwords", None)
    min_len = _setting(args, cfg, "prep", "min_token_len", 1, int)
    stem = not getattr(args, "no_stem", False)
    if cfg.has_option("prep", "stem") and getattr(args, "no_stem", False) is False:
        stem = cfg.getboolean("prep", "stem")
    return PrepConfig(stopwords=load_stopwords(stopword_path), stem=stem, min_token_len=min_len)


def _parse_ngram(value: str) -> tuple[int, int]:
    names = {"uni": (1, 1), "bi": (2, 2), "tri": (3, 3),
             "uni+bi": (1, 2), "bi+tri": (2, 3), "uni+bi+tri": (1, 3)}
    if value in names:
        return names[value]
    try:
        lo, hi = (int(x) for x in value.split(","))
        return (lo, hi)
    except ValueError:
        raise UsageError(f"cannot parse n-gram range {value!r}") from None


def build_parser() -> _Parser:
    parser = _Parser(prog="reviewguard", description=__doc__)
    parser.add_argument("--config", help="INI config file; flags override its values")
    parser.add_argument("--seed", type=int, help="global random seed")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("import", help="ingest a corpus into canonical JSONL")
    p.add_argument("--kind", choices=["ott", "jsonl"], required=True)
    p.add_argument("--root", help="ott: directory of one-review-per-file texts")
    p.add_argument("--in", dest="input", help="jsonl: source file")
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int)
    p.add_argument("--strict", action="store_true")
    p.add_argument("--text-field", default="text")
    p.add_argument("--label-field", default=None)
    p.add_argument("--source", choices=[s.value for s in Source], default="other")

    p = sub.add_parser("prep", help="preprocess a corpus into token lists")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stopwords")
    p.add_argument("--no-stem", action="store_true")
    p.add_argument("--min-token-len", type=int)

    p = sub.add_parser("embed", help="train word2vec embeddings")
    p.add_argument("--in", dest="input", required=True, help="corpus or tokens JSONL")
    p.add_argument("--out", required=True, help=".txt or .json embedding file")
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)

    p = sub.add_parser("train", help="train a classifier on a labeled corpus")
    p.add_argument("--kind", choices=["mlp", "cnn", "lstm", "svm", "knn", "nb"], required=True)
    p.add_argument("--train", dest="train_path", required=True)
    p.add_argument("--test", dest="test_path", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-report")
    p.add_argument("--spec", help="INI file with a [model] section of ModelSpec fields")
    p.add_argument("--ngram")
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--lr", type=float)

    p = sub.add_parser("evaluate", help="evaluate a saved model on a labeled corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")

    p = sub.add_parser("predict", help="label a corpus with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment", help="run one of the experiment grids")
    p.add_argument("--id", required=True, choices=["I", "II", "III", "IV"])
    p.add_argument("--corpus", action="append", required=True,
                   help="labeled corpus JSONL (repeatable; name taken from file stem)")
    p.add_argument("--out", required=True, help="output directory for result tables")
    p.add_argument("--ratios", help="e.g. 80:20,70:30")
    p.add_argument("--embed-dims", help="e.g. 50,100")
    p.add_argument("--hidden-dims", help="e.g. 50,100")
    p.add_argument("--ngrams", help="e.g. uni,uni+bi+tri")
    p.add_argument("--folds", help="e.g. 5,10")
    p.add_argument("--classifiers", help="subset of svm,knn,nb")
    p.add_argument("--seeds", help="e.g. 0,1,2")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--w2v-epochs", type=int)
    p.add_argument("--max-len-cap", type=int)

    p = sub.add_parser("label", help="run the active-learning labeling loop")
    p.add_argument("--seed-corpus", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--oracle", choices=["simulated"], default="simulated")
    p.add_argument("--truth", help="labeled JSONL with ground truth for the simulated oracle")
    p.add_argument("--out", required=True)
    p.add_argument("--event-log")
    p.add_argument("--report")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--max-expert", type=int)
    p.add_argument("--flip-noise", type=float, default=0.0)

    p = sub.add_parser("serve", help="start the expert-labeling HTTP service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", help="directory of UI assets to serve at /")

    return parser


# --- subcommand implementations ------------------------------------------------


def cmd_import(args, cfg, seed) -> int:
    if args.kind == "ott":
        if not args.root:
            raise UsageError("--root is required for --kind ott")
        corpus = import_ott(args.root, strict=args.strict)
    else:
        if not args.input:
            raise UsageError("--in is required for --kind jsonl")
        corpus = import_jsonl(args.input, text_field=args.text_field,
                              label_field=args.label_field, limit=args.limit,
                              strict=args.strict, default_source=Source.parse(args.source))
    count = export_jsonl(corpus, args.out)
    counts = corpus.label_counts()
    print(f"imported {count} records ({counts['spam']} spam / {counts['ham']} ham / "
          f"{counts['unlabeled']} unlabeled) -> {args.out}")
    return EXIT_OK


def cmd_prep(args, cfg, seed) -> int:
    corpus = import_jsonl(args.input)
    docs = preprocess_corpus(corpus, _prep_config(args, cfg))
    count = write_tokens_jsonl(docs, args.out)
    print(f"preprocessed {count} documents -> {args.out}")
    return EXIT_OK


def _read_docs(path: str, prep: PrepConfig):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.strip() and "tokens" in json.loads(first):
        return read_tokens_jsonl(path)
    return preprocess_corpus(import_jsonl(path), prep)


def cmd_embed(args, cfg, seed) -> int:
    docs = _read_docs(args.input, _prep_config(args, cfg))
    table = train_word2vec(
        docs,
        dim=_setting(args, cfg, "embed", "dim", 100, int),
        window=_setting(args, cfg, "embed", "window", 5, int),
        negatives=_setting(args, cfg, "embed", "negatives", 5, int),
        epochs=_setting(args, cfg, "embed", "epochs", 5, int),
        lr=_setting(args, cfg, "embed", "lr", 0.025, float),
        seed=seed,
    )
    if args.out.endswith(".json"):
        save_embed_json(table, args.out)
    else:
        save_embed_text(table, args.out)
    print(f"trained {len(table)} x {table.dim} embedding table -> {args.out}")
    return EXIT_OK


def _model_spec(args, cfg, seed, kind: str) -> ModelSpec:
    spec_cfg = cfg
    if args.spec:
        spec_cfg = _load_config(args.spec)
    get = lambda key, default, cast: _setting(args, spec_cfg, "model", key, default, cast)
    return ModelSpec(
        kind=kind,
        lstm_hidden=get("hidden", 100, int),
        dropout=get("dropout", 0.5, float),
        lr=get("lr", 0.001, float),
        epochs=get("epochs", 20, int),
        batch_size=get("batch_size", 32, int),
        seed=seed,
    )


def cmd_train(args, cfg, seed) -> int:
    train_corpus = import_jsonl(args.train_path)
    test_corpus = import_jsonl(args.test_path)
    for c in (train_corpus, test_corpus):
        if not c.fully_labeled():
            raise CorpusError(f"corpus {c.name!r} must be fully labeled for training")
    prep = _prep_config(args, cfg)
    n_range = _parse_ngram(args.ngram) if args.ngram else (1, 1)
    if args.kind in ("svm", "knn", "nb"):
        pipeline = pipelines.fit_classic(train_corpus.records, args.kind,
                                         n_range=n_range, prep=prep, seed=seed)
        pred = pipeline.predict(test_corpus.records)
        report_obj = evaluate_predictions([r.label for r in test_corpus.records], pred).to_json_obj()
        pipelines.save_classic(pipeline, args.out_model)
    elif args.kind == "mlp":
        spec = _model_spec(args, cfg, seed, "mlp")
        n_range = _parse_ngram(args.ngram) if args.ngram else (1, 3)
        pipeline, report = pipelines.fit_mlp(train_corpus.records, test_corpus.records,
                                             n_range=n_range, prep=prep, spec=spec)
        report_obj = report.to_json_obj()
        pipelines.save_neural(pipeline, args.out_model)
    else:
        spec = _model_spec(args, cfg, seed, args.kind)
        pipeline, report = pipelines.fit_neural_sequence(
            train_corpus.records, test_corpus.records, kind=args.kind,
            embed_dim=args.embed_dim or _setting(args, cfg, "embed", "dim", 100, int),
            hidden_dim=args.hidden, prep=prep, spec=spec, seed=seed,
        )
        report_obj = report.to_json_obj()
        pipelines.save_neural(pipeline, args.out_model)
    report_obj["config"] = {"kind": args.kind, "seed": seed, "ngram": list(n_range),
                            "train": args.train_path, "test": args.test_path}
    if args.out_report:
        Path(args.out_report).write_text(json.dumps(report_obj, sort_keys=True, indent=1),
                                         encoding="utf-8")
    print(json.dumps(report_obj, sort_keys=True))
    return EXIT_OK


def cmd_evaluate(args, cfg, seed) -> int:
    pipeline = pipelines.load_any(args.model)
    corpus = import_jsonl(args.input)
    if not corpus.fully_labeled():
        raise CorpusError("evaluation corpus must be fully labeled")
    pred = pipeline.predict(corpus.records)
    report = evaluate_predictions([r.label for r in corpus.records], pred,
                                  config={"model": args.model, "corpus": args.input})
    text = json.dumps(report.to_json_obj(), sort_keys=True, indent=1)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(text)
    return EXIT_OK


def cmd_predict(args, cfg, seed) -> int:
    pipeline = pipelines.load_any(args.model)
    corpus = import_jsonl(args.input, label_field=None)
    pred = pipeline.predict(corpus.records)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rec, label in zip(corpus.records, pred):
            fh.write(json.dumps({"id": rec.id, "label": label.value}, sort_keys=True) + "\n")
    print(f"predicted {len(corpus)} records -> {args.out}")
    return EXIT_OK


def _parse_list(value, cast):
    return tuple(cast(x) for x in value.split(",")) if value else None


def cmd_experiment(args, cfg, seed) -> int:
    corpora = {}
    for path in args.corpus:
        corpus = import_jsonl(path)
        if not corpus.fully_labeled():
            raise CorpusError(f"experiment corpus {path} must be fully labeled")
        corpora[Path(path).stem] = corpus
    grid = ExperimentGrid()
    overrides = {}
    if args.ratios:
        overrides["ratios"] = tuple(tuple(int(x) for x in r.split(":")) for r in args.ratios.split(","))
    if args.embed_dims:
        overrides["embed_dims"] = _parse_list(args.embed_dims, int)
    if args.hidden_dims:
        overrides["hidden_dims"] = _parse_list(args.hidden_dims, int)
    if args.ngrams:
        overrides["ngram_ranges"] = tuple(_parse_ngram(n) for n in args.ngrams.split(","))
    if args.folds:
        overrides["folds"] = _parse_list(args.folds, int)
    if args.classifiers:
        overrides["classifiers"] = tuple(args.classifiers.split(","))
    overrides["seeds"] = _parse_list(args.seeds, int) or (seed,)
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.batch_size is not None:
        overrides["batch_size"] = args.batch_size
    if args.w2v_epochs is not None:
        overrides["w2v_epochs"] = args.w2v_epochs
    if args.max_len_cap is not None:
        overrides["max_len_cap"] = args.max_len_cap
    grid = ExperimentGrid(**{**grid.__dict__, **overrides})
    rows = run_experiment(args.id, corpora, grid=grid, out_dir=args.out)
    best = max((r["accuracy"] for r in rows), default=float("nan"))
    print(f"experiment {args.id}: {len(rows)} grid cells, best accuracy {best:.3f} -> {args.out}")
    return EXIT_OK


def cmd_label(args, cfg, seed) -> int:
    seed_corpus = import_jsonl(args.seed_corpus)
    pool = import_jsonl(args.pool, label_field=None)
    if not args.truth:
        raise UsageError("--truth is required for the simulated oracle")
    truth_corpus = import_jsonl(args.truth)
    truth = {r.id: r.label for r in truth_corpus if r.label is not None}
    missing = [r.id for r in pool if r.id not in truth]
    if missing:
        raise CorpusError(f"{len(missing)} pool records missing from the truth file")
    active_cfg = ActiveConfig(
        batch_size=_setting(args, cfg, "active", "batch_size", 20, int),
        threshold=_setting(args, cfg, "active", "threshold", 0.20, float),
        max_expert_per_iter=(args.max_expert if args.max_expert is not None
                             else _setting(args, cfg, "active", "max_expert_per_iter", 4, int)),
        seed=seed,
    )
    oracle = SimulatedOracle(truth, flip_noise=args.flip_noise, seed=seed)
    labeled, report, _ = run_to_completion(
        seed_corpus, pool, active_cfg, oracle,
        prep=_prep_config(args, cfg),
        event_log_path=args.event_log,
    )
    export_jsonl(labeled, args.out, require_labels=True)
    report_text = json.dumps(report.to_json_obj(), sort_keys=True)
    if args.report:
        Path(args.report).write_text(report_text, encoding="utf-8")
    print(report_text)
    return EXIT_OK


def cmd_serve(args, cfg, seed) -> int:
    from .labelsvc import LabelService

    service = LabelService(host=args.host, port=args.port, static_dir=args.static_dir,
                           default_seed=seed)
    url = service.start()
    print(f"labeling service listening on {url}")
    try:
        service.join()
    except KeyboardInterrupt:
        service.stop()
    return EXIT_OK


_COMMANDS = {
    "import": cmd_import,
    "prep": cmd_prep,
    "embed": cmd_embed,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "experiment": cmd_experiment,
    "label": cmd_label,
    "serve": cmd_serve,
}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        cfg = _load_config(args.config)
        seed = resolve_seed(args, cfg)
        return _COMMANDS[args.command](args, cfg, seed)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _RUNTIME_ERRORS as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
