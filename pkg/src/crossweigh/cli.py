"""Command-line entry point.

Exit codes: 0 success, 2 I/O error, 3 validation error, 4 infeasible
estimation (a fold lost all training sentences to entity-disjoint filtering).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus import Corpus, CorpusError, WeightVector, concat, parse_conll, read_weights, \
    write_tag_sequences, write_weights
from .evaluation import NoiseKind, NoiseSpec, entity_f1, inject_noise, read_indices, write_indices
from .framework import CrossWeighConfig, DisjointMode, Heuristic, InfeasibleFoldError, audit
from .tagger import TrainConfig, load_model, predict_corpus, save_model, train

log = logging.getLogger("crossweigh")

EXIT_IO, EXIT_INVALID, EXIT_INFEASIBLE = 2, 3, 4


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CLIError(f"cannot read {path}: {e.strerror}", EXIT_IO) from None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise CLIError(f"cannot write {path}: {e.strerror}", EXIT_IO) from None


def _load_corpus(path: str, args) -> Corpus:
    return parse_conll(_read(path), args.tag_column, args.scheme)


def _digest(path: str) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as e:
        raise CLIError(f"cannot read {path}: {e.strerror}", EXIT_IO) from None


def _manifest(command: str, args, inputs: list[str | None]) -> str:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    data = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": {p: _digest(p) for p in inputs if p},
    }
    return json.dumps(data, indent=2, sort_keys=True, default=str) + "\n"


def _train_config(args) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, shuffle_seed=args.seed, averaging=not args.no_averaging)


def _score(gold: Corpus, model) -> float:
    return entity_f1(gold, predict_corpus(model, gold)).f1


def cmd_train(args) -> None:
    corpus = _load_corpus(args.train, args)
    weights = read_weights(_read(args.weights)) if args.weights else WeightVector.uniform(len(corpus))
    if len(weights) != len(corpus):
        raise CLIError(f"{len(weights)} weights for {len(corpus)} sentences", EXIT_INVALID)
    model = train(corpus, weights, _train_config(args))
    out = Path(args.out_dir)
    _write(out / "model.txt", save_model(model))
    _write(out / "manifest.json", _manifest("train", args, [args.train, args.weights, args.test]))
    if args.test:
        print(f"test.f1={_score(_load_corpus(args.test, args), model):.6f}")


def _estimation_corpus(args) -> Corpus:
    corpus = _load_corpus(args.train, args)
    if getattr(args, "dev", None) and not args.exclude_dev:
        corpus = concat(corpus, _load_corpus(args.dev, args))
    return corpus


def _cw_config(args) -> CrossWeighConfig:
    return CrossWeighConfig(k=args.k, t=args.t, epsilon=args.epsilon, heuristic=args.heuristic,
                            entity_disjoint=args.mode, seed=args.seed)


def cmd_crossweigh(args) -> None:
    corpus = _estimation_corpus(args)
    truth = read_indices(_read(args.truth)) if args.truth else None
    tc = _train_config(args)
    report = audit(corpus, _cw_config(args), truth, tc, jobs=args.jobs)
    model = train(corpus, report.weights, tc)
    out = Path(args.out_dir)
    _write(out / "weights.txt", write_weights(report.weights))
    _write(out / "report.txt", report.to_text())
    _write(out / "model.txt", save_model(model))
    _write(out / "manifest.json", _manifest("crossweigh", args, [args.train, args.dev, args.test, args.truth]))
    print(f"flagged={len(report.flagged)} sentences={len(corpus)}")
    if report.detection is not None:
        d = report.detection
        print(f"detection.precision={d.precision:.4f} detection.recall={d.recall:.4f} detection.f1={d.f1:.4f}")
    if args.test:
        test = _load_corpus(args.test, args)
        f1 = _score(test, model)
        if args.compare_baseline:
            base = _score(test, train(corpus, None, tc))
            print(f"baseline.f1={base:.6f}")
        print(f"crossweigh.f1={f1:.6f}")


def cmd_audit(args) -> None:
    corpus = _estimation_corpus(args)
    truth = read_indices(_read(args.truth)) if args.truth else None
    report = audit(corpus, _cw_config(args), truth, _train_config(args), jobs=args.jobs)
    out = Path(args.out_dir)
    _write(out / "report.txt", report.to_text())
    _write(out / "manifest.json", _manifest("audit", args, [args.train, args.dev, args.truth]))
    print(f"flagged={len(report.flagged)} sentences={len(corpus)}")
    if report.detection is not None:
        d = report.detection
        print(f"detection.precision={d.precision:.4f} detection.recall={d.recall:.4f} detection.f1={d.f1:.4f}")


def cmd_inject_noise(args) -> None:
    if not 0.0 < args.rate < 1.0:
        raise CLIError(f"--rate must lie in (0, 1), got {args.rate}", EXIT_INVALID)
    corpus = _load_corpus(args.path, args)
    kinds = frozenset(NoiseKind(k) for k in args.kinds.split(","))
    noisy, truth = inject_noise(corpus, NoiseSpec(args.rate, kinds, args.seed, args.surface_consistency))
    out = Path(args.out_dir)
    _write(out / "noisy.conll", write_tag_sequences(noisy, [s.tags for s in noisy]))
    _write(out / "truth.txt", write_indices(truth))
    _write(out / "manifest.json", _manifest("inject-noise", args, [args.path]))
    print(f"corrupted={len(truth)} sentences={len(corpus)}")


def cmd_predict(args) -> None:
    corpus = _load_corpus(args.path, args)
    try:
        model = load_model(_read(args.model))
    except ValueError as e:
        raise CLIError(f"{args.model}: {e}", EXIT_INVALID) from None
    text = write_tag_sequences(corpus, predict_corpus(model, corpus))
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)


def cmd_evaluate(args) -> None:
    gold = _load_corpus(args.gold, args)
    pred = parse_conll(_read(args.pred), args.tag_column, "IOB1")
    if len(gold) != len(pred) or any(g.words != p.words for g, p in zip(gold, pred)):
        raise CLIError("gold and prediction files are not aligned", EXIT_INVALID)
    text = entity_f1(gold, [p.tags for p in pred]).to_text()
    if args.out:
        _write(Path(args.out), text)
    sys.stdout.write(text)


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(_read(path).splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CLIError(f"{path}:{lineno}: expected key=value", EXIT_INVALID)
        key, value = (x.strip() for x in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; explicit flags override it")
    common.add_argument("--tag-column", type=int, default=-1, help="tag column (default: last)")
    common.add_argument("--scheme", choices=["BIO", "IOB1"], default="BIO", help="tag encoding of input files")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    training = argparse.ArgumentParser(add_help=False)
    training.add_argument("--epochs", type=int, default=5)
    training.add_argument("--no-averaging", action="store_true")

    estimation = argparse.ArgumentParser(add_help=False)
    estimation.add_argument("--dev", help="dev corpus, concatenated before partitioning")
    estimation.add_argument("--exclude-dev", action="store_true", help="ignore --dev for estimation")
    estimation.add_argument("-k", type=int, default=10, help="number of folds")
    estimation.add_argument("-t", type=int, default=3, help="estimation iterations")
    estimation.add_argument("--epsilon", type=float, default=0.7)
    estimation.add_argument("--heuristic", choices=[h.value for h in Heuristic], default="ratio")
    estimation.add_argument("--mode", choices=[m.value for m in DisjointMode], default="on")
    estimation.add_argument("--truth", help="file of known-mistake sentence indices, one per line")
    estimation.add_argument("--jobs", type=int, default=1, help="concurrent fold trainings")

    parser = argparse.ArgumentParser(prog="crossweigh",
                                     description="Label-mistake estimation and reweighing for NER corpora.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common, training], help="train a tagger")
    p.add_argument("train")
    p.add_argument("--weights", help="weights sidecar, one per sentence (default: all 1)")
    p.add_argument("--test")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossweigh", parents=[common, training, estimation],
                       help="estimate mistakes, reweigh, train the final model")
    p.add_argument("train")
    p.add_argument("--test")
    p.add_argument("--compare-baseline", action="store_true")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_crossweigh)

    p = sub.add_parser("audit", parents=[common, training, estimation], help="mistake estimation report only")
    p.add_argument("train")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("inject-noise", parents=[common], help="corrupt a corpus with known ground truth")
    p.add_argument("path")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--kinds", default=",".join(k.value for k in NoiseKind))
    p.add_argument("--surface-consistency", type=float, default=0.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_inject_noise)

    p = sub.add_parser("predict", parents=[common], help="tag a corpus with a saved model")
    p.add_argument("model")
    p.add_argument("path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="entity-level P/R/F1")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            sub = parser._subparsers._group_actions[0].choices[args.command]
            known = {a.dest: a for a in sub._actions}
            overrides = {}
            for key, value in _read_config_file(args.config).items():
                if key not in known:
                    raise CLIError(f"{args.config}: unknown option {key!r}", EXIT_INVALID)
                action = known[key]
                overrides[key] = value.lower() in ("1", "true", "yes") if action.nargs == 0 else \
                    (action.type or str)(value)
            sub.set_defaults(**overrides)
            args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except CLIError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except InfeasibleFoldError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CorpusError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
