"""Command-line entry point.

Exit status: 0 on success, 1 for usage or configuration errors, 2 when the
input data or a model file cannot be used.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines
from .data import SchemaError
from .experiment import ALGORITHMS, ExperimentConfig, TrialError, run_experiment
from .forest import InductionConfig, build_forest, predict_batch
from .metrics import score
from .mix import ensemble_diagnostics, margin_cdf, mix, write_margin_cdf
from .serialize import ModelFormatError, load, save
from .ser import ser_forest
from .strut import MissingRetainedError, strut_forest
from .synthetic import CHALLENGES
from .tabular import ConfigError, DegenerateSplitError, load_csv

TRANSFER_ALGOS = ("ser", "strut", "mix", "relabel", "bias", "prune")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _names(text: str | None) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip()) if text else ()


def _dump(obj, path: Path | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    sys.stdout.write(text)


def cmd_train(args) -> None:
    if args.trees < 1:
        raise UsageError("--trees must be at least 1")
    data = load_csv(args.data, args.label, _names(args.categorical))
    config = InductionConfig(tree_count=args.trees, seed=args.seed, max_depth=args.max_depth)
    forest = build_forest(data, config)
    save(forest, args.out)
    print(f"trained {len(forest)} trees on {len(data)} rows -> {args.out}")


def cmd_transfer(args) -> None:
    source = load(args.model)
    target = load_csv(args.data, schema=source.schema)
    config = InductionConfig(tree_count=len(source), seed=args.seed)
    algo = args.algo
    if algo == "ser":
        out = ser_forest(source, target, config)
    elif algo == "strut":
        out = strut_forest(source, target)
    elif algo == "mix":
        out = mix(ser_forest(source, target, config), strut_forest(source, target))
    elif algo == "relabel":
        out = baselines.relabel(source, target)
    elif algo == "bias":
        out = baselines.bias(source, target)
    else:
        out = baselines.prune(source, target, config)
    save(out, args.out)
    print(f"{algo}: {len(out)} trees -> {args.out}")


def cmd_evaluate(args) -> None:
    forest = load(args.model)
    data = load_csv(args.data, schema=forest.schema)
    if len(data) == 0:
        raise SchemaError("no rows to evaluate")
    pred, _ = predict_batch(forest, data.X)
    result = {
        "metric": args.metric,
        "value": score(args.metric, pred, data.y, forest.schema.n_classes),
        "n": len(data),
        "provenance": forest.provenance,
    }
    _dump(result, Path(args.out) / "metrics.json" if args.out else None)


def cmd_diagnostics(args) -> None:
    a, b = load(args.model_a), load(args.model_b)
    if a.schema != b.schema:
        raise SchemaError("the two models have different schemas")
    data = load_csv(args.data, schema=a.schema)
    if len(data) == 0:
        raise SchemaError("no rows to evaluate")
    forests = {"a": a, "b": b, "mix": mix(a, b)}
    result = {k: ensemble_diagnostics(f, data, args.one_vs_rest).to_dict() for k, f in forests.items()}
    out = Path(args.out) if args.out else None
    _dump(result, out / "diagnostics.json" if out else None)
    if out is not None and forests["a"].schema.n_classes == 2:
        for filt in ("all", "disagree"):
            for name, table in zip(forests, margin_cdf(list(forests.values()), data, filt)):
                write_margin_cdf(table, out / f"margin_cdf_{name}_{filt}.csv")


def _bench(args, **fields) -> None:
    algos = _names(args.algos) or ("ser", "strut", "mix")
    common = dict(
        trials=args.trials,
        seed=args.seed,
        trees=args.trees,
        algorithms=algos,
        metric=args.metric,
        workers=args.workers,
        diagnostics=args.diagnostics,
    )
    try:
        config = ExperimentConfig(**common, **fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = run_experiment(config)
    title = config.challenge if config.mode == "synth" else Path(config.data).name
    print(f"# {title} ({config.trials} trials, seed {config.seed})")
    print(report.table())
    if args.out:
        out = Path(args.out)
        report.write(out / title if getattr(args, "nest", False) else out)


def cmd_synth_bench(args) -> None:
    names = CHALLENGES if args.challenge == "all" else (args.challenge,)
    args.nest = len(names) > 1
    for name in names:
        _bench(
            args,
            mode="synth",
            challenge=name,
            target_size=args.target_size,
            test_size=args.test_size,
        )


def cmd_csv_bench(args) -> None:
    _bench(
        args,
        mode="csv",
        data=args.data,
        label=args.label,
        categorical=_names(args.categorical),
        split_feature=args.split_feature,
        split_rule=args.split_rule,
        target_fraction=args.target_fraction,
    )


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="treetransfer", description="Decision-forest model transfer benchmarks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a source forest from a CSV file")
    t.add_argument("--data", required=True)
    t.add_argument("--label", required=True)
    t.add_argument("--categorical", help="comma-separated categorical columns")
    t.add_argument("--trees", type=int, default=50)
    t.add_argument("--max-depth", type=int)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="model file to write")
    t.set_defaults(func=cmd_train)

    t = sub.add_parser("transfer", help="adapt a model to target samples")
    t.add_argument("--model", required=True)
    t.add_argument("--data", required=True, help="target CSV with the model's columns")
    t.add_argument("--algo", choices=TRANSFER_ALGOS, required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True, help="model file to write")
    t.set_defaults(func=cmd_transfer)

    t = sub.add_parser("evaluate", help="score a model on a CSV file")
    t.add_argument("--model", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--metric", choices=("error", "ber"), default="error")
    t.add_argument("--out", help="directory for metrics.json")
    t.set_defaults(func=cmd_evaluate)

    t = sub.add_parser("diagnostics", help="majority-vote diagnostics of two models and their mix")
    t.add_argument("--model-a", required=True)
    t.add_argument("--model-b", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--one-vs-rest", action="store_true")
    t.add_argument("--out", help="directory for diagnostics.json and margin CDF files")
    t.set_defaults(func=cmd_diagnostics)

    def bench_flags(q):
        q.add_argument("--trials", type=int, default=100)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--trees", type=int, default=50)
        q.add_argument("--algos", help=f"comma-separated subset of {','.join(ALGORITHMS)}")
        q.add_argument("--metric", choices=("error", "ber"), default="error")
        q.add_argument("--workers", type=int, default=1)
        q.add_argument("--diagnostics", action="store_true")
        q.add_argument("--out", help="output directory")

    t = sub.add_parser("synth-bench", help="run a synthetic challenge")
    t.add_argument("--challenge", required=True, choices=CHALLENGES + ("all",))
    t.add_argument("--target-size", type=int, default=64)
    t.add_argument("--test-size", type=int, default=10_000)
    bench_flags(t)
    t.set_defaults(func=cmd_synth_bench)

    t = sub.add_parser("csv-bench", help="run a split-domain benchmark on a CSV dataset")
    t.add_argument("--data", required=True)
    t.add_argument("--label", required=True)
    t.add_argument("--categorical")
    t.add_argument("--split-feature", required=True)
    t.add_argument("--split-rule", default="median", help="median, class_median, value:V or threshold:T")
    t.add_argument("--target-fraction", type=float, default=0.05)
    bench_flags(t)
    t.set_defaults(func=cmd_csv_bench)
    return p


DATA_ERRORS = (
    SchemaError,
    ModelFormatError,
    DegenerateSplitError,
    MissingRetainedError,
    TrialError,
    OSError,
)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (*DATA_ERRORS, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
