"""Trial orchestration and report aggregation."""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from .data import Dataset
from .forest import Forest, InductionConfig, argmax_low, build_forest, derive_rng, tree_votes, vote_scores
from .metrics import score
from .mix import diagnostics_from_shares, mix
from .ser import ser_forest
from .strut import strut_forest
from .synthetic import ChallengeSpec, generate
from .tabular import SplitRule, load_csv, split_by_feature, stratified_sample

ALGORITHMS = ("src_only", "tgt_only", "relabel", "bias", "prune", "ser", "strut", "mix")
DIAGNOSED = ("ser", "strut", "mix")

_SAMPLE_STREAM = 3
_FOREST_STREAM = 4


class TrialError(RuntimeError):
    def __init__(self, trial: int, cause: BaseException) -> None:
        self.trial = trial
        super().__init__(f"trial {trial}: {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "synth"
    challenge: str = "moving"
    data: str | None = None
    label: str | None = None
    categorical: tuple[str, ...] = ()
    split_feature: str | None = None
    split_rule: str = "median"
    target_fraction: float = 0.05
    trials: int = 100
    seed: int = 0
    trees: int = 50
    algorithms: tuple[str, ...] = ("ser", "strut", "mix")
    metric: str = "error"
    workers: int = 1
    target_size: int = 64
    source_size: int | None = None
    test_size: int = 10_000
    diagnostics: bool = False

    def __post_init__(self) -> None:
        if self.mode not in ("synth", "csv"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.target_fraction < 1:
            raise ValueError("target_fraction must lie in (0, 1)")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.metric not in ("error", "ber"):
            raise ValueError(f"unknown metric {self.metric!r}")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ValueError(f"unknown algorithms {sorted(unknown)}")
        if self.mode == "synth":
            ChallengeSpec(self.challenge)
        elif not (self.data and self.label and self.split_feature):
            raise ValueError("csv mode needs data, label and split_feature")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["categorical"] = list(self.categorical)
        d["algorithms"] = list(self.algorithms)
        return d


@dataclass
class TrialResult:
    trial: int
    metrics: dict[str, float]
    millis: dict[str, float]
    diagnostics: dict[str, dict] = field(default_factory=dict)


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, _FOREST_STREAM, trial]).generate_state(1, np.uint32)[0])


def _domains(config: ExperimentConfig, trial: int, split: tuple[Dataset, Dataset] | None):
    if config.mode == "synth":
        spec = ChallengeSpec(
            config.challenge,
            target_size=config.target_size,
            source_size=config.source_size,
            test_size=config.test_size,
            trials=config.trials,
            seed=config.seed,
        )
        inst = generate(spec, trial)
        return inst.source_train, inst.target_train, inst.target_test
    source, target = split
    rng = derive_rng(config.seed, _SAMPLE_STREAM, trial)
    train, test = stratified_sample(target, config.target_fraction, rng)
    return source, train, test


def _timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return out, (time.perf_counter() - t0) * 1000.0


def run_trial(config: ExperimentConfig, trial: int, split=None) -> TrialResult:
    source, target, test = _domains(config, trial, split)
    induction = InductionConfig(tree_count=config.trees, seed=trial_seed(config.seed, trial))
    source_forest = build_forest(source, induction)
    n_classes = source.schema.n_classes

    wanted = set(config.algorithms)
    if "mix" in wanted:
        wanted |= {"ser", "strut"}
    forests: dict[str, Forest] = {}
    millis: dict[str, float] = {}
    transfers = {
        "src_only": lambda: baselines.src_only(source_forest),
        "tgt_only": lambda: baselines.tgt_only(target, induction),
        "relabel": lambda: baselines.relabel(source_forest, target),
        "bias": lambda: baselines.bias(source_forest, target),
        "prune": lambda: baselines.prune(source_forest, target, induction),
        "ser": lambda: ser_forest(source_forest, target, induction),
        "strut": lambda: strut_forest(source_forest, target),
    }
    for name in ALGORITHMS:
        if name in wanted and name != "mix":
            forests[name], millis[name] = _timed(transfers[name])
    if "mix" in wanted:
        forests["mix"], t = _timed(mix, forests["ser"], forests["strut"])
        millis["mix"] = millis["ser"] + millis["strut"] + t

    votes = {k: tree_votes(f, test.X) for k, f in forests.items() if k != "mix"}
    if "mix" in wanted:
        votes["mix"] = np.vstack([votes["ser"], votes["strut"]])
    metrics = {}
    diagnostics = {}
    for name in config.algorithms:
        shares = vote_scores(votes[name], forests[name].weights, n_classes)
        metrics[name] = score(config.metric, argmax_low(shares), test.y, n_classes)
        if config.diagnostics and name in DIAGNOSED and n_classes == 2:
            diagnostics[name] = diagnostics_from_shares(shares, test.y, len(forests[name])).to_dict()
    return TrialResult(trial, metrics, {k: millis[k] for k in config.algorithms}, diagnostics)


def _run_one(args) -> TrialResult:
    config, trial, split = args
    try:
        return run_trial(config, trial, split)
    except Exception as exc:
        raise TrialError(trial, exc) from exc


def _stderr(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(len(values)))


@dataclass
class TransferReport:
    config: ExperimentConfig
    trials: list[TrialResult]

    def values(self, algo: str) -> np.ndarray:
        return np.array([t.metrics[algo] for t in self.trials])

    def mean(self, algo: str) -> float:
        return float(np.mean(self.values(algo)))

    def stderr(self, algo: str) -> float:
        return _stderr(self.values(algo))

    def diagnostic_means(self, algo: str) -> dict[str, float | None]:
        rows = [t.diagnostics[algo] for t in self.trials if algo in t.diagnostics]
        out: dict[str, float | None] = {}
        if not rows:
            return out
        for key in rows[0]:
            vals = [r[key] for r in rows]
            out[key] = None if any(v is None for v in vals) else float(np.mean(vals))
        return out

    def to_dict(self) -> dict:
        """Everything except wall-clock timings, which vary run to run."""
        algos = {}
        for a in self.config.algorithms:
            algos[a] = {
                "mean": self.mean(a),
                "stderr": self.stderr(a),
                "per_trial": self.values(a).tolist(),
            }
            if self.config.diagnostics and a in DIAGNOSED:
                algos[a]["diagnostics"] = self.diagnostic_means(a)
                algos[a]["diagnostics_per_trial"] = [t.diagnostics.get(a) for t in self.trials]
        return {"config": self.config.to_dict(), "metric": self.config.metric, "algorithms": algos}

    def timings(self) -> dict:
        out = {}
        for a in self.config.algorithms:
            ms = np.array([t.millis[a] for t in self.trials])
            out[a] = {"mean_ms": float(ms.mean()), "stderr_ms": _stderr(ms), "per_trial_ms": ms.tolist()}
        return out

    def table(self) -> str:
        lines = [f"{'algorithm':<10} {self.config.metric + ' %':>14} {'transfer ms':>12}"]
        timing = self.timings()
        for a in self.config.algorithms:
            cell = f"{100 * self.mean(a):.1f} ± {100 * self.stderr(a):.1f}"
            lines.append(f"{a:<10} {cell:>14} {timing[a]['mean_ms']:>12.1f}")
        return "\n".join(lines)

    def write(self, directory: str | Path) -> None:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        (out / "timings.json").write_text(json.dumps(self.timings(), indent=2, sort_keys=True) + "\n")
        with open(out / "trials.csv", "w") as fh:
            fh.write("trial," + ",".join(self.config.algorithms) + "\n")
            for t in self.trials:
                fh.write(f"{t.trial}," + ",".join(repr(t.metrics[a]) for a in self.config.algorithms) + "\n")


def load_split(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    data = load_csv(config.data, config.label, config.categorical)
    return split_by_feature(data, SplitRule.parse(config.split_feature, config.split_rule))


def run_experiment(config: ExperimentConfig) -> TransferReport:
    """Run every trial and merge the results in trial order.

    Each trial derives its own seeds from ``(config.seed, trial)``, so the
    metrics do not depend on the worker count.
    """
    split = load_split(config) if config.mode == "csv" else None
    jobs = [(config, t, split) for t in range(config.trials)]
    if config.workers == 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    results.sort(key=lambda r: r.trial)
    return TransferReport(config, results)
