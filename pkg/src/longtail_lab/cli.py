"""Command-line workbench: bound evaluation, Monte Carlo experiments,
network training, oracle checks, and dataset dumps.

Configuration is one flat JSON document; command-line flags override file
values. Every emitted CSV embeds the full configuration and master seed as a
comment row, so any result row is reproducible from its own file.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .bounds import BoundReport, best_ell, error_lower_bound
from .datamodel import (
    ModelParams,
    make_rng,
    sample_task,
    sample_training_set,
    sample_test_set,
    validate_params,
    write_training_set,
)
from .evaluator import ExperimentResult, SimilaritySpec, run_experiment

MODES = ("bound", "experiment", "train-nn", "oracle", "gen-data")

_CSV_HEADER = (
    "method,n_star,n_spl,trials,tests,success_rate,std_error,bound,seed,wall_time_s"
)


@dataclass(frozen=True)
class RunConfig:
    """One run of the workbench; flat key set mirroring the JSON document."""

    mode: str
    L: int = 9
    n_w: int = 150
    n_c: int = 5
    R: int = 1000
    n_spl: int = 6
    n_star: int = 1
    feature: str = "one-hot"
    trials: int = 20
    tests_per_category: int = 1
    ell: int | None = None
    seed: int = 0
    threads: int | None = None
    out: str | None = None
    nn: dict | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")

    def params(self) -> ModelParams:
        return validate_params(
            L=self.L, n_w=self.n_w, n_c=self.n_c, R=self.R,
            n_spl=self.n_spl, n_star=self.n_star,
        )

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "mode" not in data:
            raise ValueError("config must set 'mode'")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


def _fmt(value: float | Fraction | None) -> str:
    if value is None:
        return ""
    return f"{float(value):.15g}"


def emit_table(
    rows: Sequence[tuple[str, ExperimentResult | BoundReport, float]],
    path: str,
    config: RunConfig,
) -> None:
    """Write result rows as CSV: comma separators, '.' decimals, LF endings,
    UTF-8; one metadata comment line carries the full config and seed."""
    with open(path, "w", encoding="utf-8", newline="\n") as fp:
        fp.write(f"# config={json.dumps(dataclasses.asdict(config), sort_keys=True)}\n")
        fp.write(_CSV_HEADER + "\n")
        for method, result, wall in rows:
            if isinstance(result, BoundReport):
                fp.write(
                    f"bound:{method},{result.n_star},{result.params.n_spl},,,"
                    f",,{_fmt(result.error_lower_float)},{config.seed},{wall:.3f}\n"
                )
            else:
                fp.write(
                    f"{method},{config.n_star},{config.n_spl},{result.trials},"
                    f"{result.tests_total},{_fmt(result.success_rate)},"
                    f"{_fmt(result.std_error)},,{config.seed},{wall:.3f}\n"
                )


def _threads(config: RunConfig) -> int:
    if config.threads is not None:
        return config.threads
    env = os.environ.get("LONGTAIL_LAB_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def _mode_bound(config: RunConfig) -> int:
    params = config.params()
    t0 = time.time()
    if config.ell is not None:
        report = error_lower_bound(params, config.ell, config.n_star)
    else:
        report = best_ell(params, config.n_star)
    wall = time.time() - t0
    print(f"ell                 : {report.ell} (of 0..{params.L})")
    print(f"signatures          : {report.signature_count}")
    print(f"moment bound (c)    : {_fmt(float(report.moment_bound))}")
    print(f"success upper bound : {_fmt(report.success_upper_float)}")
    print(f"error lower bound   : {_fmt(report.error_lower_float)}")
    print(f"exact error bound   : {report.error_lower}")
    print(f"wall time           : {wall:.2f}s")
    if config.out:
        emit_table([(f"ell={report.ell}", report, wall)], config.out, config)
        print(f"wrote {config.out}")
    return 0


def _mode_experiment(config: RunConfig) -> int:
    params = config.params()
    spec = SimilaritySpec(kind=config.feature, seed=config.seed)
    nn_config = None
    if config.feature == "learned":
        from .neuralnet import NetworkConfig

        nn_config = NetworkConfig.for_params(params, **(config.nn or {}))
    t0 = time.time()
    result = run_experiment(
        params,
        spec,
        trials=config.trials,
        tests_per_category=config.tests_per_category,
        seed=config.seed,
        threads=_threads(config),
        nn_config=nn_config,
    )
    wall = time.time() - t0
    print(f"feature      : {config.feature}")
    print(f"trials       : {result.trials} x {result.tests_total // result.trials} tests")
    print(f"success rate : {result.success_rate:.6f} +/- {result.std_error:.6f}")
    print(f"wall time    : {wall:.1f}s")
    if config.out:
        emit_table([(config.feature, result, wall)], config.out, config)
        print(f"wrote {config.out}")
    return 0


def _mode_train_nn(config: RunConfig) -> int:
    from .neuralnet import (
        NetworkConfig,
        evaluate_accuracy,
        save_checkpoint,
        train_network,
    )
    from .evaluator import classify_matrix, similarity_matrix

    params = config.params()
    cfg = NetworkConfig.for_params(params, **(config.nn or {}))
    rng = make_rng(config.seed, 0, 0)
    task = sample_task(params, rng)
    train = sample_training_set(task, params, rng)
    t0 = time.time()
    net, log = train_network(train, cfg, make_rng(config.seed, 1, 0))
    wall = time.time() - t0
    tests, labels = sample_test_set(task, config.tests_per_category, rng)
    acc = evaluate_accuracy(net, tests, labels)
    train_X, train_labels, _ = train.flat()
    sims = similarity_matrix(
        SimilaritySpec(kind="learned", net=net), tests, train_X, task, params
    )
    feat_rate = classify_matrix(sims, train_labels, labels) / tests.shape[0]
    print(f"epochs        : {log.epochs} (converged: {log.converged})")
    print(f"final loss    : {log.epoch_losses[-1]:.3e}")
    print(f"net accuracy  : {acc:.4f} on {tests.shape[0]} unfamiliar tests")
    print(f"feature-NN    : {feat_rate:.4f}")
    print(f"wall time     : {wall:.1f}s")
    if config.out:
        save_checkpoint(net, config.out)
        print(f"wrote {config.out}")
    return 0


def _mode_oracle(config: RunConfig) -> int:
    from .graphkernel import kstar
    from .oracle import (
        build_universe,
        exact_avg_moment,
        kstar_row_direct,
        verify_beautiful,
        verify_structure_counts,
    )

    params = config.params()
    try:
        universe = build_universe(params)
    except ValueError:
        # configured params exceed brute-force caps: use the standard tiny instance
        params = ModelParams(L=2, n_w=4, n_c=2, R=10, n_spl=2)
        universe = build_universe(params)
        print(f"configured universe too large; checking L={params.L}, n_w={params.n_w}, n_c={params.n_c}")
    failures = []

    kernel_ok = True
    rows_ok = True
    for i in range(universe.size):
        row = kstar_row_direct(i, universe)
        if sum(row, Fraction(0)) != 1:
            rows_ok = False
        for j in range(universe.size):
            if row[j] != kstar(universe.sentences[i], universe.sentences[j], params):
                kernel_ok = False
    print(f"kernel equality on {universe.size}^2 pairs : {'pass' if kernel_ok else 'FAIL'}")
    print(f"kernel rows sum to one                : {'pass' if rows_ok else 'FAIL'}")
    if not kernel_ok:
        failures.append("kernel equality")
    if not rows_ok:
        failures.append("row sums")

    structure = verify_structure_counts(universe)
    print(
        f"structure counts ({structure.pairs} pairs, {structure.graphs} graphs)"
        f" : {'pass' if structure.passed else 'FAIL'}"
    )
    if not structure.passed:
        failures.append("structure counts")

    report = verify_beautiful(universe, t=3, mc_trials=max(config.trials, 1) * 10_000, seed=config.seed)
    print(
        f"matching success vs exact moment (t=3): estimate {report.estimate:.5f}"
        f" exact {float(report.exact):.5f} z={report.z_score:+.2f}"
        f" : {'pass' if report.passed else 'FAIL'}"
    )
    if not report.passed:
        failures.append("moment equality")

    print(f"exact averaged moment t=3 = {exact_avg_moment(universe, 3)}")
    if failures:
        print(f"FAILED: {', '.join(failures)}")
        return 1
    print("all oracle checks passed")
    return 0


def _mode_gen_data(config: RunConfig) -> int:
    params = config.params()
    rng = make_rng(config.seed, 0, 0)
    task = sample_task(params, rng)
    train = sample_training_set(task, params, rng)
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="\n") as fp:
            fp.write(f"# config={json.dumps(dataclasses.asdict(config), sort_keys=True)}\n")
            write_training_set(train, fp)
        print(f"wrote {config.out} ({params.R * params.n_spl} sentences)")
    else:
        write_training_set(train, sys.stdout)
    return 0


_DISPATCH = {
    "bound": _mode_bound,
    "experiment": _mode_experiment,
    "train-nn": _mode_train_nn,
    "oracle": _mode_oracle,
    "gen-data": _mode_gen_data,
}


def run(config: RunConfig) -> int:
    """Dispatch one configured run; returns the process exit status."""
    return _DISPATCH[config.mode](config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longtail-lab",
        description="Exact bounds and Monte Carlo experiments for the long-tailed concept-sequence data model.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", help="JSON config file (flags override file values)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int, help="worker pool size (env LONGTAIL_LAB_THREADS as fallback)")
    parser.add_argument("--out", help="output path (CSV, checkpoint, or dataset)")
    parser.add_argument("--ell", type=int, help="signature-family cutoff; omit to sweep")
    parser.add_argument("--n-star", type=int, dest="n_star")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--feature", choices=(
        "one-hot", "one-hot-normalized", "one-hot-perturbed",
        "optimal", "optimal-perturbed", "concept", "learned",
    ))
    parser.add_argument("--tests-per-category", type=int, dest="tests_per_category")
    parser.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    data: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fp:
                data = json.load(fp)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 2
    data["mode"] = args.mode
    for key in ("seed", "threads", "out", "ell", "n_star", "trials", "feature", "tests_per_category"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    try:
        config = RunConfig.from_dict(data)
        config.params()
    except (TypeError, ValueError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        print(config.to_json())
        return 0
    try:
        return run(config)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
