"""Nearest-neighbor classification and the Monte Carlo experiment harness.

The classification rule scores a test sentence against every training
sentence and succeeds iff every score-maximizing training sentence carries
the test's category; a tie that includes a wrong-label point is a failure.
The perturbed similarity kinds break all ties deterministically, so for them
the argmax is unique almost surely.

Trials are independent streams of one master seed, so a parallel run is
bit-identical to a serial one.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .datamodel import (
    ModelParams,
    Task,
    TrainingSet,
    make_rng,
    sample_task,
    sample_test_set,
    sample_training_set,
)
from .graphkernel import (
    epsilon_matrix,
    kernel_table,
    kstar_rank_matrix,
    kstar_value_matrix,
    match_count_matrix,
    perturbed_rank_matrix,
)

SIM_KINDS = (
    "one-hot",
    "one-hot-normalized",
    "one-hot-perturbed",
    "optimal",
    "optimal-perturbed",
    "concept",
    "learned",
)


@dataclass(frozen=True)
class SimilaritySpec:
    """Which similarity the nearest-neighbor rule scores with.

    ``concept`` uses the task's own equipartition (an oracle-access
    baseline); ``learned`` scores by inner products of network features and
    needs either ``net`` or a trainer config in the harness.
    """

    kind: str
    seed: int = 0
    net: object | None = None

    def __post_init__(self) -> None:
        if self.kind not in SIM_KINDS:
            raise ValueError(f"unknown similarity kind {self.kind!r}; expected one of {SIM_KINDS}")


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated success counts over independent trials."""

    trials: int
    tests_total: int
    successes: int
    success_rate: float
    std_error: float
    per_trial_rates: tuple[float, ...]


def _aggregate(per_trial: list[tuple[int, int]]) -> ExperimentResult:
    successes = sum(s for s, _ in per_trial)
    tests_total = sum(n for _, n in per_trial)
    rates = tuple(s / n for s, n in per_trial)
    trials = len(per_trial)
    if trials > 1:
        std_error = float(np.std(rates, ddof=1) / np.sqrt(trials))
    else:
        std_error = float("nan")
    return ExperimentResult(
        trials=trials,
        tests_total=tests_total,
        successes=successes,
        success_rate=successes / tests_total,
        std_error=std_error,
        per_trial_rates=rates,
    )


def nn_classify(
    test: np.ndarray,
    train: TrainingSet,
    sim: Callable[[np.ndarray, np.ndarray], float],
    true_label: int,
) -> bool:
    """Score ``test`` against every training sentence with ``sim``; succeed
    iff every maximizer has the true label."""
    X, labels, _ = train.flat()
    scores = np.array([sim(test, X[i]) for i in range(X.shape[0])], dtype=np.float64)
    top = scores.max()
    winners = labels[scores == top]
    return bool(np.all(winners == true_label))


def classify_matrix(
    sims: np.ndarray, train_labels: np.ndarray, test_labels: np.ndarray
) -> int:
    """Number of test rows whose maximizers all carry the row's true label."""
    top = sims.max(axis=1, keepdims=True)
    at_top = sims == top
    wrong = at_top & (train_labels[None, :] != test_labels[:, None])
    return int((~wrong.any(axis=1)).sum())


def similarity_matrix(
    spec: SimilaritySpec,
    tests: np.ndarray,
    train_X: np.ndarray,
    task: Task,
    params: ModelParams,
) -> np.ndarray:
    """Test-by-train score matrix for the requested similarity kind."""
    if spec.kind == "one-hot":
        return match_count_matrix(tests, train_X)
    if spec.kind == "one-hot-normalized":
        # normalized features shift every inner product by the same positive
        # affine map of the match count
        p = 1.0 / params.n_w
        return (match_count_matrix(tests, train_X) - params.L * p) / (p * (1.0 - p))
    if spec.kind == "one-hot-perturbed":
        return match_count_matrix(tests, train_X) + epsilon_matrix(
            tests, train_X, params.L, spec.seed
        )
    if spec.kind == "optimal":
        table = kernel_table(params.L, params.n_w, params.n_c)
        if table.float_faithful:
            return kstar_value_matrix(tests, train_X, params)
        return kstar_rank_matrix(tests, train_X, params)
    if spec.kind == "optimal-perturbed":
        return perturbed_rank_matrix(tests, train_X, params, spec.seed)
    if spec.kind == "concept":
        phi = task.phi
        return match_count_matrix(phi.concepts_of(tests), phi.concepts_of(train_X))
    if spec.kind == "learned":
        if spec.net is None:
            raise ValueError("learned similarity requires a trained network")
        from .neuralnet import features_batch

        F_test = features_batch(spec.net, tests)
        F_train = features_batch(spec.net, train_X)
        return F_test @ F_train.T
    raise ValueError(f"unknown similarity kind {spec.kind!r}")


def _limit_blas_threads() -> None:
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=1)
    except Exception:
        pass


def _run_trial(args) -> tuple[int, int]:
    params, spec, seed, trial, tests_per_category, nn_config, limit_threads = args
    if limit_threads:
        _limit_blas_threads()
    rng = make_rng(seed, 0, trial)
    task = sample_task(params, rng)
    train = sample_training_set(task, params, rng)
    tests, test_labels = sample_test_set(task, tests_per_category, rng)
    train_X, train_labels, _ = train.flat()
    if spec.kind == "learned" and spec.net is None:
        from .neuralnet import NetworkConfig, train_network

        cfg = nn_config or NetworkConfig.for_params(params)
        net, _ = train_network(train, cfg, make_rng(seed, 1, trial))
        spec = SimilaritySpec(kind="learned", seed=spec.seed, net=net)
    sims = similarity_matrix(spec, tests, train_X, task, params)
    successes = classify_matrix(sims, train_labels, test_labels)
    return successes, tests.shape[0]


def run_experiment(
    params: ModelParams,
    spec: SimilaritySpec,
    trials: int,
    tests_per_category: int = 1,
    seed: int = 0,
    threads: int = 1,
    nn_config=None,
) -> ExperimentResult:
    """Estimate the success rate of the nearest-neighbor rule on unfamiliar
    test sentences.

    Each trial samples a fresh task and training set, then
    ``tests_per_category`` unfamiliar sentences per category; outcomes
    aggregate across trials. Identical (params, spec, trials, seed) give a
    bit-identical result regardless of ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    est_bytes = 8 * params.R * tests_per_category * params.R * params.n_spl
    if est_bytes > 16 * 2**30:
        raise MemoryError(
            f"similarity matrix would need ~{est_bytes / 2**30:.0f} GiB; "
            "reduce tests_per_category or the category count"
        )
    jobs = [
        (params, spec, seed, trial, tests_per_category, nn_config, threads > 1)
        for trial in range(trials)
    ]
    if threads > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(threads, trials)) as pool:
            per_trial = list(pool.map(_run_trial, jobs))
    else:
        per_trial = [_run_trial(job) for job in jobs]
    return _aggregate(per_trial)


def _run_learned_trial(args) -> tuple[int, int, int]:
    params, seed, trial, tests_per_category, nn_config, limit_threads = args
    if limit_threads:
        _limit_blas_threads()
    from .neuralnet import NetworkConfig, evaluate_accuracy, train_network

    rng = make_rng(seed, 0, trial)
    task = sample_task(params, rng)
    train = sample_training_set(task, params, rng)
    tests, test_labels = sample_test_set(task, tests_per_category, rng)
    train_X, train_labels, _ = train.flat()
    cfg = nn_config or NetworkConfig.for_params(params)
    net, _ = train_network(train, cfg, make_rng(seed, 1, trial))
    net_correct = int(round(evaluate_accuracy(net, tests, test_labels) * tests.shape[0]))
    spec = SimilaritySpec(kind="learned", net=net)
    sims = similarity_matrix(spec, tests, train_X, task, params)
    feat_correct = classify_matrix(sims, train_labels, test_labels)
    return net_correct, feat_correct, tests.shape[0]


def run_learned_experiment(
    params: ModelParams,
    trials: int,
    tests_per_category: int = 10,
    seed: int = 0,
    threads: int = 1,
    nn_config=None,
) -> tuple[ExperimentResult, ExperimentResult]:
    """Train one network per trial and evaluate both read-outs on the same
    unfamiliar tests: the network's own argmax, and nearest neighbor on its
    extracted features. Returns (network result, feature-NN result)."""
    jobs = [
        (params, seed, trial, tests_per_category, nn_config, threads > 1)
        for trial in range(trials)
    ]
    if threads > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(threads, trials)) as pool:
            rows = list(pool.map(_run_learned_trial, jobs))
    else:
        rows = [_run_learned_trial(job) for job in jobs]
    net_result = _aggregate([(n, t) for n, _, t in rows])
    feat_result = _aggregate([(f, t) for _, f, t in rows])
    return net_result, feat_result
