"""Denoising metrics, test-set evaluation, method comparison with paired
significance tests, and the k-shot sweep.

PSNR is 10*log10(max^2 / MSE); SNR is 10*log10(reference energy / residual
energy). A zero-error result returns the exact-match sentinel (+inf), which
report rendering shows as "exact". Comparisons pair per-test-sample metrics
within matched seeds, so every method is scored on identical data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import DimensionError
from .nets import DenoiserModel, NetworkSpec, forward, init_params
from .rng import RngStream
from .stats import TTestResult, paired_t_test_one_tailed
from .tasks import PairedSet, RealSplit, TaskDistribution, split_real
from .training import MetaConfig, fine_tune, meta_train, train_supervised

EXACT_MATCH = math.inf

METHOD_NAMES = ("supervised", "transfer", "meta")


def psnr(estimate: np.ndarray, reference: np.ndarray, max_val: float) -> float:
    """Peak signal-to-noise ratio in dB; EXACT_MATCH sentinel at zero MSE."""
    if max_val <= 0:
        raise ValueError(f"max_val must be positive, got {max_val}")
    estimate = np.asarray(estimate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if estimate.shape != reference.shape:
        raise DimensionError(f"shapes differ: {estimate.shape} vs {reference.shape}")
    mse = float(np.mean((estimate - reference) ** 2))
    if mse == 0.0:
        return EXACT_MATCH
    return 10.0 * math.log10(max_val * max_val / mse)


def snr(estimate: np.ndarray, reference: np.ndarray) -> float:
    """Signal-to-noise ratio in dB: reference energy over residual energy."""
    estimate = np.asarray(estimate, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if estimate.shape != reference.shape:
        raise DimensionError(f"shapes differ: {estimate.shape} vs {reference.shape}")
    signal_energy = float(np.sum(reference * reference))
    if signal_energy == 0.0:
        raise ValueError("SNR undefined for an all-zero reference")
    residual_energy = float(np.sum((estimate - reference) ** 2))
    if residual_energy == 0.0:
        return EXACT_MATCH
    return 10.0 * math.log10(signal_energy / residual_energy)


def metric_fn(name: str, max_val: float = 1.0) -> Callable[[np.ndarray, np.ndarray], float]:
    if name == "psnr":
        return lambda est, ref: psnr(est, ref, max_val)
    if name == "snr":
        return snr
    raise ValueError(f"unknown metric {name!r} (expected psnr or snr)")


@dataclass(frozen=True)
class MetricResult:
    """Per-sample metric values (dB) with their aggregates."""

    values: tuple[float, ...]
    mean: float
    sd: float
    count: int

    @staticmethod
    def from_values(values: Iterable[float]) -> "MetricResult":
        values = tuple(float(v) for v in values)
        if not values:
            raise ValueError("metric result needs at least one value")
        arr = np.asarray(values)
        # exact-match sentinels (inf) dominate the mean; spread is reported
        # as 0 for them since inf - inf is undefined
        if len(values) > 1 and np.all(np.isfinite(arr)):
            sd = float(np.std(arr, ddof=1))
        else:
            sd = 0.0
        return MetricResult(values=values, mean=float(np.mean(arr)), sd=sd, count=len(values))


def evaluate_on_test(
    model: DenoiserModel, split: RealSplit, metric: str, max_val: float = 1.0
) -> MetricResult:
    """Per-sample metric of the model's output against the clean test
    reference."""
    if len(split.test) == 0:
        raise ValueError("test set is empty")
    score = metric_fn(metric, max_val)
    values = [
        score(forward(model, noisy), clean)
        for noisy, clean in zip(split.test.noisy, split.test.clean)
    ]
    return MetricResult.from_values(values)


def initial_noise_result(split: RealSplit, metric: str, max_val: float = 1.0) -> MetricResult:
    """The metric of the noisy inputs themselves (no denoising)."""
    if len(split.test) == 0:
        raise ValueError("test set is empty")
    score = metric_fn(metric, max_val)
    values = [score(noisy, clean) for noisy, clean in zip(split.test.noisy, split.test.clean)]
    return MetricResult.from_values(values)


@dataclass(frozen=True)
class Problem:
    """Everything a training method needs: the task distribution, clean
    pool, real-noise pairs, network spec, and shared hyper-parameters."""

    name: str
    kind: str  # signal1d | image2d | ct2d
    metric: str
    max_val: float
    dist: TaskDistribution
    clean_pool: tuple[np.ndarray, ...]
    real_pairs: PairedSet
    net: NetworkSpec
    meta: MetaConfig
    supervised_budget: int

    @property
    def k(self) -> int:
        return self.meta.k


def run_method(
    problem: Problem, method: str, split: RealSplit, root: RngStream
) -> tuple[DenoiserModel, tuple]:
    """Train one method from a seed-derived init; all methods draw their
    synthetic training data from root.child("traindata") and fine-tune (when
    they do) from root.child("finetune"). Returns (model, data stream id)."""
    if method not in METHOD_NAMES:
        raise ValueError(f"unknown method {method!r} (expected one of {METHOD_NAMES})")
    init_seed = root.child("init").fresh_seed()
    model = DenoiserModel(problem.net, init_params(problem.net, init_seed))
    data = root.child("traindata")
    data_id = (data.seed,) + data.path
    if method == "meta":
        model, _ = meta_train(model, problem.dist, problem.clean_pool, problem.meta, stream=data)
        model = fine_tune(model, split, problem.meta.inner, stream=root.child("finetune"))
    elif method == "supervised":
        model = train_supervised(
            model,
            problem.dist,
            problem.clean_pool,
            problem.supervised_budget,
            problem.meta.inner,
            stream=data,
            k_per_task=problem.k,
        )
    else:  # transfer
        model = train_supervised(
            model,
            problem.dist,
            problem.clean_pool,
            problem.supervised_budget,
            problem.meta.inner,
            stream=data,
            k_per_task=problem.k,
        )
        model = fine_tune(model, split, problem.meta.inner, stream=root.child("finetune"))
    return model, data_id


@dataclass(frozen=True)
class EvalReport:
    """Per-method, per-seed results plus pairwise significance tests.

    `ttests` maps "meta>supervised"-style labels to results; an undefined
    statistic (all paired differences zero) is surfaced as the string
    diagnostic instead of being dropped.
    """

    metric: str
    k: int
    n_tasks: int
    seeds: tuple[int, ...]
    results: Mapping[str, Mapping[int, MetricResult]]  # method -> seed -> result
    initial_noise: Mapping[int, MetricResult]
    ttests: Mapping[str, TTestResult | str]
    n_test: int
    data_streams: Mapping[str, tuple[tuple, ...]] = field(default_factory=dict)

    def pooled_values(self, method: str) -> list[float]:
        out: list[float] = []
        for seed in self.seeds:
            out.extend(self.results[method][seed].values)
        return out

    def method_mean(self, method: str) -> float:
        return float(np.mean(self.pooled_values(method)))

    def initial_mean(self) -> float:
        values: list[float] = []
        for seed in self.seeds:
            values.extend(self.initial_noise[seed].values)
        return float(np.mean(values))


def compare_methods(problem: Problem, methods, seeds) -> EvalReport:
    """Run each method on identical per-seed splits and data streams,
    aggregate metrics, and test meta against the baselines (one-tailed,
    alternative: meta is better)."""
    methods = list(methods)
    seeds = [int(s) for s in seeds]
    if not methods:
        raise ValueError("no methods requested")
    if not seeds:
        raise ValueError("no seeds given")
    if len(methods) > 1 and len(seeds) < 2:
        raise ValueError("method comparison needs at least 2 seeds for significance")
    results: dict[str, dict[int, MetricResult]] = {m: {} for m in methods}
    initial: dict[int, MetricResult] = {}
    streams: dict[str, list[tuple]] = {m: [] for m in methods}
    n_test = 0
    for seed in seeds:
        root = RngStream(seed)
        split = split_real(problem.real_pairs, problem.k, root.child("split"))
        n_test = len(split.test)
        initial[seed] = initial_noise_result(split, problem.metric, problem.max_val)
        for method in methods:
            model, data_id = run_method(problem, method, split, root)
            results[method][seed] = evaluate_on_test(model, split, problem.metric, problem.max_val)
            streams[method].append(data_id)

    ttests: dict[str, TTestResult | str] = {}
    report = EvalReport(
        metric=problem.metric,
        k=problem.k,
        n_tasks=problem.meta.total_tasks,
        seeds=tuple(seeds),
        results=results,
        initial_noise=initial,
        ttests=ttests,
        n_test=n_test,
        data_streams={m: tuple(v) for m, v in streams.items()},
    )
    if "meta" in methods:
        for baseline in methods:
            if baseline == "meta" and methods.count("meta") < 2:
                continue  # self-comparison only when meta was listed twice
            label = f"meta>{baseline}"
            if label in ttests:
                continue
            try:
                ttests[label] = paired_t_test_one_tailed(
                    report.pooled_values("meta"), report.pooled_values(baseline)
                )
            except ValueError as exc:
                ttests[label] = f"undefined: {exc}"
    return report


@dataclass(frozen=True)
class SweepRow:
    k: int
    mean: float
    sd: float
    per_seed_means: tuple[float, ...]


def kshot_sweep(trainer, ks, seeds, problem: Problem) -> list[SweepRow]:
    """For each (k, seed): fresh split, train via `trainer(problem, split,
    root, k)`, evaluate; aggregates the per-seed mean metric for each k."""
    ks = [int(k) for k in ks]
    if not ks:
        raise ValueError("sweep needs at least one k")
    for k in ks:
        if k + 1 > len(problem.real_pairs):
            raise ValueError(f"k={k} infeasible for {len(problem.real_pairs)} real pairs")
    rows: list[SweepRow] = []
    for k in ks:
        per_seed: list[float] = []
        for seed in seeds:
            root = RngStream(seed)
            split = split_real(problem.real_pairs, k, root.child("split", k))
            model = trainer(problem, split, root, k)
            result = evaluate_on_test(model, split, problem.metric, problem.max_val)
            per_seed.append(result.mean)
        arr = np.asarray(per_seed)
        sd = float(np.std(arr, ddof=1)) if len(per_seed) > 1 else 0.0
        rows.append(SweepRow(k=k, mean=float(arr.mean()), sd=sd, per_seed_means=tuple(per_seed)))
    return rows


def method_trainer(method: str):
    """A sweep trainer that re-targets the problem's meta config at the
    sweep's k before running the given method."""

    def train(problem: Problem, split: RealSplit, root: RngStream, k: int) -> DenoiserModel:
        sized = replace(problem, meta=replace(problem.meta, k=k))
        model, _ = run_method(sized, method, split, root)
        return model

    return train
