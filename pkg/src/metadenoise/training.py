"""The three learning algorithms under comparison: meta-training with
first-order task interpolation, pooled supervised training, and transfer
(pretrain + fine-tune).

Meta-training repeats: sample n tasks, build a k-shot set for each, adapt a
copy of the shared parameters per task with the inner loop, then move the
shared parameters toward the mean of the adapted ones by step-size epsilon.
Data for group g (= iteration * n + task) is drawn from stream children
("group", g, "task" | "pick" | "shuffle"), which supervised pretraining
reuses so every method sees the same synthetic data stream.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .nets import DenoiserModel, forward, set_params
from .optim import InnerLoopConfig, run_inner_loop
from .rng import RngStream
from .tasks import KShotSet, PairedSet, RealSplit, TaskDistribution, build_kshot_set, sample_task
from .tensor import mse_loss


@dataclass(frozen=True)
class MetaConfig:
    """Outer-loop settings: n tasks per iteration, iteration count, outer
    step-size epsilon, the shared inner-loop config, shots per task, and the
    base seed all sub-streams derive from."""

    n_tasks_per_iteration: int
    outer_iterations: int
    epsilon: float
    inner: InnerLoopConfig
    k: int
    base_seed: int = 0

    def __post_init__(self):
        if self.n_tasks_per_iteration < 1:
            raise ValueError(f"need n >= 1 tasks per iteration, got {self.n_tasks_per_iteration}")
        if self.outer_iterations < 0:
            raise ValueError(f"outer iterations must be >= 0, got {self.outer_iterations}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    @property
    def total_tasks(self) -> int:
        return self.n_tasks_per_iteration * self.outer_iterations


@dataclass
class TrainLog:
    """Per-outer-iteration diagnostics plus the data stream provenance."""

    iterations: list[int] = field(default_factory=list)
    mean_inner_loss: list[float] = field(default_factory=list)
    displacement_norm: list[float] = field(default_factory=list)
    wall_time_s: list[float] = field(default_factory=list)
    data_stream: tuple = ()

    def add(self, iteration: int, loss: float, displacement: float, wall: float):
        self.iterations.append(iteration)
        self.mean_inner_loss.append(loss)
        self.displacement_norm.append(displacement)
        self.wall_time_s.append(wall)

    def __len__(self) -> int:
        return len(self.iterations)


def reptile_outer_update(theta: np.ndarray, theta_primes, epsilon: float) -> np.ndarray:
    """theta + epsilon * mean(theta_prime_i - theta).

    The per-coordinate differences are reduced in sorted order, so the
    result is bit-identical under any permutation of the adapted vectors
    (and independent of how task work was scheduled).
    """
    if not len(theta_primes):
        raise ValueError("outer update needs at least one adapted parameter vector")
    theta = np.asarray(theta, dtype=np.float64)
    diffs = []
    for tp in theta_primes:
        tp = np.asarray(tp, dtype=np.float64)
        if tp.shape != theta.shape:
            raise DimensionError(f"adapted vector shape {tp.shape} != shared shape {theta.shape}")
        diffs.append(tp - theta)
    total = np.sort(np.stack(diffs), axis=0).sum(axis=0)
    return theta + epsilon * (total / len(theta_primes))


def _draw_group(
    dist: TaskDistribution, clean_pool, k: int, stream: RngStream, group: int
) -> KShotSet:
    """The per-group data draw shared by meta-training and pretraining."""
    task = sample_task(dist, stream.child("group", group, "task"))
    return build_kshot_set(clean_pool, task, k, stream.child("group", group, "pick"))


def _set_loss(model: DenoiserModel, batch: PairedSet) -> float:
    xs = np.stack([np.asarray(x) for x in batch.noisy])
    ys = np.stack([np.asarray(y) for y in batch.clean])
    return mse_loss(forward(model, xs), ys)


def meta_train(
    model: DenoiserModel,
    dist: TaskDistribution,
    clean_pool,
    cfg: MetaConfig,
    stream: RngStream | None = None,
) -> tuple[DenoiserModel, TrainLog]:
    """Meta-training loop; returns the adapted model and per-iteration log.

    Fresh tasks and k-shot data are sampled every iteration. Deterministic
    given the stream (default: RngStream(cfg.base_seed)); the logged loss is
    the mean post-adaptation loss over the iteration's k-shot sets.
    """
    if stream is None:
        stream = RngStream(cfg.base_seed)
    log = TrainLog(data_stream=(stream.seed,) + stream.path)
    theta = model.params.copy()
    n = cfg.n_tasks_per_iteration
    for iteration in range(cfg.outer_iterations):
        started = time.perf_counter()
        shared = set_params(model, theta)
        adapted = []
        losses = []
        for t in range(n):
            group = iteration * n + t
            kshot = _draw_group(dist, clean_pool, cfg.k, stream, group)
            theta_prime = run_inner_loop(
                shared, kshot, cfg.inner, stream=stream.child("group", group, "shuffle")
            )
            adapted.append(theta_prime)
            losses.append(_set_loss(set_params(model, theta_prime), kshot))
        theta_next = reptile_outer_update(theta, adapted, cfg.epsilon)
        displacement = float(np.linalg.norm(theta_next - theta))
        theta = theta_next
        log.add(iteration, float(np.mean(losses)), displacement, time.perf_counter() - started)
    return set_params(model, theta), log


def build_synthetic_pool(
    dist: TaskDistribution,
    clean_pool,
    total_pairs: int,
    k_per_task: int,
    stream: RngStream,
) -> PairedSet:
    """Pool task-corrupted pairs, k per task, until `total_pairs` are
    collected; draws the same group sequence as meta-training."""
    if total_pairs < 1:
        raise ValueError(f"need a positive training budget, got {total_pairs}")
    clean: list[np.ndarray] = []
    noisy: list[np.ndarray] = []
    group = 0
    while len(clean) < total_pairs:
        kshot = _draw_group(dist, clean_pool, k_per_task, stream, group)
        remaining = total_pairs - len(clean)
        clean.extend(kshot.clean[:remaining])
        noisy.extend(kshot.noisy[:remaining])
        group += 1
    return PairedSet(clean=tuple(clean), noisy=tuple(noisy))


def train_supervised(
    model: DenoiserModel,
    dist: TaskDistribution,
    clean_pool,
    total_budget: int,
    cfg: InnerLoopConfig,
    stream: RngStream | None = None,
    k_per_task: int = 10,
    epoch_losses: list[float] | None = None,
) -> DenoiserModel:
    """Supervised baseline: one pooled synthetic set of `total_budget`
    pairs (matching meta-training's processed data when the budget is
    iterations * n * k), minimized with the inner-loop machinery."""
    if stream is None:
        stream = RngStream(cfg.shuffle_seed, ("supervised",))
    pool = build_synthetic_pool(dist, clean_pool, total_budget, k_per_task, stream)
    theta = run_inner_loop(
        model, pool, cfg, stream=stream.child("pool-shuffle"), epoch_losses=epoch_losses
    )
    return set_params(model, theta)


def fine_tune(
    model: DenoiserModel,
    split: RealSplit,
    cfg: InnerLoopConfig,
    stream: RngStream | None = None,
    epoch_losses: list[float] | None = None,
) -> DenoiserModel:
    """Adapt on the k real fine-tune pairs, starting from the current
    parameters."""
    if len(split.train) < 1:
        raise ValueError("fine-tuning needs at least one pair")
    theta = run_inner_loop(model, split.train, cfg, stream=stream, epoch_losses=epoch_losses)
    return set_params(model, theta)


def transfer_learn(
    model: DenoiserModel,
    dist: TaskDistribution,
    clean_pool,
    total_budget: int,
    split: RealSplit,
    pretrain_cfg: InnerLoopConfig,
    finetune_cfg: InnerLoopConfig,
    stream: RngStream | None = None,
    k_per_task: int = 10,
) -> tuple[DenoiserModel, list[float], list[float]]:
    """Pretrain on pooled synthetic data, then fine-tune on the real pairs;
    returns the model with both stages' epoch losses."""
    if stream is None:
        stream = RngStream(pretrain_cfg.shuffle_seed, ("transfer",))
    pretrain_losses: list[float] = []
    finetune_losses: list[float] = []
    if total_budget > 0 and pretrain_cfg.epochs > 0:
        model = train_supervised(
            model,
            dist,
            clean_pool,
            total_budget,
            pretrain_cfg,
            stream=stream,
            k_per_task=k_per_task,
            epoch_losses=pretrain_losses,
        )
    model = fine_tune(
        model, split, finetune_cfg, stream=stream.child("finetune"), epoch_losses=finetune_losses
    )
    return model, pretrain_losses, finetune_losses
