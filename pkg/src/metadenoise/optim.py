"""Parameter update rules (SGD, Adam, AdaDelta) and the inner training loop.

All steps are functional: they return new parameter/state values and never
mutate their inputs, which keeps task adaptations independent when run from
a shared starting point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .nets import DenoiserModel, forward, gradient, set_params
from .rng import RngStream
from .tensor import mse_loss


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"  # sgd | adam | adadelta
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    rho: float = 0.9
    adadelta_eps: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("sgd", "adam", "adadelta"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        for name in ("beta1", "beta2", "rho"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {value}")


@dataclass
class OptimizerState:
    """Per-coordinate moment accumulators, layout-matched to the params."""

    step: int = 0
    first_moment: np.ndarray | None = None  # adam m
    second_moment: np.ndarray | None = None  # adam v
    sq_grad: np.ndarray | None = None  # adadelta E[g^2]
    sq_delta: np.ndarray | None = None  # adadelta E[dx^2]


def init_state(cfg: OptimizerConfig, n_params: int) -> OptimizerState:
    if cfg.kind == "adam":
        return OptimizerState(
            first_moment=np.zeros(n_params), second_moment=np.zeros(n_params)
        )
    if cfg.kind == "adadelta":
        return OptimizerState(sq_grad=np.zeros(n_params), sq_delta=np.zeros(n_params))
    return OptimizerState()


def _check_layout(theta: np.ndarray, grad: np.ndarray):
    if theta.shape != grad.shape:
        raise DimensionError(f"gradient shape {grad.shape} does not match params {theta.shape}")


def sgd_step(theta: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
    _check_layout(theta, grad)
    return theta - lr * grad


def adam_step(
    theta: np.ndarray, grad: np.ndarray, state: OptimizerState, cfg: OptimizerConfig
) -> tuple[np.ndarray, OptimizerState]:
    """Bias-corrected Adam update."""
    _check_layout(theta, grad)
    if state.first_moment is None or state.first_moment.shape != theta.shape:
        raise DimensionError("optimizer state does not match parameter layout")
    step = state.step + 1
    m = cfg.beta1 * state.first_moment + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * state.second_moment + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1**step)
    v_hat = v / (1.0 - cfg.beta2**step)
    theta_next = theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return theta_next, OptimizerState(step=step, first_moment=m, second_moment=v)


def adadelta_step(
    theta: np.ndarray, grad: np.ndarray, state: OptimizerState, cfg: OptimizerConfig
) -> tuple[np.ndarray, OptimizerState]:
    """AdaDelta with running squared gradients/updates; the accumulated
    delta is unscaled and learning_rate multiplies only the applied step."""
    _check_layout(theta, grad)
    if state.sq_grad is None or state.sq_grad.shape != theta.shape:
        raise DimensionError("optimizer state does not match parameter layout")
    sq_grad = cfg.rho * state.sq_grad + (1.0 - cfg.rho) * grad * grad
    delta = grad * np.sqrt(state.sq_delta + cfg.adadelta_eps) / np.sqrt(sq_grad + cfg.adadelta_eps)
    sq_delta = cfg.rho * state.sq_delta + (1.0 - cfg.rho) * delta * delta
    theta_next = theta - cfg.learning_rate * delta
    return theta_next, OptimizerState(step=state.step + 1, sq_grad=sq_grad, sq_delta=sq_delta)


def apply_step(
    theta: np.ndarray, grad: np.ndarray, state: OptimizerState, cfg: OptimizerConfig
) -> tuple[np.ndarray, OptimizerState]:
    if cfg.kind == "sgd":
        return sgd_step(theta, grad, cfg.learning_rate), OptimizerState(step=state.step + 1)
    if cfg.kind == "adam":
        return adam_step(theta, grad, state, cfg)
    return adadelta_step(theta, grad, state, cfg)


@dataclass(frozen=True)
class InnerLoopConfig:
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    epochs: int = 10
    batch_size: int = 10
    shuffle_seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


def run_inner_loop(
    model: DenoiserModel,
    train_set,
    cfg: InnerLoopConfig,
    stream: RngStream | None = None,
    epoch_losses: list[float] | None = None,
) -> np.ndarray:
    """Adapt the model's parameters on a paired set and return them.

    Runs cfg.epochs passes over shuffled mini-batches, applying the
    configured update rule to the batch MSE gradient. The input model is
    not mutated and optimizer state starts fresh. `stream`, when given,
    supersedes cfg.shuffle_seed as the shuffle source; `epoch_losses`
    collects the mean mini-batch loss per epoch.
    """
    theta = model.params.copy()
    if cfg.epochs == 0:
        return theta
    n = len(train_set.noisy)
    if n == 0:
        raise ValueError("cannot train on an empty set")
    if stream is None:
        stream = RngStream(cfg.shuffle_seed, ("inner-shuffle",))
    xs = np.stack([np.asarray(x, dtype=np.float64) for x in train_set.noisy])
    ys = np.stack([np.asarray(y, dtype=np.float64) for y in train_set.clean])
    state = init_state(cfg.optimizer, theta.size)
    for _ in range(cfg.epochs):
        order = stream.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            current = set_params(model, theta)
            grad = gradient(current, xs[idx], ys[idx])
            if epoch_losses is not None:
                batch_losses.append(mse_loss(forward(current, xs[idx]), ys[idx]))
            theta, state = apply_step(theta, grad, state, cfg.optimizer)
        if epoch_losses is not None:
            epoch_losses.append(float(np.mean(batch_losses)))
    return theta
