"""Dense float64 arrays, the mean-squared-error objective, and a
central-difference gradient oracle.

Arrays are plain ``numpy.ndarray`` values in row-major order; `as_tensor`
is the validating constructor (finite entries, 64-bit reals). Parameter
vectors are flat float64 arrays whose layout is owned by the network spec.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import DimensionError, NumericError


def as_tensor(data, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """Return a C-ordered float64 array, rejecting NaN/Inf entries."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if shape is not None:
        expected = 1
        for extent in shape:
            if extent <= 0:
                raise DimensionError(f"non-positive extent {extent} in shape {shape}")
            expected *= extent
        if arr.size != expected:
            raise DimensionError(f"{arr.size} values cannot fill shape {shape}")
        arr = arr.reshape(shape)
    if arr.size and not np.all(np.isfinite(arr)):
        raise NumericError("tensor contains NaN or Inf")
    return arr


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean over all elements of (pred - target)^2.

    The batch expectation of the training objective is realized as the
    arithmetic mean over the mini-batch and signal elements jointly.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if pred.size == 0:
        raise DimensionError("mse_loss of empty tensors is undefined")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_backward(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    """d mse_loss / d pred, same shape as pred."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise DimensionError(f"prediction shape {pred.shape} != target shape {target.shape}")
    return (2.0 / pred.size) * (pred - target)


def finite_diff_gradient(
    loss_fn: Callable[[np.ndarray], float],
    theta: np.ndarray,
    h: float = 1e-5,
) -> np.ndarray:
    """Central differences (loss(theta + h e_i) - loss(theta - h e_i)) / 2h.

    Verification oracle for analytic gradients; O(2 * len(theta)) loss
    evaluations, so intended for small parameter vectors.
    """
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    probe = theta.copy()
    for i in range(theta.size):
        original = probe[i]
        probe[i] = original + h
        up = loss_fn(probe)
        probe[i] = original - h
        down = loss_fn(probe)
        probe[i] = original
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(f"loss is not finite near coordinate {i}")
        grad[i] = (up - down) / (2.0 * h)
    return grad
