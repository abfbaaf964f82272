"""Denoising network specs, forward evaluation, and per-layer backward rules.

Two families are supported: fully-connected chains (the 1-D autoencoder) and
same-padded conv2d chains (the residual image denoiser). Reverse-mode
gradients come from hand-derived backward rules per layer; `gradient`
returns d(mse)/d(params) averaged over a batch, flat and layout-matched to
the model's parameter vector.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, NumericError
from .rng import RngStream
from .tensor import mse_loss_backward

WEIGHT_KINDS = ("fc", "conv2d")
ACTIVATION_KINDS = ("relu", "linear")


@dataclass(frozen=True)
class LayerSpec:
    """One layer: a weight-bearing map (fc/conv2d) or an activation marker.

    For fc layers in_size/out_size are vector widths; for conv2d they are
    channel counts and `kernel` is the (odd) spatial kernel size with
    zero-padded same-size output.
    """

    kind: str
    in_size: int = 0
    out_size: int = 0
    kernel: int = 0
    same_pad: bool = True

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS + ACTIVATION_KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind in WEIGHT_KINDS and (self.in_size < 1 or self.out_size < 1):
            raise ValueError(f"{self.kind} layer needs positive extents")
        if self.kind == "conv2d":
            if self.kernel < 1 or self.kernel % 2 == 0:
                raise ValueError(f"conv2d kernel must be odd and positive, got {self.kernel}")
            if not self.same_pad:
                raise ValueError("only same-padded conv2d is supported")

    @property
    def param_shapes(self) -> tuple[tuple[int, ...], ...]:
        if self.kind == "fc":
            return ((self.out_size, self.in_size), (self.out_size,))
        if self.kind == "conv2d":
            return ((self.out_size, self.in_size, self.kernel, self.kernel), (self.out_size,))
        return ()


@dataclass(frozen=True)
class NetworkSpec:
    """Ordered layer list plus the residual flag.

    With `residual` set the network output is input minus the predicted
    noise, so an all-zero parameter vector is the exact identity map.
    """

    layers: tuple[LayerSpec, ...]
    residual: bool = False

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        weight_kinds = {l.kind for l in self.layers if l.kind in WEIGHT_KINDS}
        if len(weight_kinds) > 1:
            raise ValueError("mixed fc/conv2d networks are not supported")
        if not weight_kinds:
            raise ValueError("network has no weight-bearing layers")
        if self.layers[-1].kind != "linear":
            raise ValueError("last layer must be the linear activation marker")
        width = None
        for layer in self.layers:
            if layer.kind in WEIGHT_KINDS:
                if width is not None and layer.in_size != width:
                    raise ValueError(
                        f"layer input extent {layer.in_size} does not match previous output {width}"
                    )
                width = layer.out_size
        first = next(l for l in self.layers if l.kind in WEIGHT_KINDS)
        if first.in_size != width:
            raise ValueError(f"output extent {width} must equal input extent {first.in_size}")
        if self.is_conv and first.in_size != 1:
            raise ValueError("conv denoisers operate on single-channel images")

    @property
    def is_conv(self) -> bool:
        return any(l.kind == "conv2d" for l in self.layers)

    @property
    def input_size(self) -> int:
        """Vector width for fc nets; channel count (1) for conv nets."""
        return next(l.in_size for l in self.layers if l.kind in WEIGHT_KINDS)

    @property
    def kernel_size(self) -> int:
        return max((l.kernel for l in self.layers if l.kind == "conv2d"), default=0)

    @property
    def param_shapes(self) -> tuple[tuple[int, ...], ...]:
        shapes: list[tuple[int, ...]] = []
        for layer in self.layers:
            shapes.extend(layer.param_shapes)
        return tuple(shapes)

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(s)) for s in self.param_shapes)

    @property
    def n_weight_layers(self) -> int:
        return sum(1 for l in self.layers if l.kind in WEIGHT_KINDS)


def build_fc_denoiser(dims: Sequence[int]) -> NetworkSpec:
    """Fully-connected chain dims[0] -> ... -> dims[-1], ReLU on hidden
    layers and a linear output; first and last dims must match."""
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise ValueError("need at least an input and an output width")
    layers: list[LayerSpec] = []
    for i in range(len(dims) - 1):
        layers.append(LayerSpec("fc", in_size=dims[i], out_size=dims[i + 1]))
        layers.append(LayerSpec("relu" if i < len(dims) - 2 else "linear"))
    return NetworkSpec(tuple(layers))


def build_ecg_autoencoder() -> NetworkSpec:
    """The 1-D denoising autoencoder: 30 -> 150x3 -> 25 -> 150x3 -> 30."""
    return build_fc_denoiser((30, 150, 150, 150, 25, 150, 150, 150, 30))


def build_conv_denoiser(depth: int = 5, width: int = 16, residual: bool = False) -> NetworkSpec:
    """Conv chain 1->width, (depth-2) x width->width, width->1, all 3x3
    same-padded, ReLU on hidden layers; `residual` subtracts the predicted
    noise from the input."""
    if depth < 2:
        raise ValueError(f"conv denoiser needs depth >= 2, got {depth}")
    if width < 1:
        raise ValueError(f"conv denoiser needs width >= 1, got {width}")
    layers: list[LayerSpec] = [LayerSpec("conv2d", in_size=1, out_size=width, kernel=3), LayerSpec("relu")]
    for _ in range(depth - 2):
        layers.append(LayerSpec("conv2d", in_size=width, out_size=width, kernel=3))
        layers.append(LayerSpec("relu"))
    layers.append(LayerSpec("conv2d", in_size=width, out_size=1, kernel=3))
    layers.append(LayerSpec("linear"))
    return NetworkSpec(tuple(layers), residual=residual)


@dataclass(frozen=True)
class DenoiserModel:
    """A network spec together with its flat float64 parameter vector."""

    spec: NetworkSpec
    params: np.ndarray

    def __post_init__(self):
        if self.params.dtype != np.float64 or self.params.ndim != 1:
            raise DimensionError("parameters must be a flat float64 vector")
        if self.params.size != self.spec.n_params:
            raise DimensionError(
                f"parameter vector length {self.params.size} does not match layout "
                f"({self.spec.n_params})"
            )


def init_params(spec: NetworkSpec, seed: int) -> np.ndarray:
    """He-style init: weights ~ N(0, 2/fan_in), biases zero; deterministic."""
    stream = RngStream(seed, ("param-init",))
    chunks: list[np.ndarray] = []
    for layer in spec.layers:
        if layer.kind == "fc":
            fan_in = layer.in_size
        elif layer.kind == "conv2d":
            fan_in = layer.in_size * layer.kernel * layer.kernel
        else:
            continue
        weight_shape, bias_shape = layer.param_shapes
        std = np.sqrt(2.0 / fan_in)
        chunks.append(stream.normal(0.0, std, weight_shape).ravel())
        chunks.append(np.zeros(bias_shape, dtype=np.float64))
    return np.concatenate(chunks)


def get_params(model: DenoiserModel) -> np.ndarray:
    return model.params.copy()


def set_params(model: DenoiserModel, theta: np.ndarray) -> DenoiserModel:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (model.spec.n_params,):
        raise DimensionError(
            f"parameter vector length {theta.size} does not match layout ({model.spec.n_params})"
        )
    return replace(model, params=theta.copy())


def _split_params(spec: NetworkSpec, theta: np.ndarray) -> list[np.ndarray]:
    views: list[np.ndarray] = []
    offset = 0
    for shape in spec.param_shapes:
        size = int(np.prod(shape))
        views.append(theta[offset : offset + size].reshape(shape))
        offset += size
    return views


def _to_batch(spec: NetworkSpec, x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Normalize input to (N, D) for fc or (N, 1, H, W) for conv."""
    x = np.asarray(x, dtype=np.float64)
    if spec.is_conv:
        if x.ndim == 2:
            batch, single = x[None, None, :, :], True
        elif x.ndim == 3:
            batch, single = x[:, None, :, :], False
        else:
            raise DimensionError(f"conv input must be HxW or NxHxW, got shape {x.shape}")
        k = spec.kernel_size
        if batch.shape[2] < k or batch.shape[3] < k:
            raise DimensionError(f"spatial extent {batch.shape[2:]} smaller than kernel {k}")
        return batch, single
    if x.ndim == 1:
        batch, single = x[None, :], True
    elif x.ndim == 2:
        batch, single = x, False
    else:
        raise DimensionError(f"fc input must be D or NxD, got shape {x.shape}")
    if batch.shape[1] != spec.input_size:
        raise DimensionError(f"input extent {batch.shape[1]} != spec extent {spec.input_size}")
    return batch, single


def _from_batch(spec: NetworkSpec, out: np.ndarray, single: bool) -> np.ndarray:
    if spec.is_conv:
        out = out[:, 0, :, :]
    return out[0] if single else out


def _conv_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-padded conv of x:(N,C,H,W) with weight:(O,C,k,k)."""
    k = weight.shape[2]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    n, _, h, w = x.shape
    out = np.empty((n, weight.shape[0], h, w), dtype=np.float64)
    out[:] = bias[None, :, None, None]
    for di in range(k):
        for dj in range(k):
            patch = xp[:, :, di : di + h, dj : dj + w]
            out += np.einsum("ncij,oc->noij", patch, weight[:, :, di, dj])
    return out


def _conv_backward(
    x: np.ndarray, weight: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (d_x, d_weight, d_bias) of a same-padded conv."""
    k = weight.shape[2]
    pad = k // 2
    n, _, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    d_xp = np.zeros_like(xp)
    d_weight = np.zeros_like(weight)
    for di in range(k):
        for dj in range(k):
            patch = xp[:, :, di : di + h, dj : dj + w]
            d_weight[:, :, di, dj] = np.einsum("noij,ncij->oc", grad_out, patch)
            d_xp[:, :, di : di + h, dj : dj + w] += np.einsum(
                "noij,oc->ncij", grad_out, weight[:, :, di, dj]
            )
    d_bias = grad_out.sum(axis=(0, 2, 3))
    d_x = d_xp[:, :, pad : pad + h, pad : pad + w]
    return d_x, d_weight, d_bias


class GradientRecord:
    """Cached forward activations for one backward pass.

    A record may be consumed exactly once; reuse raises, since the caches
    are only guaranteed valid for the parameters they were recorded with.
    """

    def __init__(self, model: DenoiserModel, inputs: np.ndarray, caches: list, output: np.ndarray):
        self.model = model
        self.inputs = inputs
        self.caches = caches
        self.output = output
        self._consumed = False

    def mark_consumed(self):
        if self._consumed:
            raise RuntimeError("GradientRecord already consumed; rerun the forward pass")
        self._consumed = True


def _forward_impl(model: DenoiserModel, batch: np.ndarray, record: bool):
    views = _split_params(model.spec, model.params)
    caches: list = []
    h = batch
    vi = 0
    for layer in model.spec.layers:
        if layer.kind == "fc":
            weight, bias = views[vi], views[vi + 1]
            vi += 2
            if record:
                caches.append(("fc", h))
            h = h @ weight.T + bias
        elif layer.kind == "conv2d":
            weight, bias = views[vi], views[vi + 1]
            vi += 2
            if record:
                caches.append(("conv2d", h))
            h = _conv_forward(h, weight, bias)
        elif layer.kind == "relu":
            if record:
                caches.append(("relu", h))
            h = np.maximum(h, 0.0)
        else:  # linear marker
            if record:
                caches.append(("linear", None))
    out = batch - h if model.spec.residual else h
    return out, caches


def forward(model: DenoiserModel, x: np.ndarray) -> np.ndarray:
    """Evaluate the denoiser on one sample or a batch; shape-preserving."""
    batch, single = _to_batch(model.spec, x)
    out, _ = _forward_impl(model, batch, record=False)
    return _from_batch(model.spec, out, single)


def forward_with_record(model: DenoiserModel, x: np.ndarray) -> tuple[np.ndarray, GradientRecord]:
    batch, single = _to_batch(model.spec, x)
    out, caches = _forward_impl(model, batch, record=True)
    return _from_batch(model.spec, out, single), GradientRecord(model, batch, caches, out)


def backward(record: GradientRecord, grad_output: np.ndarray) -> np.ndarray:
    """Reverse-mode sweep: d(loss)/d(params) given d(loss)/d(output).

    `grad_output` must match the recorded batch output shape (N,D) or
    (N,1,H,W); returns a flat vector in the model's parameter layout.
    """
    record.mark_consumed()
    model = record.model
    grad_output = np.asarray(grad_output, dtype=np.float64)
    if grad_output.shape != record.output.shape:
        raise DimensionError(
            f"upstream gradient shape {grad_output.shape} != output shape {record.output.shape}"
        )
    views = _split_params(model.spec, model.params)
    grads = [np.zeros_like(v) for v in views]
    g = -grad_output if model.spec.residual else grad_output

    vi = len(views)
    for kind, payload in reversed(record.caches):
        if kind == "fc":
            vi -= 2
            weight = views[vi]
            x_in = payload
            grads[vi] += g.T @ x_in
            grads[vi + 1] += g.sum(axis=0)
            g = g @ weight
        elif kind == "conv2d":
            vi -= 2
            weight = views[vi]
            g, d_w, d_b = _conv_backward(payload, weight, g)
            grads[vi] += d_w
            grads[vi + 1] += d_b
        elif kind == "relu":
            g = g * (payload > 0)
        # linear marker: gradient passes through unchanged
    return np.concatenate([a.ravel() for a in grads])


def relu_kink_margin(model: DenoiserModel, x: np.ndarray) -> float:
    """Smallest |pre-activation| reaching any ReLU for this input.

    Finite-difference gradient checks are only valid when no unit sits
    within the probe step of the ReLU kink; use this to screen check
    instances."""
    batch, _ = _to_batch(model.spec, x)
    _, caches = _forward_impl(model, batch, record=True)
    margins = [np.abs(payload).min() for kind, payload in caches if kind == "relu"]
    return float(min(margins)) if margins else float("inf")


def gradient(model: DenoiserModel, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """d/d(params) of mse_loss(forward(model, xs), ys), averaged over the
    batch and signal elements jointly; flat, layout-matched to params."""
    batch_x, _ = _to_batch(model.spec, np.asarray(xs, dtype=np.float64))
    batch_y, _ = _to_batch(model.spec, np.asarray(ys, dtype=np.float64))
    if batch_x.shape != batch_y.shape:
        raise DimensionError(f"input batch {batch_x.shape} != target batch {batch_y.shape}")
    if batch_x.shape[0] == 0:
        raise DimensionError("gradient of an empty batch is undefined")
    out, caches = _forward_impl(model, batch_x, record=True)
    record = GradientRecord(model, batch_x, caches, out)
    grad = backward(record, mse_loss_backward(out, batch_y))
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient")
    return grad
