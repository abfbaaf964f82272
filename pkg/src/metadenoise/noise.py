"""Corruption functions h: Gaussian, scaled Poisson, and sinogram-domain
low-dose CT noise, plus the Poisson sampler beneath them.

A `NoiseTask` pins a noise kind, its parameters, and a seed, which makes
every corruption bit-reproducible: applying the same task to the same clean
input always yields the same noisy output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .ct import ProjectionGeometry, default_geometry, fbp_inverse, radon_forward
from .rng import RngStream

NOISE_KINDS = ("gaussian1d", "gaussian2d", "poisson_image", "poisson_sinogram")

# Switch point between the small-lambda multiplication sampler and
# transformed rejection.
_PTRS_THRESHOLD = 30.0

_lgamma = np.frompyfunc(math.lgamma, 1, 1)


@dataclass(frozen=True)
class NoiseTask:
    """A sampled task: noise kind, parameters, and the RNG seed that makes
    its corruption deterministic.

    Parameter keys by kind:
      gaussian1d / gaussian2d: mu, sigma
      poisson_image:           peak (photons per unit intensity)
      poisson_sinogram:        blank_scan, readout_sigma, n_angles (optional)
    """

    kind: str
    params: Mapping[str, float]
    seed: int

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        p = self.params
        if self.kind in ("gaussian1d", "gaussian2d"):
            if p.get("sigma", 0.0) < 0:
                raise ValueError(f"sigma must be >= 0, got {p['sigma']}")
        elif self.kind == "poisson_image":
            if p.get("peak", 0.0) <= 0:
                raise ValueError(f"peak must be > 0, got {p.get('peak')}")
        elif self.kind == "poisson_sinogram":
            if p.get("blank_scan", 0.0) <= 0:
                raise ValueError(f"blank_scan must be > 0, got {p.get('blank_scan')}")
            if p.get("readout_sigma", 0.0) < 0:
                raise ValueError(f"readout_sigma must be >= 0, got {p['readout_sigma']}")


def _poisson_small(lam: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Multiplication method: count uniform factors until the running
    product drops below exp(-lambda). Efficient only for small lambda."""
    out = np.zeros(lam.shape, dtype=np.int64)
    limit = np.exp(-lam)
    prod = gen.uniform(size=lam.shape)
    active = prod > limit
    while np.any(active):
        out[active] += 1
        prod[active] *= gen.uniform(size=int(active.sum()))
        active &= prod > limit
    return out


def _poisson_ptrs(lam: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Transformed rejection with squeeze (Hoermann's PTRS) for large lambda."""
    out = np.empty(lam.shape, dtype=np.int64)
    out_flat = out.ravel()
    lam_flat = lam.ravel()
    log_lam = np.log(lam_flat)
    b = 0.931 + 2.53 * np.sqrt(lam_flat)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    pending = np.arange(lam_flat.size)
    while pending.size:
        lp = lam_flat[pending]
        u = gen.uniform(size=pending.size) - 0.5
        v = gen.uniform(size=pending.size)
        us = 0.5 - np.abs(u)
        k = np.floor((2.0 * a[pending] / us + b[pending]) * u + lp + 0.43)

        accepted = (us >= 0.07) & (v <= v_r[pending])
        slow = ~accepted & (k >= 0) & ((us >= 0.013) | (v <= us))
        if np.any(slow):
            idx = pending[slow]
            lhs = np.log(v[slow] * inv_alpha[idx] / (a[idx] / (us[slow] * us[slow]) + b[idx]))
            rhs = k[slow] * log_lam[idx] - lp[slow] - _lgamma(k[slow] + 1.0).astype(np.float64)
            accepted[slow] = lhs <= rhs
        out_flat[pending[accepted]] = k[accepted].astype(np.int64)
        pending = pending[~accepted]
    return out


def poisson_array(lam: np.ndarray, stream: RngStream) -> np.ndarray:
    """Exact Poisson draws, element-wise over an array of rates."""
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(lam < 0):
        raise ValueError("Poisson rate must be >= 0")
    out = np.zeros(lam.shape, dtype=np.int64)
    gen = stream.generator
    small = (lam > 0) & (lam < _PTRS_THRESHOLD)
    large = lam >= _PTRS_THRESHOLD
    if np.any(small):
        out[small] = _poisson_small(lam[small], gen)
    if np.any(large):
        out[large] = _poisson_ptrs(lam[large], gen)
    return out


def sample_poisson(lam: float, stream: RngStream) -> int:
    """One Poisson draw: multiplication method below lambda=30,
    transformed rejection above."""
    if lam < 0:
        raise ValueError(f"Poisson rate must be >= 0, got {lam}")
    return int(poisson_array(np.asarray([lam]), stream)[0])


def apply_gaussian(y: np.ndarray, mu: float, sigma: float, stream: RngStream) -> np.ndarray:
    """x = y + eta with eta ~ N(mu, sigma^2) i.i.d. per element."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    y = np.asarray(y, dtype=np.float64)
    return y + stream.normal(mu, sigma, y.shape)


def apply_poisson_image(y: np.ndarray, peak: float, stream: RngStream) -> np.ndarray:
    """Mean-preserving scaled Poisson: x = Poisson(peak * y) / peak, so
    E[x] = y and Var[x] = y / peak."""
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("Poisson corruption requires non-negative intensities")
    return poisson_array(peak * y, stream) / peak


def apply_poisson_sinogram(
    y: np.ndarray,
    blank_scan: float,
    readout_sigma: float,
    geom: ProjectionGeometry | None,
    stream: RngStream,
) -> np.ndarray:
    """Low-dose CT simulation in the projection domain.

    Forward-projects y, draws counts z ~ Poisson(b * exp(-p)) plus Gaussian
    read-out noise, converts back to line integrals p = -ln(max(z, 1) / b)
    (counts clamped to >= 1 before the log), and reconstructs by filtered
    back-projection.
    """
    if blank_scan <= 0:
        raise ValueError(f"blank_scan must be > 0, got {blank_scan}")
    if readout_sigma < 0:
        raise ValueError(f"readout_sigma must be >= 0, got {readout_sigma}")
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("sinogram corruption requires non-negative intensities")
    if geom is None:
        geom = default_geometry(y.shape[0])
    sino = radon_forward(y, geom)
    counts = poisson_array(blank_scan * np.exp(-sino), stream.child("counts")).astype(np.float64)
    if readout_sigma > 0:
        counts = counts + stream.child("readout").normal(0.0, readout_sigma, counts.shape)
    noisy_sino = -np.log(np.maximum(counts, 1.0) / blank_scan)
    return fbp_inverse(noisy_sino, geom)


def apply_task(task: NoiseTask, y: np.ndarray, sample_index: int = 0) -> np.ndarray:
    """Corrupt one clean sample under a task; bit-reproducible given
    (task.seed, sample_index)."""
    y = np.asarray(y, dtype=np.float64)
    stream = RngStream(task.seed, ("apply", sample_index))
    if task.kind in ("gaussian1d", "gaussian2d"):
        expected = 1 if task.kind == "gaussian1d" else 2
        if y.ndim != expected:
            raise ValueError(f"{task.kind} expects a {expected}-D sample, got shape {y.shape}")
        return apply_gaussian(y, task.params.get("mu", 0.0), task.params["sigma"], stream)
    if task.kind == "poisson_image":
        return apply_poisson_image(y, task.params["peak"], stream)
    geom = None
    if "n_angles" in task.params:
        geom = default_geometry(y.shape[0], n_angles=int(task.params["n_angles"]))
    return apply_poisson_sinogram(
        y, task.params["blank_scan"], task.params.get("readout_sigma", 0.0), geom, stream
    )
