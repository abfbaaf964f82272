"""Task distributions, k-shot set construction, windowing/patching, the
real-noise split, and the built-in synthetic clean-data generators.

A task distribution is a weighted list of templates whose parameters carry
priors (fixed value, finite choice set, or uniform interval). Sampling a
template and drawing its priors yields a concrete `NoiseTask`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ct import default_geometry
from .noise import (
    NOISE_KINDS,
    NoiseTask,
    apply_gaussian,
    apply_poisson_sinogram,
    apply_task,
    poisson_array,
)
from .rng import RngStream


@dataclass(frozen=True)
class ParamPrior:
    """Prior over one task parameter: fixed | uniform(low, high) | choice."""

    kind: str
    value: float = 0.0
    low: float = 0.0
    high: float = 0.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform", "choice"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == "uniform" and not self.low <= self.high:
            raise ValueError(f"uniform prior needs low <= high, got [{self.low}, {self.high}]")
        if self.kind == "choice" and not self.values:
            raise ValueError("choice prior needs a nonempty value set")

    @staticmethod
    def fixed(value: float) -> "ParamPrior":
        return ParamPrior("fixed", value=float(value))

    @staticmethod
    def uniform(low: float, high: float) -> "ParamPrior":
        return ParamPrior("uniform", low=float(low), high=float(high))

    @staticmethod
    def choice(values) -> "ParamPrior":
        return ParamPrior("choice", values=tuple(float(v) for v in values))

    def draw(self, stream: RngStream) -> float:
        if self.kind == "fixed":
            return self.value
        if self.kind == "uniform":
            return float(stream.uniform(self.low, self.high))
        return self.values[int(stream.integers(0, len(self.values)))]


@dataclass(frozen=True)
class TaskTemplate:
    """One noise family with priors over its parameters.

    A prior keyed "variance" is drawn and converted to "sigma" at sampling
    time, matching noise levels stated as variances.
    """

    kind: str
    priors: dict[str, ParamPrior] = field(default_factory=dict)
    weight: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.weight <= 0:
            raise ValueError(f"template weight must be positive, got {self.weight}")


@dataclass(frozen=True)
class TaskDistribution:
    templates: tuple[TaskTemplate, ...]

    def __post_init__(self):
        if not self.templates:
            raise ValueError("task distribution needs at least one template")


def sample_task(dist: TaskDistribution, stream: RngStream) -> NoiseTask:
    """Pick a template by weight, draw each prior, and stamp a fresh seed."""
    weights = np.array([t.weight for t in dist.templates], dtype=np.float64)
    cumulative = np.cumsum(weights / weights.sum())
    u = float(stream.uniform())
    index = int(np.searchsorted(cumulative, u, side="right"))
    index = min(index, len(dist.templates) - 1)
    template = dist.templates[index]
    params: dict[str, float] = {}
    for name in sorted(template.priors):
        value = template.priors[name].draw(stream)
        if name == "variance":
            params["sigma"] = math.sqrt(value)
        else:
            params[name] = value
    return NoiseTask(kind=template.kind, params=params, seed=stream.fresh_seed())


@dataclass(frozen=True)
class PairedSet:
    """Parallel lists of clean and noisy samples."""

    clean: tuple[np.ndarray, ...]
    noisy: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.clean) != len(self.noisy):
            raise ValueError(
                f"clean ({len(self.clean)}) and noisy ({len(self.noisy)}) counts differ"
            )

    def __len__(self) -> int:
        return len(self.clean)


@dataclass(frozen=True)
class KShotSet(PairedSet):
    """A task's k paired samples; noisy[i] is exactly the task's corruption
    of clean[i] at sample index i."""

    task: NoiseTask = None  # type: ignore[assignment]

    def __post_init__(self):
        super().__post_init__()
        if self.task is None:
            raise ValueError("k-shot set needs its generating task")


def build_kshot_set(clean_pool, task: NoiseTask, k: int, stream: RngStream) -> KShotSet:
    """Draw k clean samples without replacement and corrupt each one under
    per-sample sub-streams of the task seed."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > len(clean_pool):
        raise ValueError(f"k={k} exceeds pool size {len(clean_pool)}")
    indices = stream.choice_without_replacement(len(clean_pool), k)
    clean = tuple(np.asarray(clean_pool[int(i)], dtype=np.float64) for i in indices)
    noisy = tuple(apply_task(task, sample, sample_index=j) for j, sample in enumerate(clean))
    return KShotSet(clean=clean, noisy=noisy, task=task)


def window_signal(signal: np.ndarray, size: int, stride: int = 1) -> list[np.ndarray]:
    """All length-`size` windows at the given stride, in order."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError(f"expected a 1-D signal, got shape {signal.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if signal.size < size:
        raise ValueError(f"signal length {signal.size} shorter than window {size}")
    count = (signal.size - size) // stride + 1
    return [signal[i * stride : i * stride + size].copy() for i in range(count)]


def patchify(image: np.ndarray, size: int, stride: int) -> list[np.ndarray]:
    """Regular grid of size x size patches; right/bottom remainders smaller
    than the patch are dropped."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {image.shape}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if image.shape[0] < size or image.shape[1] < size:
        raise ValueError(f"image {image.shape} smaller than patch {size}")
    rows = (image.shape[0] - size) // stride + 1
    cols = (image.shape[1] - size) // stride + 1
    patches = []
    for r in range(rows):
        for c in range(cols):
            patches.append(image[r * stride : r * stride + size, c * stride : c * stride + size].copy())
    return patches


@dataclass(frozen=True)
class RealSplit:
    """Disjoint fine-tune/test partition of the real-noise pairs."""

    train: PairedSet
    test: PairedSet
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]

    def __post_init__(self):
        if set(self.train_indices) & set(self.test_indices):
            raise ValueError("fine-tune and test index sets overlap")


def split_real(pairs: PairedSet, k: int, stream: RngStream) -> RealSplit:
    """Uniformly sample k fine-tune pairs without replacement; the rest is
    the test set."""
    n = len(pairs)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n < k + 1:
        raise ValueError(f"need at least k+1={k + 1} pairs, got {n}")
    chosen = sorted(int(i) for i in stream.choice_without_replacement(n, k))
    chosen_set = set(chosen)
    rest = [i for i in range(n) if i not in chosen_set]

    def subset(indices) -> PairedSet:
        return PairedSet(
            clean=tuple(pairs.clean[i] for i in indices),
            noisy=tuple(pairs.noisy[i] for i in indices),
        )

    return RealSplit(
        train=subset(chosen),
        test=subset(rest),
        train_indices=tuple(chosen),
        test_indices=tuple(rest),
    )


# ---------------------------------------------------------------------------
# Built-in clean data (desk-scale stand-ins for external datasets)

def generate_signals(count: int, length: int, stream: RngStream) -> list[np.ndarray]:
    """Seeded 1-D signals: a sum of 2 to 4 sinusoids plus sparse spikes."""
    signals = []
    for i in range(count):
        s = stream.child("signal", i)
        t = np.arange(length, dtype=np.float64)
        n_components = int(s.integers(2, 5))
        signal = np.zeros(length)
        for _ in range(n_components):
            amplitude = float(s.uniform(0.3, 1.0))
            period = float(s.uniform(12.0, 80.0))
            phase = float(s.uniform(0.0, 2.0 * np.pi))
            signal += amplitude * np.sin(2.0 * np.pi * t / period + phase)
        n_spikes = int(s.integers(1, 4))
        positions = s.choice_without_replacement(length, n_spikes)
        signal[positions] += s.uniform(-1.5, 1.5, n_spikes)
        signals.append(signal)
    return signals


def generate_phantoms(count: int, size: int, stream: RngStream) -> list[np.ndarray]:
    """Seeded 2-D phantoms in [0, 1]: Gaussian blobs plus a disk or two."""
    cols, rows = np.meshgrid(np.arange(size, dtype=np.float64), np.arange(size, dtype=np.float64))
    center = (size - 1) / 2.0
    phantoms = []
    for i in range(count):
        s = stream.child("phantom", i)
        image = np.zeros((size, size))
        for _ in range(int(s.integers(2, 5))):
            cx = float(s.uniform(0.25, 0.75)) * size
            cy = float(s.uniform(0.25, 0.75)) * size
            width = float(s.uniform(0.04, 0.12)) * size
            height = float(s.uniform(0.2, 0.8))
            image += height * np.exp(-(((cols - cx) ** 2 + (rows - cy) ** 2) / (2.0 * width**2)))
        for _ in range(int(s.integers(1, 3))):
            cx = float(s.uniform(0.3, 0.7)) * size
            cy = float(s.uniform(0.3, 0.7)) * size
            radius = float(s.uniform(0.05, 0.15)) * size
            image += float(s.uniform(0.1, 0.4)) * (
                ((cols - cx) ** 2 + (rows - cy) ** 2) <= radius**2
            )
        # keep intensities in [0, 1] and fade outside the inscribed circle
        fade = np.clip(1.2 - ((cols - center) ** 2 + (rows - center) ** 2) / (center**2), 0.0, 1.0)
        image *= fade
        peak = image.max()
        if peak > 0:
            image /= max(1.0, peak)
        phantoms.append(image)
    return phantoms


# Held-out "real" corruption parameters. These sit near the edge of the
# training priors (sigma at the top of U(0, 0.3), mean at the boundary of
# U(-0.1, 0.1)) with an intensity-dependent Poisson component absent from
# the synthetic families.
REAL_SIGNAL_GAUSS_MU = 0.10
REAL_SIGNAL_GAUSS_SIGMA = 0.28
REAL_SIGNAL_POISSON_RATE = 25.0
REAL_SIGNAL_POISSON_AMP = 0.3

REAL_IMAGE_GAUSS_SIGMA = 12.0 / 255.0
REAL_IMAGE_POISSON_PEAK = 40.0

REAL_CT_BLANK_SCAN = 8.5e4
REAL_CT_READOUT_SIGMA = 1.0


def corrupt_signal_real(y: np.ndarray, stream: RngStream) -> np.ndarray:
    """Structured held-out 1-D corruption: shifted Gaussian plus an
    intensity-dependent scaled-Poisson term."""
    y = np.asarray(y, dtype=np.float64)
    x = apply_gaussian(y, REAL_SIGNAL_GAUSS_MU, REAL_SIGNAL_GAUSS_SIGMA, stream.child("gauss"))
    intensity = np.abs(y)
    rate = REAL_SIGNAL_POISSON_RATE
    shot = poisson_array(rate * intensity, stream.child("shot")) / rate - intensity
    return x + REAL_SIGNAL_POISSON_AMP * shot


def corrupt_image_real(y: np.ndarray, stream: RngStream) -> np.ndarray:
    """Held-out 2-D corruption: scaled Poisson then additive Gaussian."""
    y = np.asarray(y, dtype=np.float64)
    peak = REAL_IMAGE_POISSON_PEAK
    x = poisson_array(peak * np.clip(y, 0.0, None), stream.child("shot")) / peak
    return apply_gaussian(x, 0.0, REAL_IMAGE_GAUSS_SIGMA, stream.child("gauss"))


def make_real_pairs_signal(
    signals, window: int, stride: int, stream: RngStream
) -> PairedSet:
    """Corrupt whole held-out signals, then window clean/noisy in parallel."""
    clean: list[np.ndarray] = []
    noisy: list[np.ndarray] = []
    for i, signal in enumerate(signals):
        corrupted = corrupt_signal_real(signal, stream.child("record", i))
        clean.extend(window_signal(signal, window, stride))
        noisy.extend(window_signal(corrupted, window, stride))
    return PairedSet(clean=tuple(clean), noisy=tuple(noisy))


def make_real_pairs_image(
    images, patch: int, stride: int, stream: RngStream
) -> PairedSet:
    clean: list[np.ndarray] = []
    noisy: list[np.ndarray] = []
    for i, image in enumerate(images):
        corrupted = corrupt_image_real(image, stream.child("record", i))
        clean.extend(patchify(image, patch, stride))
        noisy.extend(patchify(corrupted, patch, stride))
    return PairedSet(clean=tuple(clean), noisy=tuple(noisy))


def make_real_pairs_ct(images, n_angles: int, stream: RngStream) -> PairedSet:
    """Full-image CT pairs under the held-out sinogram corruption."""
    clean: list[np.ndarray] = []
    noisy: list[np.ndarray] = []
    for i, image in enumerate(images):
        geom = default_geometry(image.shape[0], n_angles=n_angles)
        corrupted = apply_poisson_sinogram(
            image, REAL_CT_BLANK_SCAN, REAL_CT_READOUT_SIGMA, geom, stream.child("record", i)
        )
        clean.append(np.asarray(image, dtype=np.float64))
        noisy.append(corrupted)
    return PairedSet(clean=tuple(clean), noisy=tuple(noisy))
