"""Parallel-beam Radon transform and filtered back-projection.

Line integrals are computed by bilinear interpolation along rays sampled at
unit step; inversion applies a frequency-domain ramp (Ram-Lak) filter per
angle followed by back-projection. Both maps are linear in the image, and
reconstruction accuracy is only meaningful inside the inscribed circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError


@dataclass(frozen=True)
class ProjectionGeometry:
    """Parallel-beam geometry: angles uniform over [0, pi), detector bins
    centered on the image; the detector row must cover the image diagonal
    so no ray is truncated."""

    n_angles: int
    n_detectors: int
    spacing: float = 1.0
    image_size: int = 0

    def __post_init__(self):
        if self.n_angles < 1:
            raise ValueError(f"need at least one angle, got {self.n_angles}")
        if self.n_detectors < 1:
            raise ValueError(f"need at least one detector, got {self.n_detectors}")
        if self.spacing <= 0:
            raise ValueError(f"detector spacing must be positive, got {self.spacing}")
        if self.image_size < 2:
            raise ValueError(f"image size must be >= 2, got {self.image_size}")
        required = math.sqrt(2.0) * self.image_size
        if self.n_detectors * self.spacing < required:
            raise ValueError(
                f"detector row ({self.n_detectors} x {self.spacing}) truncates a "
                f"{self.image_size}px image (needs coverage >= {required:.1f}px)"
            )

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_angles) * (np.pi / self.n_angles)

    @property
    def detector_offsets(self) -> np.ndarray:
        centers = np.arange(self.n_detectors) - (self.n_detectors - 1) / 2.0
        return centers * self.spacing


def default_geometry(image_size: int, n_angles: int = 180) -> ProjectionGeometry:
    """Declared defaults: 180 angles, ceil(sqrt(2) * size) unit detectors."""
    n_det = int(math.ceil(math.sqrt(2.0) * image_size))
    return ProjectionGeometry(n_angles=n_angles, n_detectors=n_det, spacing=1.0, image_size=image_size)


def _bilinear_sample(image: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Sample at fractional (row, col) positions; zero outside the image."""
    n_rows, n_cols = image.shape
    r0 = np.floor(rows).astype(np.int64)
    c0 = np.floor(cols).astype(np.int64)
    dr = rows - r0
    dc = cols - c0
    out = np.zeros(rows.shape, dtype=np.float64)
    for (ro, co, weight) in (
        (0, 0, (1.0 - dr) * (1.0 - dc)),
        (0, 1, (1.0 - dr) * dc),
        (1, 0, dr * (1.0 - dc)),
        (1, 1, dr * dc),
    ):
        rr = r0 + ro
        cc = c0 + co
        inside = (rr >= 0) & (rr < n_rows) & (cc >= 0) & (cc < n_cols)
        if np.any(inside):
            out[inside] += weight[inside] * image[rr[inside], cc[inside]]
    return out


def radon_forward(image: np.ndarray, geom: ProjectionGeometry) -> np.ndarray:
    """Line integrals of a square image: sinogram of shape
    (n_angles, n_detectors)."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise DimensionError(f"expected a square image, got shape {image.shape}")
    n = image.shape[0]
    if n != geom.image_size:
        raise DimensionError(f"image size {n} does not match geometry ({geom.image_size})")
    center = (n - 1) / 2.0
    ray_length = math.sqrt(2.0) * n
    n_steps = int(math.ceil(ray_length)) + 1
    t = np.linspace(-ray_length / 2.0, ray_length / 2.0, n_steps)
    step = t[1] - t[0]
    offsets = geom.detector_offsets
    sino = np.empty((geom.n_angles, geom.n_detectors), dtype=np.float64)
    for i, theta in enumerate(geom.angles):
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        # Ray point = s * u + t * w with u = (cos, sin), w = (-sin, cos);
        # x indexes columns and y indexes rows.
        x = offsets[:, None] * cos_t - t[None, :] * sin_t
        y = offsets[:, None] * sin_t + t[None, :] * cos_t
        samples = _bilinear_sample(image, y + center, x + center)
        sino[i] = samples.sum(axis=1) * step
    return sino


def _ramp_filter(n_padded: int, spacing: float) -> np.ndarray:
    return np.abs(np.fft.fftfreq(n_padded, d=spacing))


def fbp_inverse(sino: np.ndarray, geom: ProjectionGeometry) -> np.ndarray:
    """Ramp-filtered back-projection onto the geometry's image grid."""
    sino = np.asarray(sino, dtype=np.float64)
    if sino.shape != (geom.n_angles, geom.n_detectors):
        raise DimensionError(
            f"sinogram shape {sino.shape} does not match geometry "
            f"({geom.n_angles}, {geom.n_detectors})"
        )
    n_det = geom.n_detectors
    n_padded = max(64, 1 << int(math.ceil(math.log2(2 * n_det))))
    ramp = _ramp_filter(n_padded, geom.spacing)
    padded = np.zeros((geom.n_angles, n_padded), dtype=np.float64)
    padded[:, :n_det] = sino
    filtered = np.real(np.fft.ifft(np.fft.fft(padded, axis=1) * ramp[None, :], axis=1))[:, :n_det]

    n = geom.image_size
    center = (n - 1) / 2.0
    coords = np.arange(n) - center
    cols, rows = np.meshgrid(coords, coords)
    recon = np.zeros((n, n), dtype=np.float64)
    det_center = (n_det - 1) / 2.0
    for i, theta in enumerate(geom.angles):
        s = cols * math.cos(theta) + rows * math.sin(theta)
        positions = s / geom.spacing + det_center
        j0 = np.floor(positions).astype(np.int64)
        frac = positions - j0
        inside0 = (j0 >= 0) & (j0 < n_det)
        inside1 = (j0 + 1 >= 0) & (j0 + 1 < n_det)
        row = filtered[i]
        acc = np.zeros_like(recon)
        acc[inside0] += (1.0 - frac[inside0]) * row[j0[inside0]]
        acc[inside1] += frac[inside1] * row[j0[inside1] + 1]
        recon += acc
    return recon * (np.pi / geom.n_angles)


def inscribed_circle_mask(n: int) -> np.ndarray:
    """Boolean mask of the inscribed circle, the FBP support region."""
    center = (n - 1) / 2.0
    coords = np.arange(n) - center
    cols, rows = np.meshgrid(coords, coords)
    return cols * cols + rows * rows <= (n / 2.0 - 1) ** 2
