import numpy as np
import pytest


def gradient_rel_error(analytic: np.ndarray, reference: np.ndarray) -> float:
    """Max absolute deviation normalized by the gradient magnitude scale."""
    scale = max(np.abs(analytic).max(), np.abs(reference).max(), 1e-8)
    return float(np.abs(analytic - reference).max() / scale)


def smooth_phantom(n: int = 64) -> np.ndarray:
    """Fixed sum of three Gaussian blobs, clipped to [0, 1]."""
    cols, rows = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float))
    c = (n - 1) / 2.0
    image = (
        0.7 * np.exp(-(((cols - c - 8) ** 2 + (rows - c + 5) ** 2) / (2 * 6.0**2)))
        + 0.5 * np.exp(-(((cols - c + 10) ** 2 + (rows - c - 10) ** 2) / (2 * 4.0**2)))
        + 0.4 * np.exp(-(((cols - c + 2) ** 2 + (rows - c + 13) ** 2) / (2 * 5.0**2)))
    )
    return np.clip(image, 0.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
