import numpy as np
import pytest

from metadenoise.ct import (
    ProjectionGeometry,
    default_geometry,
    fbp_inverse,
    inscribed_circle_mask,
    radon_forward,
)
from metadenoise.errors import DimensionError
from metadenoise.evaluation import psnr
from conftest import smooth_phantom


class TestGeometry:
    def test_defaults_cover_diagonal(self):
        geom = default_geometry(64)
        assert geom.n_detectors >= np.sqrt(2.0) * 64
        assert geom.n_angles == 180

    def test_truncating_geometry_rejected(self):
        with pytest.raises(ValueError):
            ProjectionGeometry(n_angles=10, n_detectors=64, spacing=1.0, image_size=64)

    def test_angles_uniform_over_half_turn(self):
        geom = default_geometry(32, n_angles=4)
        assert np.allclose(geom.angles, [0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4])


class TestRadon:
    def test_zero_image(self):
        geom = default_geometry(32, 20)
        assert np.all(radon_forward(np.zeros((32, 32)), geom) == 0.0)

    def test_linearity(self, rng):
        geom = default_geometry(32, 30)
        y1 = rng.random((32, 32))
        y2 = rng.random((32, 32))
        lhs = radon_forward(2.5 * y1 - 1.25 * y2, geom)
        rhs = 2.5 * radon_forward(y1, geom) - 1.25 * radon_forward(y2, geom)
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(rhs).max()

    def test_disk_matches_chord_length(self):
        n, radius, value = 64, 20.0, 0.9
        cols, rows = np.meshgrid(np.arange(n, dtype=float), np.arange(n, dtype=float))
        c = (n - 1) / 2.0
        disk = (((cols - c) ** 2 + (rows - c) ** 2) <= radius**2) * value
        geom = default_geometry(n, 8)
        sino = radon_forward(disk, geom)
        s = geom.detector_offsets
        analytic = 2.0 * value * np.sqrt(np.maximum(radius**2 - s**2, 0.0))
        away_from_rim = np.abs(s) < 0.85 * radius
        rel = np.abs(sino[0][away_from_rim] - analytic[away_from_rim]) / analytic[away_from_rim]
        assert rel.max() < 0.05

    def test_rejects_non_square(self):
        geom = default_geometry(32, 10)
        with pytest.raises(DimensionError):
            radon_forward(np.zeros((32, 16)), geom)

    def test_rejects_size_mismatch(self):
        geom = default_geometry(32, 10)
        with pytest.raises(DimensionError):
            radon_forward(np.zeros((16, 16)), geom)


class TestFbp:
    def test_zero_sinogram(self):
        geom = default_geometry(32, 20)
        assert np.all(fbp_inverse(np.zeros((20, geom.n_detectors)), geom) == 0.0)

    def test_linearity(self, rng):
        geom = default_geometry(32, 30)
        s1 = radon_forward(rng.random((32, 32)), geom)
        s2 = radon_forward(rng.random((32, 32)), geom)
        lhs = fbp_inverse(0.7 * s1 + 3.0 * s2, geom)
        rhs = 0.7 * fbp_inverse(s1, geom) + 3.0 * fbp_inverse(s2, geom)
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(rhs).max()

    def test_roundtrip_psnr(self):
        phantom = smooth_phantom(64)
        geom = default_geometry(64, 180)
        recon = fbp_inverse(radon_forward(phantom, geom), geom)
        mask = inscribed_circle_mask(64)
        assert psnr(recon[mask], phantom[mask], 1.0) > 25.0

    def test_doubling_angles_improves_roundtrip(self):
        phantom = smooth_phantom(64)
        mask = inscribed_circle_mask(64)
        scores = []
        for n_angles in (45, 90):
            geom = default_geometry(64, n_angles)
            recon = fbp_inverse(radon_forward(phantom, geom), geom)
            scores.append(psnr(recon[mask], phantom[mask], 1.0))
        assert scores[1] > scores[0]

    def test_angle_monotonicity(self):
        phantom = smooth_phantom(64)
        mask = inscribed_circle_mask(64)
        scores = []
        for n_angles in (15, 30, 60, 120):
            geom = default_geometry(64, n_angles)
            recon = fbp_inverse(radon_forward(phantom, geom), geom)
            scores.append(psnr(recon[mask], phantom[mask], 1.0))
        assert all(a < b for a, b in zip(scores, scores[1:]))

    def test_rejects_shape_mismatch(self):
        geom = default_geometry(32, 20)
        with pytest.raises(DimensionError):
            fbp_inverse(np.zeros((21, geom.n_detectors)), geom)

    def test_deterministic(self):
        phantom = smooth_phantom(32)
        geom = default_geometry(32, 40)
        a = fbp_inverse(radon_forward(phantom, geom), geom)
        b = fbp_inverse(radon_forward(phantom, geom), geom)
        assert np.array_equal(a, b)
