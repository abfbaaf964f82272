import numpy as np
import pytest

from metadenoise.noise import NoiseTask, apply_task
from metadenoise.rng import RngStream
from metadenoise.tasks import (
    KShotSet,
    PairedSet,
    ParamPrior,
    TaskDistribution,
    TaskTemplate,
    build_kshot_set,
    generate_phantoms,
    generate_signals,
    make_real_pairs_signal,
    patchify,
    sample_task,
    split_real,
    window_signal,
)


def _gaussian_template(mu=0.0, sigma=0.1, weight=1.0):
    return TaskTemplate(
        "gaussian1d",
        priors={"mu": ParamPrior.fixed(mu), "sigma": ParamPrior.fixed(sigma)},
        weight=weight,
    )


class TestSampleTask:
    def test_degenerate_distribution(self):
        dist = TaskDistribution((_gaussian_template(mu=0.05, sigma=0.2),))
        for i in range(5):
            task = sample_task(dist, RngStream(1, ("t", i)))
            assert task.kind == "gaussian1d"
            assert task.params["mu"] == 0.05
            assert task.params["sigma"] == 0.2

    def test_uniform_prior_mean(self):
        dist = TaskDistribution(
            (TaskTemplate("gaussian1d", priors={"sigma": ParamPrior.uniform(0.0, 0.3)}),)
        )
        stream = RngStream(3)
        sigmas = [sample_task(dist, stream.child(i)).params["sigma"] for i in range(100_000)]
        assert abs(np.mean(sigmas) - 0.15) < 0.003

    def test_equal_weights_balanced(self):
        dist = TaskDistribution(
            (
                _gaussian_template(sigma=0.1, weight=1.0),
                TaskTemplate("poisson_image", priors={"peak": ParamPrior.fixed(50.0)}, weight=1.0),
            )
        )
        stream = RngStream(5)
        kinds = [sample_task(dist, stream.child(i)).kind for i in range(100_000)]
        fraction = kinds.count("gaussian1d") / len(kinds)
        assert abs(fraction - 0.5) < 0.01

    def test_variance_prior_becomes_sigma(self):
        dist = TaskDistribution(
            (TaskTemplate("gaussian2d", priors={"variance": ParamPrior.fixed(0.0025)}),)
        )
        task = sample_task(dist, RngStream(1))
        assert task.params["sigma"] == pytest.approx(0.05)

    def test_choice_prior_hits_all_values(self):
        dist = TaskDistribution(
            (TaskTemplate("poisson_image", priors={"peak": ParamPrior.choice((10, 20, 40))}),)
        )
        stream = RngStream(9)
        seen = {sample_task(dist, stream.child(i)).params["peak"] for i in range(200)}
        assert seen == {10.0, 20.0, 40.0}

    def test_empty_distribution_rejected(self):
        with pytest.raises(ValueError):
            TaskDistribution(())


class TestKShot:
    def test_exhaustive_draw(self, rng):
        pool = [rng.normal(size=8) for _ in range(5)]
        task = NoiseTask("gaussian1d", {"mu": 0.0, "sigma": 0.1}, seed=4)
        kset = build_kshot_set(pool, task, k=5, stream=RngStream(1))
        drawn = {tuple(c) for c in kset.clean}
        assert drawn == {tuple(p) for p in pool}

    def test_zero_noise_identity(self, rng):
        pool = [rng.normal(size=8) for _ in range(6)]
        task = NoiseTask("gaussian1d", {"mu": 0.0, "sigma": 0.0}, seed=4)
        kset = build_kshot_set(pool, task, k=3, stream=RngStream(2))
        for clean, noisy in zip(kset.clean, kset.noisy):
            assert np.array_equal(clean, noisy)

    def test_deterministic(self, rng):
        pool = [rng.normal(size=8) for _ in range(6)]
        task = NoiseTask("gaussian1d", {"mu": 0.1, "sigma": 0.2}, seed=4)
        a = build_kshot_set(pool, task, k=4, stream=RngStream(3))
        b = build_kshot_set(pool, task, k=4, stream=RngStream(3))
        assert all(np.array_equal(x, y) for x, y in zip(a.noisy, b.noisy))

    def test_noisy_reproducible_from_task(self, rng):
        pool = [rng.normal(size=8) for _ in range(6)]
        task = NoiseTask("gaussian1d", {"mu": 0.1, "sigma": 0.2}, seed=77)
        kset = build_kshot_set(pool, task, k=4, stream=RngStream(5))
        for i, (clean, noisy) in enumerate(zip(kset.clean, kset.noisy)):
            assert np.array_equal(noisy, apply_task(task, clean, sample_index=i))

    def test_k_exceeding_pool_rejected(self, rng):
        pool = [rng.normal(size=8) for _ in range(3)]
        task = NoiseTask("gaussian1d", {"mu": 0.0, "sigma": 0.1}, seed=1)
        with pytest.raises(ValueError):
            build_kshot_set(pool, task, k=4, stream=RngStream(1))

    def test_kshot_requires_task(self):
        with pytest.raises(ValueError):
            KShotSet(clean=(np.zeros(3),), noisy=(np.zeros(3),))


class TestWindowing:
    def test_count_formula(self):
        windows = window_signal(np.arange(32.0), 30, 1)
        assert len(windows) == 3

    def test_single_window(self):
        signal = np.arange(30.0)
        windows = window_signal(signal, 30, 1)
        assert len(windows) == 1
        assert np.array_equal(windows[0], signal)

    def test_stride_ten(self):
        signal = np.arange(100.0)
        windows = window_signal(signal, 30, 10)
        assert len(windows) == 8
        for i, w in enumerate(windows):
            assert np.array_equal(w, signal[10 * i : 10 * i + 30])

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            window_signal(np.arange(10.0), 30)

    def test_windows_are_source_slices(self, rng):
        signal = rng.normal(size=41)
        for i, w in enumerate(window_signal(signal, 7, 3)):
            assert np.array_equal(w, signal[3 * i : 3 * i + 7])


class TestPatchify:
    def test_whole_image_single_patch(self, rng):
        image = rng.normal(size=(55, 55))
        patches = patchify(image, 55, 55)
        assert len(patches) == 1
        assert np.array_equal(patches[0], image)

    def test_remainder_dropped(self, rng):
        image = rng.normal(size=(512, 512))
        assert len(patchify(image, 55, 55)) == 81

    def test_overlapping_grid(self, rng):
        image = rng.normal(size=(64, 64))
        patches = patchify(image, 32, 16)
        assert len(patches) == 9
        assert np.array_equal(patches[4], image[16:48, 16:48])

    def test_too_small_rejected(self, rng):
        with pytest.raises(ValueError):
            patchify(rng.normal(size=(16, 16)), 32, 8)


class TestSplitReal:
    def _pairs(self, n, rng):
        return PairedSet(
            clean=tuple(rng.normal(size=4) for _ in range(n)),
            noisy=tuple(rng.normal(size=4) for _ in range(n)),
        )

    def test_160_pairs_k10(self, rng):
        split = split_real(self._pairs(160, rng), 10, RngStream(1))
        assert len(split.train) == 10
        assert len(split.test) == 150
        assert not set(split.train_indices) & set(split.test_indices)

    def test_boundary_single_test(self, rng):
        split = split_real(self._pairs(5, rng), 4, RngStream(1))
        assert len(split.test) == 1

    def test_deterministic(self, rng):
        pairs = self._pairs(20, rng)
        a = split_real(pairs, 5, RngStream(9))
        b = split_real(pairs, 5, RngStream(9))
        assert a.train_indices == b.train_indices

    def test_partition_complete(self, rng):
        pairs = self._pairs(17, rng)
        split = split_real(pairs, 6, RngStream(2))
        assert sorted(split.train_indices + split.test_indices) == list(range(17))

    def test_too_few_pairs(self, rng):
        with pytest.raises(ValueError):
            split_real(self._pairs(5, rng), 5, RngStream(1))


class TestSyntheticData:
    def test_signals_deterministic_and_sized(self):
        a = generate_signals(4, 128, RngStream(7, ("clean",)))
        b = generate_signals(4, 128, RngStream(7, ("clean",)))
        assert len(a) == 4
        assert all(s.shape == (128,) for s in a)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_phantoms_in_unit_range(self):
        phantoms = generate_phantoms(3, 32, RngStream(8))
        for p in phantoms:
            assert p.shape == (32, 32)
            assert p.min() >= 0.0
            assert p.max() <= 1.0

    def test_real_pairs_windowed_consistently(self):
        signals = generate_signals(2, 90, RngStream(4))
        pairs = make_real_pairs_signal(signals, 30, 30, RngStream(5, ("real",)))
        assert len(pairs) == 6  # 3 non-overlapping windows per signal
        # clean windows must tile the original signals exactly
        assert np.array_equal(pairs.clean[0], signals[0][0:30])
        assert np.array_equal(pairs.clean[4], signals[1][30:60])
