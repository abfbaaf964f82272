import numpy as np
import pytest

from metadenoise.errors import DimensionError
from metadenoise.evaluation import (
    EXACT_MATCH,
    MetricResult,
    Problem,
    compare_methods,
    evaluate_on_test,
    initial_noise_result,
    kshot_sweep,
    method_trainer,
    psnr,
    snr,
)
from metadenoise.nets import DenoiserModel, LayerSpec, NetworkSpec, build_fc_denoiser
from metadenoise.optim import InnerLoopConfig, OptimizerConfig
from metadenoise.rng import RngStream
from metadenoise.stats import TTestResult
from metadenoise.tasks import PairedSet, ParamPrior, TaskDistribution, TaskTemplate, split_real
from metadenoise.training import MetaConfig


def _identity_model(width=4):
    spec = NetworkSpec((LayerSpec("fc", in_size=width, out_size=width), LayerSpec("linear")))
    params = np.concatenate([np.eye(width).ravel(), np.zeros(width)])
    return DenoiserModel(spec, params)


class TestPsnr:
    def test_exact_match_sentinel(self, rng):
        x = rng.normal(size=16)
        assert psnr(x, x.copy(), 1.0) == EXACT_MATCH

    def test_direct_formula(self):
        # max 255, MSE 25 -> 10*log10(65025/25)
        x = np.zeros(4)
        y = np.full(4, 5.0)
        assert psnr(x, y, 255.0) == pytest.approx(34.1514, abs=1e-3)

    def test_scale_invariance(self, rng):
        x = rng.uniform(0, 1, 32)
        y = rng.uniform(0, 1, 32)
        assert psnr(3 * x, 3 * y, 3.0) == pytest.approx(psnr(x, y, 1.0), rel=1e-12)

    def test_monotone_in_mse(self):
        y = np.zeros(8)
        assert psnr(np.full(8, 0.1), y, 1.0) > psnr(np.full(8, 0.2), y, 1.0)

    def test_permutation_invariance(self, rng):
        x = rng.normal(size=20)
        y = rng.normal(size=20)
        order = rng.permutation(20)
        assert psnr(x[order], y[order], 1.0) == pytest.approx(psnr(x, y, 1.0), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            psnr(np.zeros(3), np.zeros(4), 1.0)


class TestSnr:
    def test_exact_match_sentinel(self, rng):
        y = rng.normal(size=16)
        assert snr(y.copy(), y) == EXACT_MATCH

    def test_hand_computed_zero_db(self):
        assert snr(np.array([6.0, 8.0]), np.array([3.0, 4.0])) == pytest.approx(0.0, abs=1e-12)

    def test_doubled_estimate_always_zero_db(self, rng):
        y = rng.normal(size=50)
        assert snr(2 * y, y) == pytest.approx(0.0, abs=1e-10)

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            snr(np.ones(4), np.zeros(4))

    def test_permutation_invariance(self, rng):
        x = rng.normal(size=20)
        y = rng.normal(size=20)
        order = rng.permutation(20)
        assert snr(x[order], y[order]) == pytest.approx(snr(x, y), rel=1e-12)


class TestMetricResult:
    def test_mean_matches_hand_average(self, rng):
        values = list(rng.normal(size=9))
        result = MetricResult.from_values(values)
        assert result.mean == pytest.approx(sum(values) / 9)
        assert result.count == 9

    def test_needs_values(self):
        with pytest.raises(ValueError):
            MetricResult.from_values([])


def _noiseless_split(rng, width=4, n=8, k=3):
    clean = tuple(rng.normal(size=width) for _ in range(n))
    pairs = PairedSet(clean=clean, noisy=tuple(c.copy() for c in clean))
    return split_real(pairs, k, RngStream(0))


def _noisy_split(rng, width=4, n=8, k=3):
    clean = tuple(rng.normal(size=width) for _ in range(n))
    noisy = tuple(c + rng.normal(0, 0.3, size=width) for c in clean)
    return split_real(PairedSet(clean=clean, noisy=noisy), k, RngStream(0))


class TestEvaluateOnTest:
    def test_identity_on_noiseless_pairs_all_sentinels(self, rng):
        split = _noiseless_split(rng)
        result = evaluate_on_test(_identity_model(), split, "snr")
        assert all(v == EXACT_MATCH for v in result.values)

    def test_identity_model_equals_initial_noise(self, rng):
        split = _noisy_split(rng)
        via_model = evaluate_on_test(_identity_model(), split, "snr")
        direct = initial_noise_result(split, "snr")
        assert via_model.values == pytest.approx(direct.values, rel=1e-12)

    def test_aggregate_matches_external_average(self, rng):
        split = _noisy_split(rng)
        result = evaluate_on_test(_identity_model(), split, "psnr", max_val=1.0)
        recomputed = [psnr(x, y, 1.0) for x, y in zip(split.test.noisy, split.test.clean)]
        assert result.mean == pytest.approx(float(np.mean(recomputed)), rel=1e-12)


def _tiny_problem(k=2, n_signals=6, outer=2):
    stream = RngStream(0, ("tiny",))
    from metadenoise.tasks import generate_signals, make_real_pairs_signal, window_signal

    records = generate_signals(n_signals, 64, stream.child("clean"))
    pool = []
    for r in records[:4]:
        pool.extend(window_signal(r, 8, 4))
    real = make_real_pairs_signal(records[4:], 8, 8, stream.child("real"))
    inner = InnerLoopConfig(
        optimizer=OptimizerConfig(kind="sgd", learning_rate=0.02), epochs=2, batch_size=2
    )
    return Problem(
        name="tiny",
        kind="signal1d",
        metric="snr",
        max_val=1.0,
        dist=TaskDistribution(
            (
                TaskTemplate(
                    "gaussian1d",
                    priors={"mu": ParamPrior.fixed(0.0), "sigma": ParamPrior.uniform(0.0, 0.2)},
                ),
            )
        ),
        clean_pool=tuple(pool),
        real_pairs=real,
        net=build_fc_denoiser((8, 6, 8)),
        meta=MetaConfig(1, outer, 0.5, inner, k=k, base_seed=0),
        supervised_budget=outer * k,
    )


class TestCompareMethods:
    def test_single_method_degenerates_to_one_row(self):
        problem = _tiny_problem()
        report = compare_methods(problem, ["supervised"], [1, 2])
        assert set(report.results.keys()) == {"supervised"}
        assert report.ttests == {}
        assert len(report.initial_noise) == 2

    def test_duplicate_method_surfaces_degenerate_ttest(self):
        problem = _tiny_problem()
        report = compare_methods(problem, ["meta", "meta"], [1, 2])
        outcome = report.ttests["meta>meta"]
        assert isinstance(outcome, str) and "undefined" in outcome

    def test_full_comparison_shape(self):
        problem = _tiny_problem()
        report = compare_methods(problem, ["supervised", "transfer", "meta"], [1, 2])
        assert set(report.ttests) == {"meta>supervised", "meta>transfer"}
        for outcome in report.ttests.values():
            assert isinstance(outcome, (TTestResult, str))
        assert report.n_tasks == problem.meta.total_tasks

    def test_identical_data_streams_across_methods(self):
        problem = _tiny_problem()
        report = compare_methods(problem, ["supervised", "transfer", "meta"], [1, 2])
        streams = list(report.data_streams.values())
        assert all(s == streams[0] for s in streams)

    def test_requires_two_seeds_for_comparison(self):
        problem = _tiny_problem()
        with pytest.raises(ValueError):
            compare_methods(problem, ["supervised", "meta"], [1])

    def test_deterministic(self):
        problem = _tiny_problem()
        a = compare_methods(problem, ["meta"], [1, 2])
        b = compare_methods(problem, ["meta"], [1, 2])
        assert a.pooled_values("meta") == b.pooled_values("meta")


class TestKshotSweep:
    def test_single_k_equals_direct_run(self):
        problem = _tiny_problem()
        trainer = method_trainer("supervised")
        rows = kshot_sweep(trainer, [2], [1], problem)
        assert len(rows) == 1
        root = RngStream(1)
        split = split_real(problem.real_pairs, 2, root.child("split", 2))
        model = trainer(problem, split, root, 2)
        direct = evaluate_on_test(model, split, "snr")
        assert rows[0].mean == pytest.approx(direct.mean, rel=1e-12)

    def test_row_count(self):
        problem = _tiny_problem()
        rows = kshot_sweep(method_trainer("supervised"), [1, 2, 3], [1, 2], problem)
        assert [r.k for r in rows] == [1, 2, 3]

    def test_infeasible_k_rejected(self):
        problem = _tiny_problem()
        with pytest.raises(ValueError):
            kshot_sweep(method_trainer("meta"), [10_000], [1], problem)

    def test_empty_ks_rejected(self):
        with pytest.raises(ValueError):
            kshot_sweep(method_trainer("meta"), [], [1], _tiny_problem())
