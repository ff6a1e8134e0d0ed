"""Toy generator, ground-truth oracles, and the benchmark harness."""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from metricmi import (
    BenchmarkProtocol,
    KernelConfig,
    MetricSpec,
    ToySpec,
    chi_density,
    distance_matrix,
    generate_toy,
    kernel_mi,
    run_benchmark,
    true_mi,
)


def quadrature_mi_1d(sources, sigma2):
    """Independent fine-grid oracle for 1-d mixtures: direct integration."""
    sources = np.asarray(sources, dtype=np.float64).ravel()
    n_s = sources.size
    sigma = math.sqrt(sigma2)

    def pdf(r, mu):
        return math.exp(-((r - mu) ** 2) / (2 * sigma2)) / (sigma * math.sqrt(2 * math.pi))

    def integrand(r, mu):
        p_cond = pdf(r, mu)
        p_marg = sum(pdf(r, m) for m in sources) / n_s
        if p_cond == 0.0 or p_marg == 0.0:
            return 0.0
        return p_cond * math.log2(p_cond / p_marg)

    total = 0.0
    for mu in sources:
        val, _ = quad(integrand, mu - 12 * sigma, mu + 12 * sigma, args=(mu,), limit=400)
        total += val / n_s
    return total


class TestToySpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ToySpec(1, 3, 10)
        with pytest.raises(ValueError):
            ToySpec(2, 0, 10)
        with pytest.raises(ValueError):
            ToySpec(2, 3, 1)
        with pytest.raises(ValueError):
            ToySpec(2, 3, 10, sigma2=1.5)


class TestGenerateToy:
    def test_shapes_and_balance(self):
        ds, sources, sigma2 = generate_toy(ToySpec(4, 3, 7, seed=1))
        assert (ds.n_s, ds.n_t, ds.n_r, ds.n_d) == (4, 7, 28, 3)
        assert sources.shape == (4, 3)
        assert 0.0 <= sigma2 <= 1.0
        assert ds.labels.tolist() == sorted(ds.labels.tolist())

    def test_sources_inside_unit_box(self):
        for seed in range(20):
            _, sources, _ = generate_toy(ToySpec(8, 5, 2, seed=seed))
            assert np.all(sources >= -0.5) and np.all(sources <= 0.5)

    def test_deterministic(self):
        a, sa, s2a = generate_toy(ToySpec(3, 2, 5, seed=9))
        b, sb, s2b = generate_toy(ToySpec(3, 2, 5, seed=9))
        assert a == b
        assert np.array_equal(sa, sb) and s2a == s2b
        c, _, _ = generate_toy(ToySpec(3, 2, 5, seed=10))
        assert a != c

    def test_pinned_sigma2_reproduces_drawn_dataset(self):
        # a recorded (seed, sigma2) pair regenerates the identical dataset
        drawn, _, sigma2 = generate_toy(ToySpec(3, 2, 5, seed=4))
        pinned, _, _ = generate_toy(ToySpec(3, 2, 5, sigma2=sigma2, seed=4))
        assert drawn == pinned

    def test_near_zero_variance_gives_separated_clusters(self):
        ds, _, _ = generate_toy(ToySpec(5, 3, 6, sigma2=1e-12, seed=2))
        dm = distance_matrix(ds, MetricSpec.euclidean())
        assert kernel_mi(ds, dm, KernelConfig(n_h=6)).bits == math.log2(5)

    def test_noise_scale(self):
        # responses concentrate around their sources at the requested spread
        ds, sources, _ = generate_toy(ToySpec(2, 4, 500, sigma2=0.04, seed=3))
        spread = ds.vectors - sources[ds.labels]
        assert np.std(spread) == pytest.approx(0.2, rel=0.1)


class TestTrueMi:
    def test_degenerate_variance_is_analytic(self):
        sources = np.zeros((8, 3))
        assert true_mi(sources, 0.0) == math.log2(8)
        assert true_mi(sources, 5e-11) == math.log2(8)

    def test_identical_sources_near_zero(self):
        sources = np.tile([0.25, -0.1], (6, 1))
        assert abs(true_mi(sources, 0.3, 4000, seed=0)) < 1e-9

    def test_quadrature_oracle_two_sources(self):
        sources = np.array([[-0.25], [0.25]])
        for sigma2 in (0.01, 0.0625, 0.25, 1.0):
            mc = true_mi(sources, sigma2, 10_000, seed=0)
            oracle = quadrature_mi_1d(sources, sigma2)
            assert abs(mc - oracle) <= 0.02

    def test_bounded_by_stimulus_entropy(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n_s = int(rng.integers(2, 8))
            sources = rng.uniform(-0.5, 0.5, size=(n_s, 3))
            mi = true_mi(sources, float(rng.uniform(0.01, 1.0)), 2000, seed=1)
            assert mi <= math.log2(n_s) + 1e-12

    def test_error_shrinks_with_sample_count(self):
        sources = np.array([[-0.3], [0.3]])
        reference = quadrature_mi_1d(sources, 0.09)

        def spread(mc_samples):
            vals = [true_mi(sources, 0.09, mc_samples, seed=s) for s in range(24)]
            return float(np.std(np.asarray(vals) - reference))

        small, large = spread(500), spread(8000)
        # fourfold sample count should shave the standard error by about half
        assert large < 0.6 * small

    def test_validation(self):
        with pytest.raises(ValueError):
            true_mi(np.zeros((2, 2)), -0.1)
        with pytest.raises(ValueError):
            true_mi(np.zeros((2, 2)), 0.5, mc_samples=0)
        with pytest.raises(ValueError):
            true_mi(np.zeros(3), 0.5)


class TestChiDensity:
    def test_one_dimension_is_half_normal(self):
        sigma = 0.4
        for d in (0.0, 0.1, 0.5, 1.3):
            half_normal = math.sqrt(2 / math.pi) / sigma * math.exp(-d * d / (2 * sigma**2))
            assert chi_density(d, 1, sigma) == pytest.approx(half_normal, rel=1e-12)

    def test_matches_scipy_chi(self):
        xs = np.linspace(0.0, 3.0, 50)
        for n_d in (1, 2, 3, 10):
            for sigma in (0.2, 1.0):
                mine = chi_density(xs, n_d, sigma)
                ref = stats.chi.pdf(xs, df=n_d, scale=sigma)
                assert np.allclose(mine, ref, rtol=1e-10, atol=1e-12)

    def test_integrates_to_one(self):
        for n_d in (1, 2, 3, 10):
            for sigma in (0.25, 0.8):
                val, _ = quad(lambda d: chi_density(d, n_d, sigma), 0.0, np.inf)
                assert val == pytest.approx(1.0, abs=1e-6)

    def test_mode_location(self):
        for n_d in (2, 3, 10):
            sigma = 0.6
            xs = np.linspace(1e-6, 5.0, 200_001)
            dens = chi_density(xs, n_d, sigma)
            mode = xs[int(np.argmax(dens))]
            assert mode == pytest.approx(sigma * math.sqrt(n_d - 1), abs=1e-3)

    def test_empirical_distances_fit(self):
        ds, sources, _ = generate_toy(ToySpec(5, 3, 400, sigma2=0.09, seed=8))
        dists = np.linalg.norm(ds.vectors - sources[ds.labels], axis=1)
        result = stats.kstest(dists, lambda x: stats.chi.cdf(x, df=3, scale=0.3))
        assert result.pvalue > 0.01

    def test_validation(self):
        with pytest.raises(ValueError):
            chi_density(0.5, 3, 0.0)
        with pytest.raises(ValueError):
            chi_density(-0.5, 3, 1.0)
        with pytest.raises(ValueError):
            chi_density(0.5, 0, 1.0)


@pytest.fixture(scope="module")
def small_run():
    protocol = BenchmarkProtocol(n_s=4, n_d=2, n_t=12, dataset_count=20)
    return run_benchmark(protocol, seed=5, mc_samples=2000, max_workers=2)


class TestRunBenchmark:
    def test_record_count_and_finiteness(self, small_run):
        assert len(small_run.records) == 20
        for r in small_run.records:
            for v in (r.true_bits, r.kernel_bits, r.hist_bits):
                assert math.isfinite(v)
            assert 0.0 <= r.true_bits <= math.log2(4)
            assert 0.0 <= r.sigma2 <= 1.0

    def test_pruned_bins_uniform(self, small_run):
        # by construction every tenth of [0, 1] holds dataset_count/10 sets
        us = [r.true_bits / math.log2(4) for r in small_run.records]
        counts = np.bincount([min(9, max(0, math.floor(u * 10))) for u in us], minlength=10)
        assert counts.tolist() == [2] * 10

    def test_summary_contents(self, small_run):
        s = small_run.summary
        assert s["accepted"] == 20 and s["shortfall"] == 0
        assert s["hist_width"] in s["widths"]
        for key in ("mean_abs_err_kernel", "mean_abs_err_histogram"):
            assert math.isfinite(s[key])

    def test_dataset_seed_regenerates(self, small_run):
        r = small_run.records[3]
        _, _, sigma2 = generate_toy(ToySpec(4, 2, 12, None, r.seed))
        assert sigma2 == r.sigma2

    def test_unpruned_accepts_everything(self):
        protocol = BenchmarkProtocol(n_s=3, n_d=2, n_t=10, dataset_count=6, prune=False)
        res = run_benchmark(protocol, seed=1, mc_samples=1000, max_workers=1)
        assert res.summary["attempts"] == 6
        assert len(res.records) == 6

    def test_prune_needs_divisible_count(self):
        with pytest.raises(ValueError):
            BenchmarkProtocol(n_s=3, n_d=2, n_t=10, dataset_count=7)

    def test_lambda_grid_validation(self):
        protocol = BenchmarkProtocol(n_s=3, n_d=2, n_t=10, dataset_count=6, prune=False)
        with pytest.raises(ValueError):
            run_benchmark(protocol, lambdas=(0.9, 1.0), mc_samples=500)
