import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from hybridcap.env import PhysicalConstants, PhysicalEnvironment, validate
from hybridcap.errors import DomainError
from hybridcap.noise import (build_model, excess_tail_mass, gaussian_overlap, mixture_cdf,
                             mixture_pdf, moments, noise_psd, psd_csv_rows, sample, tail_mass,
                             variance_in_frequency, write_csv)

from conftest import make_env


class TestModel:
    def test_pdf_contract(self, ref_model):
        m = ref_model
        assert np.all(np.diff(m.grid) > 0)
        assert np.all(m.pdf >= 0)
        assert np.trapezoid(m.pdf, m.grid) == pytest.approx(1.0, abs=1e-6)
        assert np.all(np.diff(m.cdf) >= 0)
        assert m.cdf[-1] - m.cdf[0] >= 1 - 1e-6
        assert abs(m.cdf[-1] - 1.0) <= 1e-9
        assert 0 < m.z_norm < math.inf

    def test_moments_match_gamma_plus_normal(self, ref_model):
        # Y ~ Gamma(p + 1) in its natural variable, X ~ N(0, V)
        m = ref_model
        assert m.mean() == pytest.approx(m.photons + 1, rel=1e-9)
        assert m.variance() == pytest.approx(m.classical.variance + m.photons + 1, rel=1e-8)

    def test_freq_grid_refinement(self, ref_env):
        z1 = build_model(ref_env, freq_grid_points=2048).z_norm
        z2 = build_model(ref_env, freq_grid_points=4096).z_norm
        assert abs(z2 - z1) / z1 < 5e-3

    def test_bad_summation_range(self, ref_env):
        with pytest.raises(DomainError):
            build_model(ref_env, summation_range="half")

    def test_small_grid_rejected(self, ref_env):
        with pytest.raises(DomainError):
            build_model(ref_env, grid_points=4)

    def test_csv_rows_header(self, ref_model, tmp_path):
        rows = list(ref_model.csv_rows())
        assert rows[0] == ("n", "pdf_raw", "pdf", "cdf")
        path = tmp_path / "pdf.csv"
        write_csv(rows[:5], path)
        raw = path.read_bytes()
        assert raw.startswith(b"n,pdf_raw,pdf,cdf\n") and b"\r" not in raw


class TestPdfCdf:
    def test_printed_range_zero_below_origin(self, ref_env):
        raw, pdf = mixture_pdf(np.array([-100.0, -1.0, -1e-9]), ref_env, summation_range="printed")
        assert np.all(raw == 0.0) and np.all(pdf == 0.0)

    def test_printed_range_positive_above_origin(self, ref_env):
        raw, _ = mixture_pdf(np.array([900.0, 1000.0]), ref_env, summation_range="printed")
        assert np.all(raw > 0)

    def test_cdf_limits(self, ref_env, ref_model):
        sigma = math.sqrt(ref_model.classical.variance)
        lo = ref_model.grid[0] - 10 * sigma
        hi = ref_model.grid[-1] + 10 * sigma
        c = mixture_cdf(np.array([lo, hi]), ref_env)
        assert c[0] == pytest.approx(0.0, abs=1e-9)
        assert c[1] == pytest.approx(1.0, abs=1e-9)

    def test_cdf_monotone_and_matches_model(self, ref_env, ref_model):
        n = ref_model.grid[::64]
        c = mixture_cdf(n, ref_env)
        assert np.all(np.diff(c) >= 0)
        np.testing.assert_allclose(c, ref_model.cdf_at(n), atol=1e-6)

    def test_zero_photons_cdf_is_normal(self):
        # p = 0 leaves Y ~ Exp(1) in its natural variable; a large classical
        # variance makes that shift negligible next to the Gaussian spread
        env = make_env(photons=0.0, noise_floor=1e-9)
        m = build_model(env)
        sigma = math.sqrt(m.classical.variance)
        n = np.linspace(-3 * sigma, 3 * sigma, 20)
        got = mixture_cdf(n, env)
        np.testing.assert_allclose(got, special.ndtr(n / sigma), atol=1e-6)


class TestSampler:
    def test_deterministic(self, ref_model):
        np.testing.assert_array_equal(sample(ref_model, 1000, 3), sample(ref_model, 1000, 3))

    def test_count_domain(self, ref_model):
        with pytest.raises(DomainError):
            sample(ref_model, 0)

    def test_self_ks(self, ref_model):
        s = sample(ref_model, 100_000, 11)
        assert stats.kstest(s, ref_model.cdf_at).statistic < 0.02

    def test_mean_within_three_se(self, ref_model):
        s = sample(ref_model, 1_000_000, 13)
        se = s.std(ddof=1) / 1000.0
        assert abs(s.mean() - ref_model.mean()) < 3 * se

    def test_variance_relative_error(self, ref_model):
        s = sample(ref_model, 1_000_000, 19)
        assert abs(s.var() - ref_model.variance()) / ref_model.variance() < 0.01

    def test_monte_carlo_rate(self, ref_model):
        # error of the mean should shrink roughly by 2 when n quadruples
        errs = []
        for n in (10_000, 40_000, 160_000):
            e = [abs(sample(ref_model, n, s).mean() - ref_model.mean()) for s in range(40)]
            errs.append(np.sqrt(np.mean(np.square(e))))
        r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
        assert 1.4 < r1 < 2.8 and 1.4 < r2 < 2.8


class TestMoments:
    def test_default_sample_count(self, ref_model):
        est = moments(ref_model)
        assert est.sample_count == 10 and est.samples.shape == (10,)

    def test_bad_m(self, ref_model):
        with pytest.raises(DomainError):
            moments(ref_model, 0)

    def test_sample_mode_identity(self, ref_model):
        est = moments(ref_model, 5000, "sample_based")
        assert est.variance == pytest.approx(est.second_moment - est.mean ** 2)
        assert est.variance >= 0

    def test_gaussian_dominated_mean_near_zero(self):
        env = make_env(photons=0.0, noise_floor=1e-9)
        m = build_model(env)
        est = moments(m, 100_000, "sample_based", seed=4)
        se = math.sqrt(est.variance / est.sample_count)
        assert abs(est.mean) < 3 * se

    def test_published_mode_deterministic(self, ref_model):
        a, b = moments(ref_model), moments(ref_model)
        assert a.mean == b.mean and a.variance == b.variance

    def test_published_mode_matches_hand_sum(self, ref_model):
        # independent per-sample trapezoid evaluation of the published mean
        m = ref_model
        est = moments(m, 3, seed=9)
        v, p = m.classical.variance, m.photons
        total = 0.0
        for x in est.samples:
            y = np.linspace(0.0, x, m.freq_grid_points)
            fy = stats.gamma(p + 1).pdf(y)
            fx = stats.norm(0, math.sqrt(v)).pdf(x - y)
            total += x * np.trapezoid(fx * fy, y)
        assert est.mean == pytest.approx(total, rel=1e-9)


def _toy_env(p=2.0, var=4.0):
    # hbar = K = T = tau = 1 so K T / (hbar tau) = 1 and y coincides with f
    c = PhysicalConstants(hbar=1.0, boltzmann=1.0)
    b = 2.0
    return validate(PhysicalEnvironment(bandwidth=b, frequency=5.0, temperature=1.0,
                                        interval=1.0, photons=p, noise_floor=var / b,
                                        constants=c))


def _printed_frequency_variance_toy(samples, p, var, m):
    """The published frequency-domain variance, term by term, in toy units."""
    total = 0.0
    for n in samples:
        f = np.linspace(0.0, n, m)
        w = np.full(m, n / (m - 1))
        w[0] = w[-1] = 0.5 * w[0]
        first = np.array([
            n * n * math.exp(-n ** 4 / (2 * var)) / (math.gamma(p + 1) * math.sqrt(2 * math.pi * var))
            * fk ** p * math.exp(n * n * fk / var - fk - fk * fk / (2 * var))
            for fk in f
        ])
        second = np.array([
            n * n * math.exp(-n * n / var) / (math.gamma(p + 1) ** 2 * 2 * math.pi * var)
            * fk ** (2 * p) * math.exp(2 * n * fk / var - 2 * fk - fk * fk / var)
            for fk in f
        ])
        total += float(np.sum(w * (first - second)))
    return total


def test_frequency_variance_matches_printed_toy_units():
    env = _toy_env()
    m = build_model(env, freq_grid_points=257)
    samples = np.array([0.5, 1.0, 1.5, 2.0, 3.0])
    got = variance_in_frequency(m, samples=samples)
    want = _printed_frequency_variance_toy(samples, 2.0, m.classical.variance, 257)
    assert got == pytest.approx(want, rel=1e-9)


def test_frequency_variance_equals_published_moments():
    env = _toy_env(p=3.0)
    m = build_model(env, freq_grid_points=257)
    est = moments(m, 5, seed=1)
    assert variance_in_frequency(m, 5, seed=1) == pytest.approx(est.variance, rel=1e-9)


def test_frequency_variance_zero_sample_vanishes():
    env = make_env(photons=0.0)
    m = build_model(env)
    assert variance_in_frequency(m, samples=np.array([0.0])) == 0.0


def test_published_variance_sign_finding():
    """The published variance is checked against the sample variance sign.

    For every environment here the sample-based variance is positive while
    the published form is negative: once n_i**2 sits far above Y's support
    its first term underflows and only the subtracted cross term remains.
    The decisions ledger records this finding.
    """
    rng = np.random.default_rng(0)
    signs = []
    for _ in range(20):
        env = make_env(bandwidth=10 ** rng.uniform(2, 6), frequency=10 ** rng.uniform(6, 10),
                       temperature=rng.uniform(50, 800), photons=float(rng.integers(0, 5000)))
        m = build_model(env, grid_points=1024, freq_grid_points=512)
        pub = variance_in_frequency(m, seed=42)
        smp = moments(m, 10, "sample_based", seed=42).variance
        assert math.isfinite(pub) and smp > 0
        signs.append(pub >= 0)
    assert not any(signs), "published variance became nonnegative; revisit the ledger finding"


class TestPSD:
    def test_one_over_f(self, ref_model):
        a = noise_psd(ref_model, 1e8)
        b = noise_psd(ref_model, 2e8)
        assert b.value == pytest.approx(a.value / 2, rel=1e-12)
        assert a.value >= 0 and math.isfinite(a.value)
        assert a.value_complex.real == 0.0

    def test_f_zero(self, ref_model):
        with pytest.raises(DomainError):
            noise_psd(ref_model, 0.0)

    def test_quadrature_mode(self, ref_model):
        psd = noise_psd(ref_model, 1e8, variance="quadrature")
        want = ref_model.variance() * ref_model.variance_unit_w / (2 * math.pi * 1e8)
        assert psd.value == pytest.approx(want, rel=1e-12)

    def test_bad_variance_mode(self, ref_model):
        with pytest.raises(DomainError):
            noise_psd(ref_model, 1e8, variance="guess")

    def test_csv_header(self, ref_model):
        rows = list(psd_csv_rows([noise_psd(ref_model, 1e8)]))
        assert rows[0] == ("f_hz", "psd_complex_re", "psd_complex_im", "psd_mag")
        assert float(rows[1][3]) == noise_psd(ref_model, 1e8).value


class TestShape:
    def test_tail_ordering(self):
        low = build_model(make_env(photons=100.0))
        high = build_model(make_env(photons=5000.0))
        assert tail_mass(high) > tail_mass(low)
        assert excess_tail_mass(high) > excess_tail_mass(low)

    def test_moderate_p_gaussian_core(self):
        assert gaussian_overlap(build_model(make_env(photons=1000.0))) >= 0.95


@settings(max_examples=15, deadline=None)
@given(p=st.floats(0, 3000), t=st.floats(50, 900), logb=st.floats(2, 6))
def test_model_normalised_property(p, t, logb):
    m = build_model(make_env(photons=p, temperature=t, bandwidth=10 ** logb),
                    grid_points=512, freq_grid_points=256)
    assert np.all(m.pdf >= 0)
    assert np.trapezoid(m.pdf, m.grid) == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(m.cdf) >= 0)
