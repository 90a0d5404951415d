"""Independent cross-checks of the analytic paths.

Each oracle recomputes a quantity by a different route (brute-force
simulation, closed form, alternative kernel backend) and reports whether the
two agree at the stated tolerance. ``run_all`` backs the ``validate-oracles``
CLI command.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import _kernels
from .capacity import HolevoParams, g_entropy, holevo_capacity
from .env import PhysicalEnvironment, validate
from .fading import (EnvelopeDistribution, FadingCapacityRequest, cqc_capacity,
                     fading_capacity, fading_capacity_mc)
from .noise import build_model, mixture_cdf, sample

REFERENCE_ENV = dict(bandwidth=1e4, frequency=1e8, temperature=290.0, photons=1000.0)


@dataclass(frozen=True)
class OracleResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.statistic:.6g} (limit {self.threshold:g}, {self.seconds:.2f}s)"


def reference_env(**overrides) -> PhysicalEnvironment:
    return validate(PhysicalEnvironment(**(REFERENCE_ENV | overrides)))


def brute_force_draws(model, count: int, seed: int) -> np.ndarray:
    """X ~ N(0, V) plus Y drawn from the discretised quantum weights."""
    rng = np.random.default_rng(seed)
    w = np.exp(model.y_logw - model.y_logw.max())
    w /= w.sum()
    y = rng.choice(model.y_nodes, size=count, p=w)
    x = rng.normal(0.0, math.sqrt(model.classical.variance), size=count)
    return x + y


def ks_statistic(draws: np.ndarray, cdf) -> float:
    return float(stats.kstest(draws, cdf).statistic)


def brute_force_ks(model=None, count: int = 100_000, seed: int = 7) -> float:
    model = model or build_model(reference_env())
    return ks_statistic(brute_force_draws(model, count, seed), model.cdf_at)


def sampler_self_ks(model=None, count: int = 100_000, seed: int = 11) -> float:
    model = model or build_model(reference_env())
    return ks_statistic(sample(model, count, seed), model.cdf_at)


def sample_mean_z(model=None, count: int = 1_000_000, seed: int = 13) -> float:
    """|sample mean - quadrature mean| in standard errors."""
    model = model or build_model(reference_env())
    s = sample(model, count, seed)
    se = s.std(ddof=1) / math.sqrt(count)
    return abs(s.mean() - model.mean()) / se


def sample_second_moment_z(model=None, count: int = 1_000_000, seed: int = 17) -> float:
    model = model or build_model(reference_env())
    s = sample(model, count, seed)
    sq = s * s
    quad = model.variance() + model.mean() ** 2
    return abs(sq.mean() - quad) / (sq.std(ddof=1) / math.sqrt(count))


def sample_variance_rel(model=None, count: int = 1_000_000, seed: int = 19) -> float:
    model = model or build_model(reference_env())
    s = sample(model, count, seed)
    return abs(s.var(ddof=1) - model.variance()) / model.variance()


def analytic_moment_errors(model=None) -> float:
    """Quadrature moments vs the exact X + Y moments (normal plus gamma)."""
    model = model or build_model(reference_env())
    p, v = model.photons, model.classical.variance
    mean_exact = p + 1.0
    var_exact = v + p + 1.0
    return max(abs(model.mean() - mean_exact) / math.sqrt(var_exact),
               abs(model.variance() - var_exact) / var_exact)


def gaussian_cdf_error(points: int = 20) -> float:
    """p = 0 is not a point mass here, so use a classical-dominated env.

    With N0 B tau / kT huge relative to the quantum scale the mixture CDF
    reduces to the normal CDF of the classical part shifted by E[Y] = 1.
    """
    env = reference_env(photons=0.0, noise_floor=1e-9)
    model = build_model(env)
    sigma = math.sqrt(model.classical.variance)
    n = np.linspace(-3 * sigma, 3 * sigma, points)
    got = mixture_cdf(n, env)
    want = special.ndtr((n - 1.0) / sigma)
    return float(np.max(np.abs(got - want)))


def grid_refinement_change(env=None) -> float:
    env = env or reference_env()
    z1 = build_model(env, freq_grid_points=2048).z_norm
    z2 = build_model(env, freq_grid_points=4096).z_norm
    return abs(z2 - z1) / z1


def backend_agreement(env=None) -> float:
    """Max relative difference between the numba and numpy kernels."""
    if not _kernels.HAVE_NUMBA:
        return 0.0
    env = env or reference_env()
    m = build_model(env)
    nb, npk = _kernels.backend("numba"), _kernels.backend("numpy")
    n = m.grid[::8].copy()
    a = nb["convolve_grid"](n, m.y_nodes, m.y_logw, m.classical.variance)
    b = npk["convolve_grid"](n, m.y_nodes, m.y_logw, m.classical.variance)
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def holevo_zero_noise_error() -> float:
    env = reference_env(photons=10.0)
    got = holevo_capacity(HolevoParams(env, 0.0, 1.0)).value
    x = env.signal_power / (env.hbar_f * env.bandwidth)
    return abs(got - g_entropy(x))


def fading_cross_z(seed: int = 42) -> float:
    env = reference_env()
    psd = 1e-26
    worst = 0.0
    for e in (EnvelopeDistribution.rayleigh(0.7), EnvelopeDistribution.lognormal(0.0, 0.5),
              EnvelopeDistribution.uniform(0.2, 1.4)):
        req = FadingCapacityRequest(env, e, psd, mc_samples=200_000, seed=seed)
        q, mc = fading_capacity(req), fading_capacity_mc(req)
        worst = max(worst, abs(q.value - mc.value) / mc.std_error)
    return worst


def deterministic_fading_error() -> float:
    env = reference_env()
    psd = 1e-26
    a = fading_capacity(FadingCapacityRequest(env, EnvelopeDistribution.deterministic(1.0), psd)).value
    b = cqc_capacity(env, psd).value
    return abs(a - b) / abs(b)


ORACLES = (
    ("brute-force convolution KS", brute_force_ks, 0.02),
    ("sampler self-KS", sampler_self_ks, 0.02),
    ("sample mean vs quadrature [SE]", sample_mean_z, 3.0),
    ("sample second moment vs quadrature [SE]", sample_second_moment_z, 3.0),
    ("sample variance vs quadrature [rel]", sample_variance_rel, 0.01),
    ("quadrature moments vs normal+gamma closed form", analytic_moment_errors, 1e-6),
    ("classical-limit CDF vs normal CDF", gaussian_cdf_error, 1e-6),
    ("Z_norm change on freq grid doubling", grid_refinement_change, 0.005),
    ("numba vs numpy kernels [rel]", backend_agreement, 1e-10),
    ("Holevo zero-noise vs g(S/hfB)", holevo_zero_noise_error, 1e-12),
    ("fading quadrature vs Monte Carlo [SE]", fading_cross_z, 3.0),
    ("deterministic fading vs CQC", deterministic_fading_error, 1e-10),
)


def run_all(names=None) -> list[OracleResult]:
    out = []
    for name, fn, limit in ORACLES:
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        stat = float(fn())
        out.append(OracleResult(name, bool(stat < limit), stat, limit, time.perf_counter() - t0))
    return out
