"""Additive classical-Gaussian plus quantum-Poisson noise.

The mixed noise is ``N = X + Y`` with ``X ~ Normal(0, V)`` and ``Y`` carrying
the density ``y**p exp(-y) / p!`` on ``y >= 0``. Amplitudes are dimensionless:
the power unit is the thermal power ``k T / tau``, so the classical variance
is ``V = N0 B tau / (k T)`` and any variance converts back to watts by
multiplying by ``k T / tau``.

The convolution over ``y`` is a trapezoid sum on a uniform grid of dummy
photon frequencies ``f'`` mapped to ``y = hbar f' tau / (k T)``; cell widths
are measured in ``y`` so the raw density is a proper Riemann sum.

Two summation ranges are supported:

* ``"complete"`` sums over the whole support of ``Y`` (the true convolution),
* ``"printed"`` stops at ``y = n`` as in the published density, which zeroes
  the density for ``n < 0`` and keeps only ``X >= 0``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from . import _kernels
from .env import PhysicalEnvironment, validate
from .errors import DomainError

DEFAULT_GRID_POINTS = 4096
DEFAULT_FREQ_GRID_POINTS = 2048
DEFAULT_SAMPLE_COUNT = 10
DEFAULT_SEED = 42

_Y_TAIL = 1e-12
_N_SIGMAS = 8.0
SUMMATION_RANGES = ("complete", "printed")
MOMENT_MODES = ("paper_formula", "sample_based")
PSD_VARIANCES = ("paper_formula", "quadrature")


@dataclass(frozen=True)
class ClassicalNoise:
    variance: float

    def __post_init__(self):
        if not (self.variance > 0 and math.isfinite(self.variance)):
            raise DomainError(
                f"classical variance must be finite and > 0, got {self.variance!r}"
            )


@dataclass(frozen=True)
class QuantumNoise:
    photons: float
    # hbar tau / (k T): converts a dummy frequency in Hz to y
    y_per_hz: float
    # hbar f tau / (k T) at the operating frequency
    scale: float

    def __post_init__(self):
        if self.photons < 0:
            raise DomainError(f"photon count must be >= 0, got {self.photons!r}")
        if not self.scale > 0:
            raise DomainError(f"quantum scale must be > 0, got {self.scale!r}")

    @property
    def log_norm(self) -> float:
        return float(special.gammaln(self.photons + 1.0))

    def log_density(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            lp = np.where(y > 0, special.xlogy(self.photons, y), 0.0)
            if self.photons > 0:
                lp = np.where(y > 0, lp, -np.inf)
        return lp - y - self.log_norm

    def support(self, tail: float = _Y_TAIL) -> tuple[float, float]:
        k = self.photons + 1.0
        return float(stats.gamma.ppf(tail, k)), float(stats.gamma.isf(tail, k))


@dataclass(frozen=True, eq=False)
class HybridNoiseModel:
    """Tabulated mixed-noise distribution.

    ``pdf_raw`` is the discretised convolution before renormalisation;
    ``pdf = pdf_raw / z_norm``; ``cdf`` is its cumulative trapezoid, pinned
    to end at exactly 1.
    """

    env: PhysicalEnvironment
    classical: ClassicalNoise
    quantum: QuantumNoise
    grid: np.ndarray
    pdf_raw: np.ndarray
    z_norm: float
    pdf: np.ndarray
    cdf: np.ndarray
    freq_grid_points: int
    summation_range: str
    y_nodes: np.ndarray = field(repr=False)
    y_logw: np.ndarray = field(repr=False)

    @property
    def photons(self) -> float:
        return self.quantum.photons

    @property
    def variance_unit_w(self) -> float:
        """Watts per unit of dimensionless variance (``k T / tau``)."""
        return self.env.kT / self.env.interval

    @property
    def freq_nodes(self) -> np.ndarray:
        return self.y_nodes / self.quantum.y_per_hz

    def raw_density(self, n) -> np.ndarray:
        n = np.atleast_1d(np.asarray(n, dtype=float))
        v = self.classical.variance
        if self.summation_range == "printed":
            return _kernels.convolve_printed(
                n, float(self.photons), self.quantum.log_norm, v, self.freq_grid_points
            )
        return _kernels.convolve_grid(n, self.y_nodes, self.y_logw, v) / math.sqrt(
            2.0 * math.pi * v
        )

    def density(self, n) -> np.ndarray:
        return self.raw_density(n) / self.z_norm

    def cdf_at(self, n) -> np.ndarray:
        return np.interp(n, self.grid, self.cdf, left=0.0, right=1.0)

    def mean(self) -> float:
        return float(np.trapezoid(self.grid * self.pdf, self.grid))

    def variance(self) -> float:
        m = self.mean()
        return float(np.trapezoid((self.grid - m) ** 2 * self.pdf, self.grid))

    def csv_rows(self):
        yield ("n", "pdf_raw", "pdf", "cdf")
        for row in zip(self.grid, self.pdf_raw, self.pdf, self.cdf):
            yield tuple(_fmt(v) for v in row)


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    second_moment: float
    variance: float
    sample_count: int
    samples: np.ndarray = field(repr=False)
    mode: str = "sample_based"


@dataclass(frozen=True)
class NoisePSD:
    freq: float
    value_complex: complex
    value: float
    variance: float
    variance_mode: str


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _components(env: PhysicalEnvironment, photons=None):
    env = validate(env)
    p = env.photons if photons is None else float(photons)
    c = env.constants
    kt = c.boltzmann * env.temperature
    classical = ClassicalNoise(env.noise_floor * env.bandwidth * env.interval / kt)
    y_per_hz = c.hbar * env.interval / kt
    quantum = QuantumNoise(p, y_per_hz, y_per_hz * env.frequency)
    return env, classical, quantum


def _trap_log_weights(m: int, h: float) -> np.ndarray:
    w = np.full(m, h)
    w[0] = w[-1] = 0.5 * h
    return np.log(w)


def build_model(
    env: PhysicalEnvironment,
    photons: float | None = None,
    *,
    grid_points: int = DEFAULT_GRID_POINTS,
    freq_grid_points: int = DEFAULT_FREQ_GRID_POINTS,
    summation_range: str = "complete",
) -> HybridNoiseModel:
    """Tabulate the mixed-noise density for ``env``.

    ``photons`` overrides ``env.photons`` for the quantum term only.
    """
    if summation_range not in SUMMATION_RANGES:
        raise DomainError(f"summation_range must be one of {SUMMATION_RANGES}")
    if grid_points < 16 or freq_grid_points < 2:
        raise DomainError("grid_points >= 16 and freq_grid_points >= 2 required")
    env, classical, quantum = _components(env, photons)
    sigma = math.sqrt(classical.variance)
    y_lo, y_hi = quantum.support()

    # dummy frequencies f' in [0, y_hi / y_per_hz], mapped to y
    f_nodes = np.linspace(0.0, y_hi / quantum.y_per_hz, freq_grid_points)
    y_nodes = f_nodes * quantum.y_per_hz
    y_nodes[-1] = y_hi
    y_logw = quantum.log_density(y_nodes) + _trap_log_weights(
        freq_grid_points, y_hi / (freq_grid_points - 1)
    )

    grid = np.linspace(y_lo - _N_SIGMAS * sigma, y_hi + _N_SIGMAS * sigma, grid_points)
    model = HybridNoiseModel(
        env=env, classical=classical, quantum=quantum, grid=grid,
        pdf_raw=np.empty(0), z_norm=1.0, pdf=np.empty(0), cdf=np.empty(0),
        freq_grid_points=freq_grid_points, summation_range=summation_range,
        y_nodes=y_nodes, y_logw=y_logw,
    )
    raw = model.raw_density(grid)
    z = float(np.trapezoid(raw, grid))
    if not (z > 0 and math.isfinite(z)):
        raise DomainError(f"normalisation constant is {z!r}; grid cannot resolve the density")
    pdf = raw / z
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid))))
    cdf /= cdf[-1]
    object.__setattr__(model, "pdf_raw", raw)
    object.__setattr__(model, "z_norm", z)
    object.__setattr__(model, "pdf", pdf)
    object.__setattr__(model, "cdf", cdf)
    return model


def mixture_pdf(n, env: PhysicalEnvironment, photons=None, **model_kw):
    """Raw and renormalised mixed-noise density at ``n``.

    Returns ``(raw, pdf)``. With ``summation_range="printed"`` the raw value
    is exactly 0 for ``n < 0``.
    """
    model = build_model(env, photons, **model_kw)
    raw = model.raw_density(n)
    return raw, raw / model.z_norm


def mixture_cdf(n, env: PhysicalEnvironment, photons=None, *,
                freq_grid_points: int = DEFAULT_FREQ_GRID_POINTS) -> np.ndarray:
    """``sum_y F_X(n - y) P_Y(y)`` over the discretised support of ``Y``.

    The ``P_Y`` weights are renormalised to sum to one, so the result runs
    from 0 to 1 and is clamped there.
    """
    env, classical, quantum = _components(env, photons)
    _, y_hi = quantum.support()
    y = np.linspace(0.0, y_hi, freq_grid_points)
    logw = quantum.log_density(y) + _trap_log_weights(freq_grid_points, y_hi / (freq_grid_points - 1))
    w = np.exp(logw - logw.max())
    w /= w.sum()
    n = np.atleast_1d(np.asarray(n, dtype=float))
    out = _kernels.cdf_grid(n, y, w, math.sqrt(classical.variance))
    return np.clip(out, 0.0, 1.0)


def sample(model: HybridNoiseModel, count: int, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Inverse-CDF draws from the renormalised density (deterministic per seed)."""
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count!r}")
    u = np.random.default_rng(seed).random(count)
    return _inverse_cdf(model, u)


def _inverse_cdf(model: HybridNoiseModel, u: np.ndarray) -> np.ndarray:
    cdf, keep = np.unique(model.cdf, return_index=True)
    return np.interp(u, cdf, model.grid[keep])


def moments(model: HybridNoiseModel, M: int = DEFAULT_SAMPLE_COUNT,
            mode: str = "paper_formula", seed: int = DEFAULT_SEED) -> MomentEstimate:
    """Mean, second moment and variance from ``M`` drawn noise samples.

    ``paper_formula`` evaluates the published per-sample sums (summation
    range ``y in [0, n_i]``); note that its second moment places ``n_i**2``
    inside the density, so ``variance != second - mean**2`` in that mode.
    ``sample_based`` returns ordinary empirical moments.
    """
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M!r}")
    if mode not in MOMENT_MODES:
        raise DomainError(f"mode must be one of {MOMENT_MODES}")
    ni = sample(model, M, seed)
    if mode == "sample_based":
        mean = float(ni.mean())
        second = float(np.mean(ni * ni))
        return MomentEstimate(mean, second, max(second - mean * mean, 0.0), M, ni, mode)
    mean_t, second_t, cross_t = _published_terms(model, ni, 1.0)
    return MomentEstimate(float(mean_t.sum()), float(second_t.sum()),
                          float(np.sum(second_t - cross_t)), M, ni, mode)


def _published_terms(model, ni, scale):
    return _kernels.published_sums(
        np.ascontiguousarray(ni, dtype=float), float(model.photons),
        model.quantum.log_norm, model.classical.variance,
        model.freq_grid_points, float(scale),
    )


def variance_in_frequency(model: HybridNoiseModel, M: int = DEFAULT_SAMPLE_COUNT,
                          seed: int = DEFAULT_SEED, samples=None) -> float:
    """Published variance written over dummy frequencies.

    For each sample ``n_i`` the inner sum runs over ``f' in [0, k T n_i /
    (hbar tau)]`` with ``y = hbar f' tau / (k T)``. The value can be negative.
    """
    ni = sample(model, M, seed) if samples is None else np.asarray(samples, dtype=float)
    _, second_t, cross_t = _published_terms(model, ni, model.quantum.y_per_hz)
    return float(np.sum(second_t - cross_t))


def noise_psd(model: HybridNoiseModel, f: float, *, M: int = DEFAULT_SAMPLE_COUNT,
              seed: int = DEFAULT_SEED, variance: str = "paper_formula") -> NoisePSD:
    """Mixed-noise PSD ``Var[N] / (j 2 pi f)`` in W/Hz.

    ``variance="paper_formula"`` uses :func:`variance_in_frequency`;
    ``"quadrature"`` uses the variance of the renormalised density.
    """
    if not f > 0:
        raise DomainError(f"PSD needs f > 0, got {f!r}")
    if variance == "paper_formula":
        var = variance_in_frequency(model, M, seed)
    elif variance == "quadrature":
        var = model.variance()
    else:
        raise DomainError(f"variance must be one of {PSD_VARIANCES}")
    value = var * model.variance_unit_w / (2j * math.pi * f)
    return NoisePSD(float(f), complex(value), float(abs(value)), var, variance)


def psd_csv_rows(psds):
    yield ("f_hz", "psd_complex_re", "psd_complex_im", "psd_mag")
    for s in psds:
        yield (_fmt(s.freq), _fmt(s.value_complex.real), _fmt(s.value_complex.imag), _fmt(s.value))


def write_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows(rows)


# ---------------------------------------------------------- shape summaries


def gaussian_fit(model: HybridNoiseModel) -> tuple[float, float]:
    """Moment-matched normal (mean, std) of the renormalised density."""
    return model.mean(), math.sqrt(model.variance())


def tail_mass(model: HybridNoiseModel, k: float = 3.0) -> float:
    """Probability outside ``mean +- k std`` of the moment-matched normal."""
    mu, sd = gaussian_fit(model)
    inside = model.cdf_at(mu + k * sd) - model.cdf_at(mu - k * sd)
    return float(1.0 - inside)


def excess_tail_mass(model: HybridNoiseModel, k: float = 3.0) -> float:
    """:func:`tail_mass` minus the normal's own ``2 Q(k)``."""
    return tail_mass(model, k) - 2.0 * float(stats.norm.sf(k))


def gaussian_overlap(model: HybridNoiseModel) -> float:
    """``integral min(pdf, normal fit)``: mass explained by the Gaussian fit."""
    mu, sd = gaussian_fit(model)
    g = stats.norm.pdf(model.grid, mu, sd)
    return float(np.trapezoid(np.minimum(model.pdf, g), model.grid))
