"""Capacity over a randomly scaled channel envelope, with a Monte Carlo twin.

The per-realisation SNR is ``z**2 S / (B N_xy)`` so that a unit envelope
reproduces :func:`cqc_capacity` exactly. The expectation is taken directly
over the envelope density, ``int B log2(1 + z**2 S/(B N_xy)) f_Z(z) dz``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import stats

from ._rng import spawn_generators
from .capacity import CapacityResult, Formula
from .env import PhysicalEnvironment, validate
from .errors import ConvergenceError, DomainError

_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = leggauss(_GL_ORDER)
_MC_CHUNK = 1 << 17
_UPPER_TAIL = 1e-9


class EnvelopeKind(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    RAYLEIGH = "rayleigh"
    LOGNORMAL = "lognormal"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class EnvelopeDistribution:
    """Channel amplitude gain law on ``[0, inf)``.

    Parameters by kind: deterministic ``z0``; rayleigh ``sigma``; lognormal
    ``mu, sigma`` (of ``log Z``); uniform ``a, b``.
    """

    kind: EnvelopeKind
    params: tuple[float, ...]
    _dist: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kind = EnvelopeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        p = tuple(float(v) for v in self.params)
        object.__setattr__(self, "params", p)
        dist = None
        if kind is EnvelopeKind.DETERMINISTIC:
            (z0,) = p
            if z0 < 0:
                raise DomainError("deterministic envelope must be >= 0")
        elif kind is EnvelopeKind.RAYLEIGH:
            (sigma,) = p
            if not sigma > 0:
                raise DomainError("rayleigh sigma must be > 0")
            dist = stats.rayleigh(scale=sigma)
        elif kind is EnvelopeKind.LOGNORMAL:
            mu, sigma = p
            if not sigma > 0:
                raise DomainError("lognormal sigma must be > 0")
            dist = stats.lognorm(s=sigma, scale=math.exp(mu))
        else:
            a, b = p
            if not 0 <= a < b:
                raise DomainError("uniform envelope needs 0 <= a < b")
            dist = stats.uniform(loc=a, scale=b - a)
        object.__setattr__(self, "_dist", dist)

    @classmethod
    def deterministic(cls, z0=1.0):
        return cls(EnvelopeKind.DETERMINISTIC, (z0,))

    @classmethod
    def rayleigh(cls, sigma):
        return cls(EnvelopeKind.RAYLEIGH, (sigma,))

    @classmethod
    def lognormal(cls, mu, sigma):
        return cls(EnvelopeKind.LOGNORMAL, (mu, sigma))

    @classmethod
    def uniform(cls, a, b):
        return cls(EnvelopeKind.UNIFORM, (a, b))

    @property
    def is_point_mass(self) -> bool:
        return self.kind is EnvelopeKind.DETERMINISTIC

    def pdf(self, z):
        if self.is_point_mass:
            raise DomainError("a point mass has no density")
        return self._dist.pdf(z)

    def second_moment(self) -> float:
        if self.is_point_mass:
            return self.params[0] ** 2
        return float(self._dist.moment(2))

    def support(self) -> tuple[float, float]:
        """Integration range: the exact support, cut at the 1-1e-9 quantile."""
        if self.is_point_mass:
            z0 = self.params[0]
            return z0, z0
        if self.kind is EnvelopeKind.UNIFORM:
            return self.params
        return 0.0, float(self._dist.isf(_UPPER_TAIL))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.is_point_mass:
            return np.full(size, self.params[0])
        return self._dist.rvs(size=size, random_state=rng)

    def describe(self) -> dict:
        return {"kind": self.kind.value, "params": list(self.params)}


@dataclass(frozen=True)
class FadingCapacityRequest:
    env: PhysicalEnvironment
    envelope: EnvelopeDistribution
    psd_value: float  # N_xy at env.frequency, W/Hz
    quadrature_points: int = _GL_ORDER
    mc_samples: int = 1_000_000
    seed: int = 42
    rel_tol: float = 1e-8
    max_panels: int = 1 << 14

    def __post_init__(self):
        if not self.psd_value > 0:
            raise DomainError(f"N_xy must be > 0, got {self.psd_value!r}")
        if self.quadrature_points < 16:
            raise DomainError("quadrature_points must be >= 16")


def psd_from_model(model, f=None, **psd_kw) -> float:
    """|N_xy| of a hybrid-noise model at ``f`` (default: the model's own f)."""
    from .noise import noise_psd

    return noise_psd(model, model.env.frequency if f is None else f, **psd_kw).value


def cqc_capacity(env: PhysicalEnvironment, psd_value: float) -> CapacityResult:
    """``B log2(1 + S / (B N_xy))`` bits/s."""
    env = validate(env)
    if not psd_value > 0:
        raise DomainError(f"N_xy must be > 0, got {psd_value!r}")
    b = env.bandwidth
    snr = env.signal_power / (b * psd_value)
    return CapacityResult(
        b * math.log2(1.0 + snr), Formula.CQC,
        inputs={"bandwidth": b, "signal_power": env.signal_power,
                "psd_value": psd_value, "snr": snr},
    )


def _integrand(z, b, rho):
    return b * np.log2(1.0 + rho * z * z)


def _fading_inputs(env, req):
    return {"bandwidth": env.bandwidth, "signal_power": env.signal_power,
            "psd_value": req.psd_value, "envelope": req.envelope.describe(),
            "rho": env.signal_power / (env.bandwidth * req.psd_value)}


def _composite_gl(fun, lo, hi, panels, nodes, weights):
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    z = mid[:, None] + half[:, None] * nodes[None, :]
    return float(np.sum(half[:, None] * weights[None, :] * fun(z)))


def fading_capacity(req: FadingCapacityRequest) -> CapacityResult:
    """Expected capacity by composite Gauss-Legendre quadrature.

    The lognormal is integrated in ``u = ln z`` between its 1e-9 and
    1 - 1e-9 quantiles, where the weight is a plain normal density; the
    other envelopes are integrated in ``z``. Panels double from 4 until the relative change is below ``rel_tol``;
    ``error_estimate`` holds the last change.
    """
    env = validate(req.env)
    b = env.bandwidth
    rho = env.signal_power / (b * req.psd_value)
    inputs = _fading_inputs(env, req)
    if req.envelope.is_point_mass:
        z0 = req.envelope.params[0]
        value = b * math.log2(1.0 + rho * z0 * z0)
        return CapacityResult(value, Formula.FADING_CQC, inputs=inputs, error_estimate=0.0)

    if req.quadrature_points == _GL_ORDER:
        nodes, weights = _GL_NODES, _GL_WEIGHTS
    else:
        nodes, weights = leggauss(req.quadrature_points)
    lo, hi = req.envelope.support()
    dist = req.envelope

    def fun(z):
        return _integrand(z, b, rho) * dist.pdf(z)

    if dist.kind is EnvelopeKind.LOGNORMAL:
        mu, sigma = dist.params
        lo = math.log(float(dist._dist.ppf(_UPPER_TAIL)))
        hi = math.log(hi)

        def fun(u):
            return _integrand(np.exp(u), b, rho) * stats.norm.pdf(u, mu, sigma)

    panels = 4
    prev = _composite_gl(fun, lo, hi, panels, nodes, weights)
    while panels < req.max_panels:
        panels *= 2
        cur = _composite_gl(fun, lo, hi, panels, nodes, weights)
        change = abs(cur - prev)
        if change <= req.rel_tol * abs(cur) or cur == prev:
            inputs["panels"] = panels
            return CapacityResult(cur, Formula.FADING_CQC, inputs=inputs, error_estimate=change)
        prev = cur
    raise ConvergenceError(
        f"quadrature did not reach rel_tol={req.rel_tol} within {req.max_panels} panels"
    )


def fading_capacity_mc(req: FadingCapacityRequest, workers: int = 1) -> CapacityResult:
    """Monte Carlo estimate of :func:`fading_capacity` with its standard error.

    Samples are drawn in fixed-size chunks, chunk ``k`` from child stream
    ``k`` of ``SeedSequence(seed)``, so the estimate is identical for any
    ``workers``.
    """
    if req.mc_samples < 1000:
        raise DomainError(f"mc_samples must be >= 1000, got {req.mc_samples!r}")
    env = validate(req.env)
    b = env.bandwidth
    rho = env.signal_power / (b * req.psd_value)
    sizes = [_MC_CHUNK] * (req.mc_samples // _MC_CHUNK)
    if req.mc_samples % _MC_CHUNK:
        sizes.append(req.mc_samples % _MC_CHUNK)
    rngs = spawn_generators(req.seed, len(sizes))

    def chunk(k):
        c = _integrand(req.envelope.sample(rngs[k], sizes[k]), b, rho)
        m = float(c.mean())
        return c.size, m, float(np.sum((c - m) ** 2))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(chunk, range(len(sizes))))
    else:
        parts = [chunk(k) for k in range(len(sizes))]
    # pairwise merge of (count, mean, M2), in chunk order
    n, mean, m2 = parts[0]
    for nk, mk, m2k in parts[1:]:
        tot = n + nk
        delta = mk - mean
        mean += delta * nk / tot
        m2 += m2k + delta * delta * n * nk / tot
        n = tot
    # a point mass has no spread; skip the rounding residue of the merge
    std_error = 0.0 if req.envelope.is_point_mass else math.sqrt(m2 / (n - 1) / n)
    inputs = _fading_inputs(env, req) | {"mc_samples": n, "seed": req.seed}
    return CapacityResult(mean, Formula.FADING_CQC, inputs=inputs, std_error=std_error)
