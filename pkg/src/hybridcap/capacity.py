"""Single-channel closed-form capacities.

Shannon, linear quantum, wave- and particle-regime approximations, the Holevo
bound, the LSD quantum capacity and the entanglement-assisted capacity. All
logs are base 2 and ``0 * log2(0)`` is taken as 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from .env import PhysicalEnvironment, validate
from .errors import DomainError, RegimeError


class Formula(str, enum.Enum):
    SHANNON = "Shannon"
    QUANTUM_LINEAR = "QuantumLinear"
    WAVE_REGIME = "WaveRegime"
    PARTICLE_REGIME = "ParticleRegime"
    HOLEVO = "Holevo"
    LSD = "LSD"
    EA_CLASSICAL = "EAClassical"
    CQC = "CQC"
    FADING_CQC = "FadingCQC"


@dataclass(frozen=True)
class CapacityResult:
    """A capacity value plus what produced it.

    ``value`` is bits/s, or bits/s/Hz when ``normalized`` is set. LSD may
    return ``inf`` with ``diverged=True`` at unit amplification.
    """

    value: float
    formula: Formula
    normalized: bool = False
    inputs: dict = field(default_factory=dict)
    diverged: bool = False
    error_estimate: float | None = None
    std_error: float | None = None

    def per_hertz(self) -> "CapacityResult":
        if self.normalized:
            return self
        b = self.inputs.get("bandwidth")
        if b is None:
            raise DomainError(f"{self.formula.value} result has no bandwidth to normalize by")
        se = None if self.std_error is None else self.std_error / b
        err = None if self.error_estimate is None else self.error_estimate / b
        return replace(self, value=self.value / b, normalized=True,
                       std_error=se, error_estimate=err)


def xlog2x(x: float) -> float:
    """``x * log2(x)`` with the 0 * log2(0) = 0 convention."""
    if x < 0:
        raise DomainError(f"x*log2(x) undefined for x={x!r}")
    return 0.0 if x == 0 else x * math.log2(x)


def shannon_capacity(signal_power, noise_floor, bandwidth) -> CapacityResult:
    if not noise_floor > 0:
        raise DomainError(f"noise_floor must be > 0, got {noise_floor!r}")
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be > 0, got {bandwidth!r}")
    if signal_power < 0:
        raise DomainError(f"signal power must be >= 0, got {signal_power!r}")
    snr = signal_power / (noise_floor * bandwidth)
    return CapacityResult(
        bandwidth * math.log2(1.0 + snr),
        Formula.SHANNON,
        inputs={"signal_power": signal_power, "noise_floor": noise_floor,
                "bandwidth": bandwidth, "snr": snr},
    )


def _env_inputs(env: PhysicalEnvironment) -> dict:
    return {"bandwidth": env.bandwidth, "frequency": env.frequency,
            "photons": env.photons, "signal_power": env.signal_power}


def quantum_linear_capacity(env: PhysicalEnvironment) -> CapacityResult:
    env = validate(env)
    return CapacityResult(env.bandwidth * math.log2(1.0 + env.photons),
                          Formula.QUANTUM_LINEAR, inputs=_env_inputs(env))


def wave_regime_capacity(env: PhysicalEnvironment, gamma_const: float = 1.0) -> CapacityResult:
    """``B log2(gamma p)``; requires ``gamma p > 1`` (many photons per mode)."""
    env = validate(env)
    arg = gamma_const * env.photons
    if not arg > 1:
        raise RegimeError(f"wave regime needs gamma*p > 1, got {arg!r}")
    inputs = _env_inputs(env) | {"gamma_const": gamma_const}
    return CapacityResult(env.bandwidth * math.log2(arg), Formula.WAVE_REGIME, inputs=inputs)


def particle_regime_capacity(env: PhysicalEnvironment) -> CapacityResult:
    """``B p log2(1/p)``; requires ``p < 1`` (many modes per photon)."""
    env = validate(env)
    p = env.photons
    if p >= 1:
        raise RegimeError(f"particle regime needs p < 1, got {p!r}")
    value = 0.0 if p == 0 else -env.bandwidth * xlog2x(p)
    return CapacityResult(value, Formula.PARTICLE_REGIME, inputs=_env_inputs(env))


@dataclass(frozen=True)
class HolevoParams:
    env: PhysicalEnvironment
    noise_psd: float  # N(f), W/Hz
    alpha: float = 1.0

    def __post_init__(self):
        if self.noise_psd < 0:
            raise DomainError(f"noise_psd must be >= 0, got {self.noise_psd!r}")


def holevo_capacity(params: HolevoParams) -> CapacityResult:
    """Holevo bound, term by term as published.

    The published expression normalises the noise by ``hbar f B`` in the
    first pair of terms and by ``hbar f`` in the second; that asymmetry is
    kept. The result is therefore not guaranteed nonnegative for ``B != 1``.
    """
    env = validate(params.env)
    hf = env.hbar_f
    hfb = hf * env.bandwidth
    if hfb == 0:
        raise DomainError("hbar f B must be nonzero")
    nf, b = params.noise_psd, env.bandwidth
    a = (nf * b + env.signal_power * params.alpha) / hfb
    noise = nf / hf
    noise_b = nf * b / hf
    if a < 0:
        raise DomainError(f"Holevo log argument negative (alpha={params.alpha!r})")
    value = xlog2x(1.0 + a) - xlog2x(a) + xlog2x(noise) - xlog2x(1.0 + noise_b)
    inputs = _env_inputs(env) | {"noise_psd": nf, "alpha": params.alpha}
    return CapacityResult(value, Formula.HOLEVO, inputs=inputs)


def lsd_capacity(alpha: float) -> CapacityResult:
    """``max(0, log2|a| - log2|1-a|)``; ``inf`` (flagged) at ``a = 1``."""
    inputs = {"alpha": alpha}
    if alpha == 1:
        return CapacityResult(math.inf, Formula.LSD, inputs=inputs, diverged=True)
    if alpha == 0:
        return CapacityResult(0.0, Formula.LSD, inputs=inputs)
    value = math.log2(abs(alpha)) - math.log2(abs(1.0 - alpha))
    return CapacityResult(max(0.0, value), Formula.LSD, inputs=inputs)


def g_entropy(x: float) -> float:
    """Bosonic thermal entropy ``(x+1) log2(x+1) - x log2(x)`` in bits."""
    if x < 0:
        raise DomainError(f"g(x) needs x >= 0, got {x!r}")
    if x == 0:
        return 0.0
    if x < 1.0:
        return ((1.0 + x) * math.log1p(x) - x * math.log(x)) / math.log(2.0)
    # same value, without cancelling two large xlog2x terms
    return (math.log1p(x) + x * math.log1p(1.0 / x)) / math.log(2.0)


@dataclass(frozen=True)
class EAParams:
    input_energy: float   # S, photons
    output_energy: float  # S', photons
    alpha: float = 1.0

    def __post_init__(self):
        if self.input_energy < 0 or self.output_energy < 0:
            raise DomainError("input/output energies must be >= 0")


_G_ARG_TOL = 1e-12


def ea_capacity(params: EAParams) -> CapacityResult:
    s, sp, a = params.input_energy, params.output_energy, params.alpha
    disc = (s + sp + 1.0) ** 2 - 4.0 * a * a * s * (s + 1.0)
    if disc < 0:
        raise DomainError(f"negative discriminant {disc!r} for D")
    d = math.sqrt(disc)
    args = [(d + sp - s - 1.0) / 2.0, (d - sp + s - 1.0) / 2.0]
    for i, v in enumerate(args):
        if v < -_G_ARG_TOL:
            raise DomainError(f"g-argument {v!r} < 0")
        args[i] = max(v, 0.0)
    value = g_entropy(s) + g_entropy(sp) - g_entropy(args[0]) - g_entropy(args[1])
    inputs = {"input_energy": s, "output_energy": sp, "alpha": a, "D": d}
    return CapacityResult(value, Formula.EA_CLASSICAL, inputs=inputs)
