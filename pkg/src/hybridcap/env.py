"""Physical constants and the parameter bundle consumed by every formula.

All quantities are SI. Photon energy is taken as ``hbar * f`` (not ``h * f``),
matching the capacity formulas this toolkit evaluates; pass a different
:class:`PhysicalConstants` to test the other convention.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .errors import DomainError, InconsistentError

HBAR = 1.054571817e-34  # J s, CODATA 2018
BOLTZMANN = 1.380649e-23  # J/K, exact
REFERENCE_TEMPERATURE = 290.0  # K, standard noise reference T0

_P_REL_TOL = 1e-9


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = HBAR
    boltzmann: float = BOLTZMANN

    def __post_init__(self):
        if not (self.hbar > 0 and self.boltzmann > 0):
            raise DomainError("physical constants must be strictly positive")


@dataclass(frozen=True)
class PhysicalEnvironment:
    """Operating point of a channel.

    ``noise_floor`` (N0, W/Hz) defaults to ``k * 290 K`` when left as None.
    Exactly one of ``photons`` and ``signal_power`` may be omitted; the other
    is derived from ``S = B * hbar * f * p`` by :func:`validate`.
    """

    bandwidth: float
    frequency: float
    temperature: float
    interval: float = 1.0
    noise_floor: float | None = None
    photons: float | None = None
    signal_power: float | None = None
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)

    @property
    def hbar_f(self) -> float:
        return self.constants.hbar * self.frequency

    @property
    def kT(self) -> float:
        return self.constants.boltzmann * self.temperature

    def with_(self, **changes) -> "PhysicalEnvironment":
        """Copy with fields replaced, dropping the derived field of the pair.

        Changing ``photons`` clears ``signal_power`` (and vice versa) unless
        both are given, so the result can be re-validated.
        """
        if "photons" in changes and "signal_power" not in changes:
            changes["signal_power"] = None
        elif "signal_power" in changes and "photons" not in changes:
            changes["photons"] = None
        elif not {"photons", "signal_power"} & changes.keys() and (
            {"frequency", "bandwidth"} & changes.keys()
        ):
            # keep the photon count, re-derive the power
            changes["signal_power"] = None
        return replace(self, **changes)

    def snapshot(self) -> dict:
        d = asdict(self)
        d["constants"] = asdict(self.constants)
        return d


def photons_per_use(signal_power, frequency, bandwidth, constants=None) -> float:
    """Average photon number per use, ``S / (hbar f B)``."""
    c = constants or PhysicalConstants()
    if not frequency > 0:
        raise DomainError(f"frequency must be > 0, got {frequency!r}")
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be > 0, got {bandwidth!r}")
    if signal_power < 0:
        raise DomainError(f"signal power must be >= 0, got {signal_power!r}")
    return signal_power / (c.hbar * frequency * bandwidth)


def signal_power_from_photons(photons, frequency, bandwidth, constants=None) -> float:
    c = constants or PhysicalConstants()
    return bandwidth * c.hbar * frequency * photons


def _require_positive(name, value):
    if value is None or not math.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def validate(env: PhysicalEnvironment) -> PhysicalEnvironment:
    """Check invariants and return a completed, self-consistent environment."""
    _require_positive("bandwidth", env.bandwidth)
    _require_positive("frequency", env.frequency)
    _require_positive("temperature", env.temperature)
    _require_positive("interval", env.interval)

    n0 = env.noise_floor
    if n0 is None:
        n0 = env.constants.boltzmann * REFERENCE_TEMPERATURE
    if not math.isfinite(n0) or n0 < 0:
        raise DomainError(f"noise_floor must be >= 0, got {n0!r}")

    p, s = env.photons, env.signal_power
    if p is None and s is None:
        raise DomainError("one of photons / signal_power is required")
    if p is not None and (not math.isfinite(p) or p < 0):
        raise DomainError(f"photons must be >= 0, got {p!r}")
    if s is not None and (not math.isfinite(s) or s < 0):
        raise DomainError(f"signal_power must be >= 0, got {s!r}")

    if s is None:
        s = signal_power_from_photons(p, env.frequency, env.bandwidth, env.constants)
    elif p is None:
        p = photons_per_use(s, env.frequency, env.bandwidth, env.constants)
    else:
        implied = photons_per_use(s, env.frequency, env.bandwidth, env.constants)
        implied_s = signal_power_from_photons(p, env.frequency, env.bandwidth, env.constants)
        # either side may have under/overflowed when it was derived
        if abs(p - implied) > _P_REL_TOL * p and abs(s - implied_s) > _P_REL_TOL * s:
            raise InconsistentError(
                f"photons={p!r} disagrees with S/(hbar f B)={implied!r}"
            )
    return replace(env, noise_floor=n0, photons=p, signal_power=s)
