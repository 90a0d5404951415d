"""Hybrid classical-quantum noise modelling and channel capacities."""

__version__ = "0.1.0"

from .capacity import (CapacityResult, EAParams, Formula, HolevoParams, ea_capacity,
                       g_entropy, holevo_capacity, lsd_capacity, particle_regime_capacity,
                       quantum_linear_capacity, shannon_capacity, wave_regime_capacity)
from .env import PhysicalConstants, PhysicalEnvironment, photons_per_use, validate
from .errors import (ConfigError, ConvergenceError, DomainError, HybridCapError,
                     InconsistentError, RegimeError)
from .fading import (EnvelopeDistribution, FadingCapacityRequest, cqc_capacity,
                     fading_capacity, fading_capacity_mc)
from .noise import (HybridNoiseModel, MomentEstimate, NoisePSD, build_model, mixture_cdf,
                    mixture_pdf, moments, noise_psd, sample, variance_in_frequency)

__all__ = [name for name in dir() if not name.startswith("_")]
