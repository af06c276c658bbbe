"""Core domain types and the noise-dependent effective nonlinearity.

The transfer function of every population is an error-function sigmoid
``S(x) = erf(g x)``.  When the input carries a stationary centered Gaussian
current with standard deviation ``sigma``, averaging the sigmoid over the
noise has the closed form

    G(x) = E[S(x + xi)] = erf(g x / sqrt(1 + 2 g^2 sigma^2)),

(for the standard error function, E[erf(a + b Z)] = erf(a / sqrt(1 + 2 b^2))
with Z standard normal), so the noise level acts on the deterministic
reduced equations purely through the effective slope
``g / sqrt(1 + 2 g^2 sigma^2)``.  This module implements that function, its
inverse and derivative, and a Monte-Carlo estimator used as an independent
cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erf as _erf

from .errors import DomainError

__all__ = [
    "SigmoidSpec",
    "PopulationSpec",
    "AdaptationSpec",
    "NetworkConfig",
    "TrajectoryRecord",
    "bare_sigmoid",
    "effective_gain",
    "mc_effective_gain",
    "effective_gain_inverse",
    "effective_gain_derivative",
    "erfinv",
]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmoidSpec:
    """Gain and input-noise level of one population's transfer function."""

    gain: float
    noise_sd: float = 0.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"gain must be positive, got {self.gain}")
        if self.noise_sd < 0:
            raise ValueError(f"noise_sd must be non-negative, got {self.noise_sd}")

    @property
    def slope_factor(self) -> float:
        """Effective slope g / sqrt(1 + 2 g^2 sigma^2) of the averaged sigmoid."""
        g, s = self.gain, self.noise_sd
        return g / math.sqrt(1.0 + 2.0 * g * g * s * s)


@dataclass(frozen=True)
class PopulationSpec:
    """One population of identical units inside a network."""

    size: int
    time_constant: float
    input: float
    sigmoid: SigmoidSpec
    ou_relaxation_time: float = 1.0
    adaptation_weight: float = 0.0
    # Initial law of the activities: iid Gaussian, per population.
    initial_mean: float = 0.0
    initial_sd: float = 0.0

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"population size must be >= 1, got {self.size}")
        if not self.time_constant > 0:
            raise ValueError(f"time_constant must be positive, got {self.time_constant}")
        if not self.ou_relaxation_time > 0:
            raise ValueError(
                f"ou_relaxation_time must be positive, got {self.ou_relaxation_time}"
            )
        if self.initial_sd < 0:
            raise ValueError(f"initial_sd must be non-negative, got {self.initial_sd}")


@dataclass(frozen=True)
class AdaptationSpec:
    """Slow shared modulation current driven by the population means."""

    rate: float       # speed of the slow variable (not the fast/slow ratio)
    offset: float     # constant drive k
    leak: float       # linear coefficient gamma
    initial: float = 0.0

    def __post_init__(self):
        # rate 0 freezes the slow variable at its initial value
        if self.rate < 0:
            raise ValueError(f"adaptation rate must be non-negative, got {self.rate}")


@dataclass(frozen=True)
class NetworkConfig:
    """Full specification of a finite stochastic network."""

    populations: tuple[PopulationSpec, ...]
    coupling: np.ndarray          # P x P, row alpha = weights onto population alpha
    seed: int
    dt: float
    horizon: float
    adaptation: Optional[AdaptationSpec] = None

    def __post_init__(self):
        pops = tuple(self.populations)
        object.__setattr__(self, "populations", pops)
        J = np.asarray(self.coupling, dtype=float)
        P = len(pops)
        if P == 0:
            raise ValueError("need at least one population")
        if J.shape != (P, P):
            raise ValueError(f"coupling must be {P}x{P}, got shape {J.shape}")
        J = J.copy()
        J.flags.writeable = False
        object.__setattr__(self, "coupling", J)
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.horizon < self.dt:
            raise ValueError("horizon must be at least one step")
        tau_min = min(p.time_constant for p in pops)
        if self.dt > tau_min / 10.0:
            warnings.warn(
                f"dt={self.dt:g} exceeds min(time_constant)/10={tau_min / 10.0:g}; "
                "forward-Euler drift error may be large",
                stacklevel=2,
            )

    @property
    def n_populations(self) -> int:
        return len(self.populations)

    @property
    def total_size(self) -> int:
        return sum(p.size for p in self.populations)

    def block_slices(self) -> list[slice]:
        """Per-population index ranges; units are block-ordered."""
        out, start = [], 0
        for p in self.populations:
            out.append(slice(start, start + p.size))
            start += p.size
        return out


@dataclass(frozen=True)
class TrajectoryRecord:
    """Time-gridded record of a network or ODE run."""

    times: np.ndarray                       # strictly increasing
    population_means: np.ndarray            # (n_times, P)
    seed_used: int
    adaptation_trace: Optional[np.ndarray] = None    # (n_times,)
    neuron_samples: Optional[np.ndarray] = None      # (n_times, n_sampled)
    sample_indices: Optional[np.ndarray] = None      # global unit indices of samples
    sample_populations: Optional[np.ndarray] = None  # population of each sample

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("times must be a non-empty 1-d array")
        if t[0] < 0:
            raise ValueError("times must start at >= 0")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        n = t.size
        m = np.asarray(self.population_means, dtype=float)
        if m.shape[0] != n:
            raise ValueError("population_means length must match times")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "population_means", m)
        for name in ("adaptation_trace", "neuron_samples"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape[0] != n:
                    raise ValueError(f"{name} length must match times")
                object.__setattr__(self, name, arr)

    @property
    def n_populations(self) -> int:
        return self.population_means.shape[1]


# ---------------------------------------------------------------------------
# Sigmoid calculus
# ---------------------------------------------------------------------------

def bare_sigmoid(x, spec: SigmoidSpec):
    """Noise-free transfer function erf(gain * x)."""
    if np.ndim(x):
        return _erf(spec.gain * np.asarray(x, dtype=float))
    return float(_erf(spec.gain * x))


def effective_gain(x, spec: SigmoidSpec):
    """Noise-averaged sigmoid: erf applied with the reduced effective slope."""
    c = spec.slope_factor
    if np.ndim(x):
        return _erf(c * np.asarray(x, dtype=float))
    return float(_erf(c * x))


def effective_gain_derivative(x, spec: SigmoidSpec):
    """d/dx of effective_gain: (2/sqrt(pi)) c exp(-(c x)^2)."""
    c = spec.slope_factor
    if np.ndim(x):
        x = np.asarray(x, dtype=float)
        return _TWO_OVER_SQRT_PI * c * np.exp(-((c * x) ** 2))
    return _TWO_OVER_SQRT_PI * c * math.exp(-((c * x) ** 2))


def mc_effective_gain(x: float, spec: SigmoidSpec, samples: int, seed: int):
    """Monte-Carlo estimate of the noise-averaged sigmoid.

    Draws ``samples`` centered Gaussian perturbations with the spec's
    noise_sd and averages erf(gain * (x + xi)).  Returns ``(estimate,
    stderr)``; this is the independent oracle for :func:`effective_gain`.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    xi = rng.standard_normal(samples)
    vals = _erf(spec.gain * (x + spec.noise_sd * xi))
    est = float(vals.mean())
    if samples == 1:
        return est, 0.0
    stderr = float(vals.std(ddof=1) / math.sqrt(samples))
    return est, stderr


# Rational first guess for the inverse error function (central series plus a
# tail branch), tightened by Newton iterations on erf itself.
def _erfinv_initial(y: np.ndarray) -> np.ndarray:
    a = 0.147
    ln1my2 = np.log1p(-y * y)
    t = 2.0 / (math.pi * a) + 0.5 * ln1my2
    return np.sign(y) * np.sqrt(np.sqrt(t * t - ln1my2 / a) - t)


def erfinv(y, max_newton: int = 8, tol: float = 1e-15):
    """Inverse error function on (-1, 1), Newton-polished to ~1 ulp."""
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(np.abs(y) >= 1.0):
        raise DomainError("erfinv argument must satisfy |y| < 1")
    x = _erfinv_initial(y)
    for _ in range(max_newton):
        # erf'(x) = (2/sqrt(pi)) exp(-x^2); stays positive on the domain
        dx = (_erf(x) - y) / (_TWO_OVER_SQRT_PI * np.exp(-x * x))
        x = x - dx
        if np.all(np.abs(dx) <= tol * (1.0 + np.abs(x))):
            break
    return float(x[0]) if scalar else x


def effective_gain_inverse(y, spec: SigmoidSpec):
    """Inverse of effective_gain; domain (-1, 1).

    Raises DomainError outside the open range, signalling that a constraint
    solve has left the sigmoid's image.
    """
    c = spec.slope_factor
    if np.ndim(y) == 0:
        if abs(y) >= 1.0:
            raise DomainError(f"effective_gain_inverse argument |y|={abs(y)} >= 1")
        return erfinv(float(y)) / c
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) >= 1.0):
        raise DomainError("effective_gain_inverse argument must satisfy |y| < 1")
    return erfinv(y) / c
