"""Deterministic limit systems and their high-accuracy integration.

Three flavors of the moment equations are supported through one type:

* ``general`` -- P populations, tau_a du_a/dt = -u_a + G_a(sum_b J_ab u_b
  + lambda_a U + I_a), optionally coupled to a shared slow variable
  dU/dt = rate (k + gamma U - sum_b u_b);
* ``wc2d``    -- the two-population fast/slow special case with a constant
  drive z_e entering population 1;
* ``wc3d``    -- the same system with z_e turned into the slow variable
  (lambda = (1, 0), rate = 1).

All three share a single evaluation path, so the special kinds agree with
the general one bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import erf as _erf

from .errors import StiffnessError
from .model import SigmoidSpec

__all__ = ["MeanFieldModel", "OdeSolution", "rhs", "jacobian", "integrate"]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class MeanFieldModel:
    """Vector field and parameters of a moment system."""

    kind: str                                # "general" | "wc2d" | "wc3d"
    coupling: np.ndarray                     # P x P
    sigmoids: tuple[SigmoidSpec, ...]
    time_constants: tuple[float, ...]
    inputs: tuple[float, ...]
    lambdas: tuple[float, ...] = ()
    adaptation: Optional[tuple[float, float]] = None   # (k, gamma)
    adaptation_rate: float = 1.0

    def __post_init__(self):
        J = np.asarray(self.coupling, dtype=float).copy()
        P = len(self.sigmoids)
        if J.shape != (P, P):
            raise ValueError(f"coupling must be {P}x{P}, got {J.shape}")
        J.flags.writeable = False
        object.__setattr__(self, "coupling", J)
        object.__setattr__(self, "sigmoids", tuple(self.sigmoids))
        object.__setattr__(self, "time_constants", tuple(float(t) for t in self.time_constants))
        object.__setattr__(self, "inputs", tuple(float(v) for v in self.inputs))
        lam = self.lambdas if self.lambdas else tuple([1.0] + [0.0] * (P - 1))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in lam))
        if len(self.time_constants) != P or len(self.inputs) != P or len(self.lambdas) != P:
            raise ValueError("per-population parameter lengths disagree")
        if any(t <= 0 for t in self.time_constants):
            raise ValueError("time constants must be positive")
        if self.kind not in ("general", "wc2d", "wc3d"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "wc3d" and self.adaptation is None:
            raise ValueError("wc3d requires an adaptation block (k, gamma)")
        if self.kind == "wc2d" and self.adaptation is not None:
            raise ValueError("wc2d has no slow variable; use wc3d or general")
        if self.adaptation_rate < 0:
            raise ValueError("adaptation_rate must be >= 0")

    # -- constructors -------------------------------------------------------

    @classmethod
    def wc2d(cls, coupling, sigmoids, ze: float, epsilon: float,
             tau2: float = 1.0, input2: float = 0.0) -> "MeanFieldModel":
        return cls(kind="wc2d", coupling=coupling, sigmoids=tuple(sigmoids),
                   time_constants=(epsilon, tau2), inputs=(ze, input2))

    @classmethod
    def wc3d(cls, coupling, sigmoids, k: float, gamma: float, epsilon: float,
             tau2: float = 1.0) -> "MeanFieldModel":
        return cls(kind="wc3d", coupling=coupling, sigmoids=tuple(sigmoids),
                   time_constants=(epsilon, tau2), inputs=(0.0, 0.0),
                   lambdas=(1.0, 0.0), adaptation=(k, gamma), adaptation_rate=1.0)

    @classmethod
    def from_network(cls, config) -> "MeanFieldModel":
        """Moment system of a finite network configuration (its N -> inf limit)."""
        sigmoids = tuple(p.sigmoid for p in config.populations)
        taus = tuple(p.time_constant for p in config.populations)
        inputs = tuple(p.input for p in config.populations)
        lambdas = tuple(p.adaptation_weight for p in config.populations)
        if config.adaptation is None:
            return cls(kind="general", coupling=config.coupling, sigmoids=sigmoids,
                       time_constants=taus, inputs=inputs, lambdas=lambdas)
        a = config.adaptation
        return cls(kind="general", coupling=config.coupling, sigmoids=sigmoids,
                   time_constants=taus, inputs=inputs, lambdas=lambdas,
                   adaptation=(a.offset, a.leak), adaptation_rate=a.rate)

    # -- geometry ------------------------------------------------------------

    @property
    def n_populations(self) -> int:
        return len(self.sigmoids)

    @property
    def has_slow_variable(self) -> bool:
        return self.adaptation is not None

    @property
    def dimension(self) -> int:
        return self.n_populations + (1 if self.has_slow_variable else 0)

    @property
    def epsilon(self) -> float:
        """Fast time constant (timescale ratio of the fast/slow kinds)."""
        return self.time_constants[0]

    def replace(self, **updates) -> "MeanFieldModel":
        from dataclasses import replace as _replace
        return _replace(self, **updates)

    # -- evaluation ----------------------------------------------------------

    def rhs_callable(self) -> Callable[[float, np.ndarray], np.ndarray]:
        """Closure evaluating the vector field; scalar math for P=2."""
        P = self.n_populations
        if P == 2:
            return self._rhs_p2()
        return self._rhs_general()

    def _rhs_p2(self):
        (j11, j12), (j21, j22) = self.coupling
        c1, c2 = (s.slope_factor for s in self.sigmoids)
        i1, i2 = self.inputs
        l1, l2 = self.lambdas
        it1, it2 = (1.0 / t for t in self.time_constants)
        erf = math.erf
        if self.adaptation is None:
            def f(t, y):
                u1, u2 = y[0], y[1]
                d1 = (-u1 + erf(c1 * (j11 * u1 + j12 * u2 + i1))) * it1
                d2 = (-u2 + erf(c2 * (j21 * u1 + j22 * u2 + i2))) * it2
                return np.array((d1, d2))
            return f
        k, gamma = self.adaptation
        rate = self.adaptation_rate
        def f(t, y):
            u1, u2, z = y[0], y[1], y[2]
            d1 = (-u1 + erf(c1 * (j11 * u1 + j12 * u2 + l1 * z + i1))) * it1
            d2 = (-u2 + erf(c2 * (j21 * u1 + j22 * u2 + l2 * z + i2))) * it2
            dz = rate * (k + gamma * z - u1 - u2)
            return np.array((d1, d2, dz))
        return f

    def _rhs_general(self):
        P = self.n_populations
        J = self.coupling
        c = np.array([s.slope_factor for s in self.sigmoids])
        I = np.array(self.inputs)
        lam = np.array(self.lambdas)
        inv_tau = 1.0 / np.array(self.time_constants)
        if self.adaptation is None:
            def f(t, y):
                h = J @ y + I
                return (_erf(c * h) - y) * inv_tau
            return f
        k, gamma = self.adaptation
        rate = self.adaptation_rate
        def f(t, y):
            mu, z = y[:P], y[P]
            h = J @ mu + lam * z + I
            out = np.empty(P + 1)
            out[:P] = (_erf(c * h) - mu) * inv_tau
            out[P] = rate * (k + gamma * z - mu.sum())
            return out
        return f

    def jacobian_callable(self) -> Callable[[np.ndarray], np.ndarray]:
        """Closure evaluating the exact Jacobian of the vector field."""
        P = self.n_populations
        J = self.coupling
        c = np.array([s.slope_factor for s in self.sigmoids])
        I = np.array(self.inputs)
        lam = np.array(self.lambdas)
        inv_tau = 1.0 / np.array(self.time_constants)
        adapt = self.adaptation
        rate = self.adaptation_rate

        def jac(y):
            mu = y[:P]
            h = J @ mu + I
            if adapt is not None:
                h = h + lam * y[P]
            gp = _TWO_OVER_SQRT_PI * c * np.exp(-((c * h) ** 2))
            A = (gp[:, None] * J - np.eye(P)) * inv_tau[:, None]
            if adapt is None:
                return A
            k, gamma = adapt
            M = np.empty((P + 1, P + 1))
            M[:P, :P] = A
            M[:P, P] = gp * lam * inv_tau
            M[P, :P] = -rate
            M[P, P] = rate * gamma
            return M

        return jac


def rhs(model: MeanFieldModel, state, t: float = 0.0) -> np.ndarray:
    """Evaluate the vector field at one state."""
    y = np.asarray(state, dtype=float)
    if y.shape != (model.dimension,):
        raise ValueError(f"state must have shape ({model.dimension},), got {y.shape}")
    return model.rhs_callable()(t, y)


def jacobian(model: MeanFieldModel, state) -> np.ndarray:
    """Exact Jacobian of the vector field at one state."""
    y = np.asarray(state, dtype=float)
    if y.shape != (model.dimension,):
        raise ValueError(f"state must have shape ({model.dimension},), got {y.shape}")
    return model.jacobian_callable()(y)


@dataclass
class OdeSolution:
    """Dense-output record of an adaptive integration."""

    times: np.ndarray
    states: np.ndarray
    steps: int
    rejected: int
    nfev: int

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
# difference between the 5th-order propagated weights and the embedded 4th
_DP_E = (35 / 384 - 5179 / 57600, 0.0, 500 / 1113 - 7571 / 16695,
         125 / 192 - 393 / 640, -2187 / 6784 + 92097 / 339200,
         11 / 84 - 187 / 2100, -1 / 40)

_MIN_STEP = 1e-12


def integrate(model: MeanFieldModel, initial, horizon: float,
              tolerances: tuple[float, float] = (1e-9, 1e-8),
              t0: float = 0.0, output_dt: float | None = None,
              max_step: float = np.inf,
              f: Callable[[float, np.ndarray], np.ndarray] | None = None) -> OdeSolution:
    """Integrate the model with an embedded RK 5(4) pair.

    Dense output on a uniform grid with spacing ``output_dt`` (default
    horizon/2000) is produced by cubic Hermite interpolation on accepted
    steps.  Raises StiffnessError instead of stalling if the controller
    pushes the step below 1e-12.
    """
    atol, rtol = tolerances
    if atol <= 0 or rtol <= 0:
        raise ValueError("tolerances must be positive")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    y = np.asarray(initial, dtype=float).copy()
    if y.shape != (model.dimension,):
        raise ValueError(f"initial state must have shape ({model.dimension},), got {y.shape}")
    if f is None:
        f = model.rhs_callable()

    if output_dt is None:
        output_dt = horizon / 2000.0
    n_out = int(math.floor(horizon / output_dt + 1e-9)) + 1
    out_t = t0 + output_dt * np.arange(n_out)
    out_y = np.empty((n_out, y.size))
    out_y[0] = y
    next_out = 1

    t_end = t0 + horizon
    t = t0
    k1 = f(t, y)
    nfev = 1
    steps = rejected = 0
    h = min(1e-2 * horizon, max_step, _initial_step(f, t, y, k1, atol, rtol))
    ks = [k1] + [None] * 6

    while t < t_end - 1e-14 * max(1.0, abs(t_end)):
        h = min(h, t_end - t, max_step)
        if h < _MIN_STEP:
            raise StiffnessError(t, h)
        for i in range(1, 7):
            yi = y + h * sum(a * kj for a, kj in zip(_DP_A[i], ks))
            ks[i] = f(t + _DP_C[i] * h, yi)
        nfev += 6
        y_new = y + h * sum(a * kj for a, kj in zip(_DP_A[6], ks))
        # ks[6] is f at (t+h, y_new): FSAL stage reused on acceptance
        err_vec = h * sum(e * kj for e, kj in zip(_DP_E, ks))
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0 or h <= 2 * _MIN_STEP:
            # accept; fill dense output over [t, t+h] with cubic Hermite
            t_new = t + h
            while next_out < n_out and out_t[next_out] <= t_new + 1e-14 * max(1.0, abs(t_new)):
                s = (out_t[next_out] - t) / h
                h00 = (1 + 2 * s) * (1 - s) ** 2
                h10 = s * (1 - s) ** 2
                h01 = s * s * (3 - 2 * s)
                h11 = s * s * (s - 1)
                out_y[next_out] = (h00 * y + h10 * h * ks[0]
                                   + h01 * y_new + h11 * h * ks[6])
                next_out += 1
            t, y = t_new, y_new
            ks[0] = ks[6]
            steps += 1
            if not np.all(np.isfinite(y)):
                raise StiffnessError(t, h)
        else:
            rejected += 1
        factor = 0.9 * err ** -0.2 if err > 0 else 5.0
        h *= min(5.0, max(0.2, factor))

    if next_out < n_out:   # end point, guard against fp shortfall
        out_y[next_out:] = y
    return OdeSolution(times=out_t, states=out_y, steps=steps, rejected=rejected, nfev=nfev)


def _initial_step(f, t0, y0, f0, atol, rtol) -> float:
    """Conventional two-trial guess for the first step size."""
    scale = atol + rtol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)
