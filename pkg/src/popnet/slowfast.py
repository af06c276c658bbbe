"""Singular (fast-relaxed) reduction of the three-dimensional system.

Setting the fast time constant to zero turns the fast equation into the
constraint u1 = G1(J11 u1 + J12 u2 + z), solved for u2:

    u2 = F(u1, z) = (G1^{-1}(u1) - J11 u1 - z) / J12.

The reduced flow on the (u1, z) chart reads

    F_u1 . du1/dt = -F + G2(J21 u1 + J22 F) - F_z (k + gamma z - u1 - F)
          dz/dt   =  k + gamma z - u1 - F

with F_z = -1/J12 constant.  The fold line is F_u1 = 0; folded
singularities are fold points annihilating the right side of the first
equation, classified through the desingularized flow (time rescaled by
F_u1); a point where the slow line also vanishes is a true equilibrium
crossing the fold (the codimension-1 locus traced over (k, sigma1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .meanfield import MeanFieldModel
from .model import (
    SigmoidSpec,
    effective_gain,
    effective_gain_derivative,
    effective_gain_inverse,
    erfinv,
)

__all__ = [
    "ReducedSystem",
    "FoldedSingularity",
    "Fsn2Curve",
    "constraint_F",
    "dF_du1",
    "fold_line",
    "reduced_rhs",
    "folded_singularities",
    "fsn2_locus",
    "critical_manifold_patch",
]

_SQRT_PI_OVER_TWO = math.sqrt(math.pi) / 2.0
U1_CLIP = 1.0 - 1e-9
FOLD_TOL = 1e-12
SINGULARITY_TOL = 1e-9
FSN2_TOL = 1e-8


@dataclass(frozen=True)
class ReducedSystem:
    """Constraint geometry of one three-dimensional model."""

    model: MeanFieldModel

    def __post_init__(self):
        if self.model.n_populations != 2:
            raise ValueError("reduction requires a two-population model")
        if self.model.coupling[0, 1] == 0.0:
            raise ValueError("J12 must be nonzero (the constraint divides by it)")

    @property
    def sigmoid1(self) -> SigmoidSpec:
        return self.model.sigmoids[0]

    @property
    def sigmoid2(self) -> SigmoidSpec:
        return self.model.sigmoids[1]


@dataclass(frozen=True)
class FoldedSingularity:
    u1: float
    ze: float
    u2: float
    kind: str                      # folded-saddle | folded-node | folded-focus | fsn2-candidate
    eigenvalues: tuple[complex, complex]
    fold_residual: float
    flow_residual: float


@dataclass(frozen=True)
class Fsn2Curve:
    """Locus of fold-crossing true equilibria over (k, sigma1)."""

    sigma1: np.ndarray
    k: np.ndarray
    u1: np.ndarray
    ze: np.ndarray
    u2: np.ndarray
    residuals: np.ndarray          # max of the three defining residuals per point
    gaps: tuple[float, ...]        # sigma1 values where no solution was found


def _check_u1(u1: float):
    if not -1.0 < u1 < 1.0:
        raise DomainError(f"u1={u1} outside the open sigmoid range (-1, 1)")
    if abs(u1) > U1_CLIP:
        raise DomainError(f"u1={u1} too close to sigmoid saturation")


def constraint_F(u1: float, ze: float, sys: ReducedSystem) -> float:
    """u2 on the critical manifold as a function of (u1, z)."""
    _check_u1(u1)
    J = sys.model.coupling
    g1inv = effective_gain_inverse(u1, sys.sigmoid1)
    return (g1inv - J[0, 0] * u1 - ze) / J[0, 1]


def dF_du1(u1: float, sys: ReducedSystem) -> float:
    """Slope of the constraint in u1; independent of z."""
    _check_u1(u1)
    J = sys.model.coupling
    w = effective_gain_inverse(u1, sys.sigmoid1)
    inv_slope = 1.0 / effective_gain_derivative(w, sys.sigmoid1)
    return (inv_slope - J[0, 0]) / J[0, 1]


def _d2F_du1(u1: float, sys: ReducedSystem) -> float:
    # (G^{-1})''(u) = 2 c^2 w / G'(w)^2 with w = G^{-1}(u)
    c = sys.sigmoid1.slope_factor
    w = effective_gain_inverse(u1, sys.sigmoid1)
    gp = effective_gain_derivative(w, sys.sigmoid1)
    return 2.0 * c * c * w / (gp * gp) / sys.model.coupling[0, 1]


def fold_line(sys: ReducedSystem, scan_points: int = 10_000) -> list[float]:
    """All roots of dF/du1 in (-1, 1), bisected to 1e-12.

    Two roots bracket the S-shaped regime; an empty list means the manifold
    is a monotone graph (sub-threshold gain).
    """
    us = np.linspace(-U1_CLIP, U1_CLIP, scan_points)
    # vectorized slope evaluation for the scan
    c = sys.sigmoid1.slope_factor
    J = sys.model.coupling
    w = erfinv(us) / c
    gp = (2.0 / math.sqrt(math.pi)) * c * np.exp(-((c * w) ** 2))
    slope = (1.0 / gp - J[0, 0]) / J[0, 1]
    roots: list[float] = []
    sign = np.sign(slope)
    for i in np.where(sign[:-1] * sign[1:] < 0)[0]:
        a, b = us[i], us[i + 1]
        fa = slope[i]
        for _ in range(200):
            if b - a < FOLD_TOL:
                break
            m = 0.5 * (a + b)
            fm = dF_du1(m, sys)
            if fm == 0.0:
                a = b = m
                break
            if np.sign(fm) == np.sign(fa):
                a, fa = m, fm
            else:
                b = m
        roots.append(0.5 * (a + b))
    return roots


def reduced_rhs(u1: float, ze: float, sys: ReducedSystem,
                params: tuple[float, float]) -> tuple[float, float]:
    """Right sides of the reduced system, the first still scaled by F_u1."""
    k, gamma = params
    J = sys.model.coupling
    F = constraint_F(u1, ze, sys)
    dze = k + gamma * ze - u1 - F
    F_z = -1.0 / J[0, 1]
    du1_scaled = -F + effective_gain(J[1, 0] * u1 + J[1, 1] * F, sys.sigmoid2) - F_z * dze
    return du1_scaled, dze


def _desingularized_field(sys: ReducedSystem, params: tuple[float, float]):
    """Planar field after rescaling time by F_u1 (orientation flips with its sign)."""
    def field(u1: float, ze: float) -> np.ndarray:
        r1, r2 = reduced_rhs(u1, ze, sys, params)
        return np.array([r1, dF_du1(u1, sys) * r2])
    return field


def _numeric_jacobian_2d(field, x: np.ndarray, h: float = 1e-7) -> np.ndarray:
    Jm = np.empty((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = h
        Jm[:, j] = (field(*(x + e)) - field(*(x - e))) / (2 * h)
    return Jm


def folded_singularities(sys: ReducedSystem, params: tuple[float, float],
                         ze_bracket: tuple[float, float] = (-6.0, 6.0),
                         fsn2_eig_tol: float = 1e-6) -> list[FoldedSingularity]:
    """Find and classify the singularities of the desingularized flow on the fold.

    For each fold root u1*, the scaled-u1 equation is solved for z by Newton
    (it is affine in z, so one step is exact); the desingularized Jacobian's
    eigenvalues classify the point.  Fold branches where the solve fails are
    reported as missing, not fatal.
    """
    out: list[FoldedSingularity] = []
    for u1 in fold_line(sys):
        # 1-d Newton for the z annihilating the scaled-u1 equation on the fold
        # (affine in z when J22 = 0, so the start below is then already exact)
        r0, _ = reduced_rhs(u1, 0.0, sys, params)
        r1, _ = reduced_rhs(u1, 1.0, sys, params)
        if r1 == r0:
            continue  # degenerate: no z dependence on this branch
        ze = -r0 / (r1 - r0)
        converged = False
        for _ in range(50):
            r, _ = reduced_rhs(u1, ze, sys, params)
            if abs(r) < SINGULARITY_TOL:
                converged = True
                break
            h = 1e-7
            rp, _ = reduced_rhs(u1, ze + h, sys, params)
            if rp == r:
                break
            ze -= r * h / (rp - r)
        if not converged or not ze_bracket[0] <= ze <= ze_bracket[1]:
            continue
        du1s, dze = reduced_rhs(u1, ze, sys, params)
        field = _desingularized_field(sys, params)
        eigs = np.linalg.eigvals(_numeric_jacobian_2d(field, np.array([u1, ze])))
        eigs = eigs[np.argsort(eigs.real)]
        if abs(eigs.imag[0]) > 1e-9:
            kind = "folded-focus"
        elif np.min(np.abs(eigs.real)) < fsn2_eig_tol:
            kind = "fsn2-candidate"
        elif eigs.real[0] * eigs.real[1] > 0:
            kind = "folded-node"
        else:
            kind = "folded-saddle"
        out.append(FoldedSingularity(
            u1=u1, ze=ze, u2=constraint_F(u1, ze, sys), kind=kind,
            eigenvalues=(complex(eigs[0]), complex(eigs[1])),
            fold_residual=abs(dF_du1(u1, sys)),
            flow_residual=abs(du1s)))
    return out


def fsn2_locus(family: Callable[[float], MeanFieldModel], k_range: tuple[float, float],
               sigma1_values, branch: int = 0) -> Fsn2Curve:
    """Trace the fold-crossing equilibrium over a grid of noise levels.

    ``family`` maps sigma1 to a wc3d model whose (k, gamma) block provides
    gamma; for each sigma1 the pair (z, k) solving both reduced right sides
    on the chosen fold branch is found by a 2-d Newton iteration.  Grid
    columns with no admissible solution are recorded as gaps.
    """
    s_vals, ks, u1s, zes, u2s, residuals = [], [], [], [], [], []
    gaps: list[float] = []
    for s1 in np.asarray(sigma1_values, dtype=float):
        model = family(s1)
        if model.adaptation is None:
            raise ValueError("family must produce models with an adaptation block")
        gamma = model.adaptation[1]
        sys = ReducedSystem(model)
        folds = fold_line(sys)
        if len(folds) <= branch:
            gaps.append(float(s1))
            continue
        u1 = folds[branch]
        # 2-d Newton in (z, k) on: du1_scaled = 0, dze = 0 at fixed u1
        z, k = 0.0, sum(k_range) / 2.0
        ok = False
        for _ in range(60):
            r1, r2 = reduced_rhs(u1, z, sys, (k, gamma))
            if abs(r1) < FSN2_TOL and abs(r2) < FSN2_TOL:
                ok = True
                break
            h = 1e-7
            r1z, r2z = reduced_rhs(u1, z + h, sys, (k, gamma))
            r1k, r2k = reduced_rhs(u1, z, sys, (k + h, gamma))
            A = np.array([[(r1z - r1) / h, (r1k - r1) / h],
                          [(r2z - r2) / h, (r2k - r2) / h]])
            try:
                dz, dk = np.linalg.solve(A, [-r1, -r2])
            except np.linalg.LinAlgError:
                break
            z += dz
            k += dk
        if not ok or not (k_range[0] - 1e-9 <= k <= k_range[1] + 1e-9):
            gaps.append(float(s1))
            continue
        s_vals.append(float(s1))
        ks.append(k)
        u1s.append(u1)
        zes.append(z)
        u2s.append(constraint_F(u1, z, sys))
        r1, r2 = reduced_rhs(u1, z, sys, (k, gamma))
        residuals.append(max(abs(r1), abs(r2), abs(dF_du1(u1, sys))))
    return Fsn2Curve(sigma1=np.array(s_vals), k=np.array(ks), u1=np.array(u1s),
                     ze=np.array(zes), u2=np.array(u2s),
                     residuals=np.array(residuals), gaps=tuple(gaps))


def critical_manifold_patch(sys: ReducedSystem, u1_values, ze_values) -> np.ndarray:
    """Sample u2 = F(u1, z) on a grid for external surface plotting."""
    out = np.empty((len(u1_values), len(ze_values)))
    for i, u1 in enumerate(u1_values):
        for j, z in enumerate(ze_values):
            out[i, j] = constraint_F(float(u1), float(z), sys)
    return out
