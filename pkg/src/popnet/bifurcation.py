"""Fixed points, stability, Hopf loci, and simulation-based cycle sweeps.

Limit cycles are measured by integration rather than collocation: unstable
canard cycles are out of reach anyway, so the explosion is detected as an
amplitude jump plus forward/backward hysteresis, which is also what a
finite network makes observable.  Equilibrium branches are continued in the
natural parameter with Newton warm starts; a fold of the branch raises
BranchLostError rather than being traced around.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BranchLostError
from .meanfield import MeanFieldModel, integrate

__all__ = [
    "FixedPoint",
    "BifurcationPoint",
    "SweepPoint",
    "RegimeMap",
    "find_fixed_points",
    "newton_fixed_point",
    "hopf_locus_1d",
    "amplitude_sweep",
    "hysteresis_window",
    "classify_regimes",
]

RESIDUAL_TOL = 1e-10
DEDUPE_TOL = 1e-6
CYCLE_THRESHOLD = 1e-6


@dataclass(frozen=True)
class FixedPoint:
    location: np.ndarray
    eigenvalues: np.ndarray
    stability: str
    residual: float

    @property
    def is_stable(self) -> bool:
        return self.stability.startswith("stable")


@dataclass(frozen=True)
class BifurcationPoint:
    kind: str                      # "hopf" | "fold-of-cycles" | "canard-interval"
    parameter_name: str
    parameter_value: float
    state: np.ndarray
    bracket: tuple[float, float]
    eigenvalue: complex            # crossing pair member with Im > 0


@dataclass(frozen=True)
class SweepPoint:
    direction: int                 # +1 forward, -1 backward
    parameter: float
    amplitudes: np.ndarray         # peak-to-peak per coordinate (0 = equilibrium)
    period: float                  # nan if not oscillating / not measurable
    converged: bool


@dataclass(frozen=True)
class RegimeMap:
    parameter_names: tuple[str, str]
    values_1: np.ndarray
    values_2: np.ndarray
    labels: np.ndarray             # (len(values_1), len(values_2)) of str

    LABELS = ("stationary", "bistable", "oscillatory")


def classify_stability(eigenvalues: np.ndarray, tol: float = 1e-9) -> str:
    re = eigenvalues.real
    if np.any(np.abs(re) < tol):
        return "center-like"
    spiral = np.any(np.abs(eigenvalues.imag) > 1e-9)
    if np.all(re < 0):
        return "stable-focus" if spiral else "stable-node"
    if np.all(re > 0):
        return "unstable-focus" if spiral else "unstable-node"
    return "saddle"


def newton_fixed_point(model: MeanFieldModel, x0, tol: float = RESIDUAL_TOL,
                       max_iter: int = 60) -> Optional[np.ndarray]:
    """Damped Newton solve of rhs = 0; returns None on failure."""
    f = model.rhs_callable()
    jac = model.jacobian_callable()
    x = np.asarray(x0, dtype=float).copy()
    r = f(0.0, x)
    for _ in range(max_iter):
        nr = np.max(np.abs(r))
        if nr < tol:
            return x
        try:
            dx = np.linalg.solve(jac(x), -r)
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        for _ in range(30):
            x_new = x + step * dx
            r_new = f(0.0, x_new)
            if np.all(np.isfinite(r_new)) and np.max(np.abs(r_new)) < nr:
                break
            step *= 0.5
        else:
            return None
        x, r = x_new, r_new
    return x if np.max(np.abs(f(0.0, x))) < tol else None


def _make_fixed_point(model: MeanFieldModel, x: np.ndarray) -> FixedPoint:
    eigs = np.linalg.eigvals(model.jacobian_callable()(x))
    order = np.lexsort((eigs.imag, eigs.real))
    eigs = eigs[order]
    res = float(np.max(np.abs(model.rhs_callable()(0.0, x))))
    return FixedPoint(location=x, eigenvalues=eigs,
                      stability=classify_stability(eigs), residual=res)


def find_fixed_points(model: MeanFieldModel, search_box: Sequence[tuple[float, float]],
                      grid_density: int = 12) -> list[FixedPoint]:
    """Newton iterations seeded on a grid, deduplicated by location.

    Returned points satisfy max|rhs| < 1e-10; duplicates within 1e-6 keep
    the smaller residual.  An empty list is a valid result.
    """
    box = [tuple(map(float, b)) for b in search_box]
    if len(box) != model.dimension:
        raise ValueError(f"search_box must have {model.dimension} intervals")
    axes = [np.linspace(lo, hi, grid_density) for lo, hi in box]
    found: list[np.ndarray] = []
    for seed in np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box)):
        x = newton_fixed_point(model, seed)
        if x is None:
            continue
        margin = [0.05 * (hi - lo) for lo, hi in box]
        if any(x[i] < box[i][0] - margin[i] or x[i] > box[i][1] + margin[i]
               for i in range(len(box))):
            continue
        found.append(x)
    points: list[FixedPoint] = []
    for x in found:
        fp = _make_fixed_point(model, x)
        dup = next((i for i, q in enumerate(points)
                    if np.linalg.norm(q.location - x) < DEDUPE_TOL), None)
        if dup is None:
            points.append(fp)
        elif fp.residual < points[dup].residual:
            points[dup] = fp
    points.sort(key=lambda p: tuple(p.location))
    return points


# ---------------------------------------------------------------------------
# Hopf detection along a one-parameter family
# ---------------------------------------------------------------------------

def _complex_pair_max_real(eigs: np.ndarray, im_tol: float = 1e-6) -> Optional[tuple[float, complex]]:
    pairs = eigs[eigs.imag > im_tol]
    if pairs.size == 0:
        return None
    lead = pairs[np.argmax(pairs.real)]
    return float(lead.real), complex(lead)


def hopf_locus_1d(family: Callable[[float], MeanFieldModel],
                  p_range: tuple[float, float], tol: float = 1e-8,
                  n_steps: int = 60, search_box: Sequence[tuple[float, float]] | None = None,
                  seed_point: Optional[np.ndarray] = None,
                  parameter_name: str = "p") -> list[BifurcationPoint]:
    """Continue the equilibrium branch over p and bisect Hopf crossings.

    Sign changes of the leading complex pair's real part are bisected down
    to |Re lambda| < tol with a parameter bracket < 1e-6; the crossing must
    have |Im lambda| > 1e-6 to count.  Loss of the branch (Newton failure,
    i.e. a fold) raises BranchLostError carrying the last good parameter.
    """
    p_lo, p_hi = map(float, p_range)
    model0 = family(p_lo)
    if seed_point is not None:
        starts = [np.asarray(seed_point, dtype=float)]
    else:
        if search_box is None:
            search_box = [(-1.05, 1.05)] * model0.n_populations
            if model0.has_slow_variable:
                search_box = list(search_box) + [(-4.0, 4.0)]
        starts = [fp.location for fp in find_fixed_points(model0, search_box, grid_density=8)]
        if not starts:
            raise BranchLostError(p_lo, "no equilibrium found at the start of the range")

    def solve_at(p: float, guess: np.ndarray) -> tuple[np.ndarray, Optional[tuple[float, complex]]]:
        m = family(p)
        x = newton_fixed_point(m, guess)
        if x is None:
            raise BranchLostError(p, "Newton failed while tracking the branch")
        eigs = np.linalg.eigvals(m.jacobian_callable()(x))
        return x, _complex_pair_max_real(eigs)

    out: list[BifurcationPoint] = []
    ps = np.linspace(p_lo, p_hi, n_steps + 1)
    for start in starts:
        x = start.copy()
        prev_p = None
        prev_m = None
        prev_x = None
        last_good = p_lo
        for p in ps:
            try:
                x, info = solve_at(p, x)
            except BranchLostError:
                raise BranchLostError(last_good, "branch fold encountered")
            last_good = p
            if info is not None and prev_m is not None and np.sign(info[0]) != np.sign(prev_m) \
                    and prev_m != 0.0:
                bp = _bisect_hopf(family, prev_p, p, prev_x, tol, parameter_name)
                if bp is not None:
                    out.append(bp)
            if info is not None:
                prev_p, prev_m, prev_x = p, info[0], x.copy()

    # deduplicate crossings found from several seeds of the same branch
    unique: list[BifurcationPoint] = []
    for bp in sorted(out, key=lambda b: b.parameter_value):
        if not unique or abs(bp.parameter_value - unique[-1].parameter_value) > 1e-5:
            unique.append(bp)
    return unique


def _bisect_hopf(family, p_a: float, p_b: float, x_guess: np.ndarray,
                 tol: float, parameter_name: str) -> Optional[BifurcationPoint]:
    def eval_at(p, guess):
        m = family(p)
        x = newton_fixed_point(m, guess)
        if x is None:
            return None, None
        eigs = np.linalg.eigvals(m.jacobian_callable()(x))
        return x, _complex_pair_max_real(eigs)

    x_a, info_a = eval_at(p_a, x_guess)
    x_b, info_b = eval_at(p_b, x_a if x_a is not None else x_guess)
    if info_a is None or info_b is None:
        return None
    m_a = info_a[0]
    x = x_b
    info_mid = info_b
    p_mid = p_b
    for _ in range(200):
        if abs(p_b - p_a) < 1e-6 and abs(info_mid[0]) < tol:
            break
        p_mid = 0.5 * (p_a + p_b)
        x, info_mid = eval_at(p_mid, x)
        if info_mid is None:
            return None
        if np.sign(info_mid[0]) == np.sign(m_a):
            p_a, m_a = p_mid, info_mid[0]
        else:
            p_b = p_mid
    if abs(info_mid[1].imag) <= 1e-6:
        return None
    return BifurcationPoint(kind="hopf", parameter_name=parameter_name,
                            parameter_value=p_mid, state=x,
                            bracket=(min(p_a, p_b), max(p_a, p_b)),
                            eigenvalue=info_mid[1])


# ---------------------------------------------------------------------------
# Simulation-based cycle measurement
# ---------------------------------------------------------------------------

def measure_attractor(model: MeanFieldModel, x0, transient: float, horizon: float,
                      tolerances=(1e-9, 1e-8), output_dt: float = 0.01,
                      period_coord: int = 1):
    """Integrate past the transient, then measure the attractor.

    Returns (final_state, amplitudes, period, converged): amplitudes are the
    peak-to-peak excursions per coordinate over the window, zeroed below the
    equilibrium threshold; the period comes from successive maxima of the
    chosen coordinate.
    """
    warm = integrate(model, x0, horizon=transient, tolerances=tolerances,
                     output_dt=max(transient / 50.0, 1e-3))
    sol = integrate(model, warm.final_state, horizon=horizon, tolerances=tolerances,
                    output_dt=output_dt)
    amps = sol.states.max(axis=0) - sol.states.min(axis=0)
    if np.all(amps < CYCLE_THRESHOLD):
        return sol.final_state, np.zeros_like(amps), float("nan"), True
    u = sol.states[:, period_coord]
    lo, hi = u.min(), u.max()
    level = lo + 0.5 * (hi - lo)
    inner = np.where((u[1:-1] > u[:-2]) & (u[1:-1] >= u[2:]) & (u[1:-1] > level))[0] + 1
    peak_times = sol.times[inner]
    if peak_times.size >= 3:
        gaps = np.diff(peak_times)
        gaps = gaps[gaps > 5 * output_dt]
        if gaps.size >= 2:
            return sol.final_state, amps, float(np.median(gaps)), True
    return sol.final_state, amps, float("nan"), False


def amplitude_sweep(family: Callable[[float], MeanFieldModel],
                    p_range: tuple[float, float], step: float,
                    transient: float, measure_horizon: float,
                    x0=None, tolerances=(1e-9, 1e-8), output_dt: float = 0.01,
                    period_coord: int = 1, directions: tuple[int, ...] = (1, -1)
                    ) -> list[SweepPoint]:
    """Warm-started forward and backward sweeps of the attractor amplitude.

    The final state at each parameter seeds the next one, which exposes
    hysteresis where bistability exists.  Cells whose oscillation cannot be
    period-measured are flagged (converged=False), not fatal.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    p_lo, p_hi = map(float, p_range)
    n = int(round((p_hi - p_lo) / step))
    ps = p_lo + step * np.arange(n + 1)
    out: list[SweepPoint] = []
    state = None
    for direction in directions:
        seq = ps if direction == 1 else ps[::-1]
        model0 = family(seq[0])
        if state is None:
            state = np.zeros(model0.dimension) if x0 is None else np.asarray(x0, dtype=float)
        for p in seq:
            model = family(p)
            state, amps, period, ok = measure_attractor(
                model, state, transient, measure_horizon,
                tolerances=tolerances, output_dt=output_dt, period_coord=period_coord)
            out.append(SweepPoint(direction=direction, parameter=float(p),
                                  amplitudes=amps, period=period, converged=ok))
    return out


def hysteresis_window(family: Callable[[float], MeanFieldModel],
                      p_range: tuple[float, float], coarse_step: float,
                      transient: float, measure_horizon: float,
                      refine_tol: float = 1e-6, amp_coord: int = 1,
                      large_fraction: float = 0.5, x0=None,
                      tolerances=(1e-9, 1e-8)) -> dict:
    """Locate the jump window of an explosion by bisecting both sweep edges.

    Returns the forward jump-up edge, backward jump-down edge, the window
    width, and the amplitude ratio across the jump.  The forward edge is the
    parameter where the small attractor (followed with warm starts from
    below) gives way to the large one; the backward edge is where the large
    attractor ceases to exist, approached from above.
    """
    points = amplitude_sweep(family, p_range, coarse_step, transient,
                             measure_horizon, x0=x0, tolerances=tolerances,
                             period_coord=amp_coord)
    fwd = [q for q in points if q.direction == 1]
    bwd = [q for q in points if q.direction == -1]
    a_max = max(q.amplitudes[amp_coord] for q in points)
    if a_max < CYCLE_THRESHOLD:
        raise ValueError("no oscillation found anywhere in the range")
    thr = large_fraction * a_max

    def is_large(amps) -> bool:
        return amps[amp_coord] >= thr

    def find_jump(seq):
        for q0, q1 in zip(seq, seq[1:]):
            if not is_large(q0.amplitudes) and is_large(q1.amplitudes):
                return q0, q1
        return None

    jump_f = find_jump(fwd)
    jump_b = find_jump(list(reversed(bwd)))
    if jump_f is None or jump_b is None:
        raise ValueError("no amplitude jump found; widen the range or refine the step")

    def bisect(p_small, p_large, from_small: bool):
        # warm state stays on the attractor of the side we track
        state, amps, _, _ = measure_attractor(
            family(p_small if from_small else p_large),
            x0 if x0 is not None else np.zeros(family(p_small).dimension),
            transient, measure_horizon, tolerances=tolerances, period_coord=amp_coord)
        small_amp = amps[amp_coord] if not is_large(amps) else 0.0
        while p_large - p_small > refine_tol:
            mid = 0.5 * (p_small + p_large)
            state_mid, amps, _, _ = measure_attractor(
                family(mid), state, transient, measure_horizon,
                tolerances=tolerances, period_coord=amp_coord)
            if is_large(amps):
                p_large = mid
            else:
                p_small = mid
                small_amp = amps[amp_coord]
                if from_small:
                    state = state_mid
            if not from_small and is_large(amps):
                state = state_mid
        return p_small, p_large, small_amp

    # forward: small attractor below, jump-up edge
    f_lo, f_hi, small_f = bisect(jump_f[0].parameter, jump_f[1].parameter, from_small=True)
    # backward: large attractor above, jump-down edge
    b_lo, b_hi, _ = bisect(jump_b[0].parameter, jump_b[1].parameter, from_small=False)
    up_edge = 0.5 * (f_lo + f_hi)
    down_edge = 0.5 * (b_lo + b_hi)
    small_before = max(small_f, CYCLE_THRESHOLD)
    return {
        "up_edge": up_edge,
        "down_edge": down_edge,
        "width": up_edge - down_edge,
        "jump_ratio": a_max / small_before,
        "large_amplitude": a_max,
        "small_amplitude_before_jump": small_f,
        "sweep": points,
    }


# ---------------------------------------------------------------------------
# Regime classification over a parameter grid
# ---------------------------------------------------------------------------

def classify_regimes(family: Callable[[float, float], MeanFieldModel],
                     values_1, values_2, search_box=None,
                     probe_states: Sequence | None = None,
                     transient: float = 40.0, measure_horizon: float = 30.0,
                     tolerances=(1e-8, 1e-7),
                     parameter_names: tuple[str, str] = ("p1", "p2")) -> RegimeMap:
    """Label each grid cell stationary / bistable / oscillatory.

    A cell is stationary when a stable equilibrium exists and no probe
    settles on a cycle, oscillatory when probes find only a cycle, bistable
    when both attractors are observed.  Probes are integrations from a small
    perturbation of each stable equilibrium plus a set of far-field states.
    """
    v1 = np.asarray(values_1, dtype=float)
    v2 = np.asarray(values_2, dtype=float)
    model0 = family(v1[0], v2[0])
    dim = model0.dimension
    if search_box is None:
        search_box = [(-1.05, 1.05)] * model0.n_populations
        if model0.has_slow_variable:
            search_box = list(search_box) + [(-4.0, 4.0)]
    if probe_states is None:
        hi = np.array([0.9] * dim)
        lo = -hi
        alt = np.array([0.9 * (-1) ** i for i in range(dim)])
        probe_states = [hi, lo, alt]

    labels = np.empty((v1.size, v2.size), dtype=object)
    for i, a in enumerate(v1):
        for j, b in enumerate(v2):
            model = family(a, b)
            fps = find_fixed_points(model, search_box, grid_density=8)
            stable = [fp for fp in fps if fp.is_stable]
            # a linearly stable equilibrium is an attractor; probes only
            # need to establish whether a cycle coexists
            cycle = False
            for x0 in probe_states:
                _, amps, _, _ = measure_attractor(model, x0, transient, measure_horizon,
                                                  tolerances=tolerances)
                if np.max(amps) >= CYCLE_THRESHOLD:
                    cycle = True
                    break
            has_fp = bool(stable)
            if has_fp and cycle:
                labels[i, j] = "bistable"
            elif cycle:
                labels[i, j] = "oscillatory"
            else:
                labels[i, j] = "stationary"
    return RegimeMap(parameter_names=parameter_names, values_1=v1, values_2=v2,
                     labels=labels)
