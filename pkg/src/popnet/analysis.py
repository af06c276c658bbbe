"""Trace analytics: mixed-mode signatures, attractor residence, early jumps,
and the finite-size convergence experiment.

All statistics here operate on recorded traces and are deterministic given
the inputs; the convergence experiment drives simulations itself but takes
seeds explicitly and aggregates in a fixed order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .meanfield import MeanFieldModel, integrate
from .model import NetworkConfig
from .network import simulate_adaptation_network, simulate_wc_network

__all__ = [
    "MMOSignature",
    "SwitchStatistics",
    "EarlyJumpResult",
    "ConvergenceReport",
    "classify_mmo",
    "residence_statistics",
    "detect_early_jump",
    "convergence_experiment",
    "residence_radius",
]


# ---------------------------------------------------------------------------
# Mixed-mode signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MMOSignature:
    """Alternation pattern of large and small oscillations, as L^s blocks."""

    blocks: tuple[tuple[int, int], ...]
    large_amp: float
    small_amp: float

    @property
    def is_empty(self) -> bool:
        return not self.blocks

    @property
    def has_mixed_counts(self) -> bool:
        return any(L > 0 for L, s in self.blocks) and any(s > 0 for L, s in self.blocks)

    def dominant(self) -> Optional[tuple[int, int]]:
        """Most frequent interior block; the trace's nominal L^s type."""
        # first/last blocks may be clipped by the window
        inner = self.blocks[1:-1] if len(self.blocks) > 2 else self.blocks
        inner = [b for b in inner if b[0] > 0]
        if not inner:
            return None
        vals, counts = np.unique(np.array(inner), axis=0, return_counts=True)
        L, s = vals[np.argmax(counts)]
        return int(L), int(s)

    def __str__(self) -> str:
        d = self.dominant()
        return "empty" if d is None else f"{d[0]}^{d[1]}"


def _local_extrema(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    imax = np.where((u[1:-1] > u[:-2]) & (u[1:-1] >= u[2:]))[0] + 1
    imin = np.where((u[1:-1] < u[:-2]) & (u[1:-1] <= u[2:]))[0] + 1
    return imax, imin


def classify_mmo(trace, large_amp: float | None = None,
                 small_amp: float | None = None) -> MMOSignature:
    """Compress a trace's oscillations into L^s blocks.

    After linear detrending, each local maximum is measured by its swing
    against the higher of the two adjacent minima.  Swings at or above
    ``large_amp`` count large, those in [small_amp, large_amp) small, the
    rest are ignored.  Defaults: 50% and 2% of the detrended global
    peak-to-trough, which makes the visual classification explicit and
    testable.
    """
    u = np.asarray(trace, dtype=float)
    if u.ndim != 1 or u.size < 3:
        raise ValueError("trace must be one-dimensional with at least 3 samples")
    t = np.arange(u.size, dtype=float)
    slope, intercept = np.polyfit(t, u, 1)
    u = u - (slope * t + intercept)
    ptp = float(u.max() - u.min())
    if ptp == 0.0:
        return MMOSignature(blocks=(), large_amp=large_amp or 0.0, small_amp=small_amp or 0.0)
    if large_amp is None:
        large_amp = 0.5 * ptp
    if small_amp is None:
        small_amp = 0.02 * ptp
    if not 0 < small_amp < large_amp:
        raise ValueError("thresholds must satisfy 0 < small_amp < large_amp")

    imax, imin = _local_extrema(u)
    symbols = []
    for i in imax:
        prev_mins = imin[imin < i]
        next_mins = imin[imin > i]
        lo = max(u[prev_mins[-1]] if prev_mins.size else float(u.min()),
                 u[next_mins[0]] if next_mins.size else float(u.min()))
        swing = u[i] - lo
        if swing >= large_amp:
            symbols.append("L")
        elif swing >= small_amp:
            symbols.append("s")

    blocks: list[tuple[int, int]] = []
    n_large = n_small = 0
    for sym in symbols:
        if sym == "L":
            if n_small > 0:
                blocks.append((n_large, n_small))
                n_large, n_small = 0, 0
            n_large += 1
        else:
            n_small += 1
    if n_large or n_small:
        blocks.append((n_large, n_small))
    return MMOSignature(blocks=tuple(blocks), large_amp=float(large_amp),
                        small_amp=float(small_amp))


# ---------------------------------------------------------------------------
# Residence / switching statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SwitchStatistics:
    residence_fraction_stationary: float
    switch_count: int
    switch_times: tuple[float, ...]
    radius: float


def residence_statistics(times, trajectory, fixed_point, radius: float,
                         hysteresis: float = 1.2) -> SwitchStatistics:
    """Fraction of time spent near the stationary point, with debounce.

    A sample is near-stationary when within ``radius`` of the fixed point;
    once inside, the trajectory only counts as having left after exceeding
    ``hysteresis * radius``.  Every sample is classified exactly once, so
    the near and oscillatory fractions sum to one.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    t = np.asarray(times, dtype=float)
    X = np.atleast_2d(np.asarray(trajectory, dtype=float))
    if X.shape[0] != t.size:
        X = X.T
    fp = np.asarray(fixed_point, dtype=float)
    d = np.linalg.norm(X - fp, axis=1)
    near = np.empty(t.size, dtype=bool)
    state = d[0] < radius
    near[0] = state
    switch_times = []
    for i in range(1, t.size):
        if state:
            if d[i] > hysteresis * radius:
                state = False
                switch_times.append(t[i])
        else:
            if d[i] < radius:
                state = True
                switch_times.append(t[i])
        near[i] = state
    return SwitchStatistics(
        residence_fraction_stationary=float(near.mean()),
        switch_count=len(switch_times),
        switch_times=tuple(switch_times),
        radius=radius,
    )


def residence_radius(model: MeanFieldModel, fixed_point, cycle_starts,
                     transient: float = 60.0, horizon: float = 30.0,
                     tolerances=(1e-9, 1e-8), min_amplitude: float = 0.1) -> float:
    """Default ball radius: half the distance from the point to the cycle.

    The separating unstable orbit is not computed; a ball with debounce is
    the observable proxy.  ``cycle_starts`` is one state or a sequence of
    candidates; the first one that settles on a sustained oscillation
    (peak-to-peak above ``min_amplitude``) defines the cycle.  Raises if
    every candidate falls into the stationary basin.
    """
    starts = np.atleast_2d(np.asarray(cycle_starts, dtype=float))
    fp = np.asarray(fixed_point, dtype=float)
    for x0 in starts:
        warm = integrate(model, x0, horizon=transient, tolerances=tolerances)
        sol = integrate(model, warm.final_state, horizon=horizon, tolerances=tolerances,
                        output_dt=0.005)
        amps = sol.states.max(axis=0) - sol.states.min(axis=0)
        if float(np.max(amps)) < min_amplitude:
            continue  # this start was inside the stationary basin
        dmin = float(np.min(np.linalg.norm(sol.states - fp, axis=1)))
        return 0.5 * dmin
    raise ValueError("no cycle found from any candidate start; "
                     "is the model actually bistable or oscillatory here?")


# ---------------------------------------------------------------------------
# Early jumps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EarlyJumpResult:
    applicable: bool
    lead_times: tuple[float, ...]      # mean-field onset minus network onset
    mf_onsets: tuple[float, ...]
    network_onsets: tuple[float, ...]

    @property
    def median_lead(self) -> float:
        finite = [x for x in self.lead_times if math.isfinite(x)]
        return float(np.median(finite)) if finite else float("nan")


def _jump_onsets(times: np.ndarray, u: np.ndarray, level: float,
                 refractory: float) -> np.ndarray:
    above = u >= level
    crossings = np.where(~above[:-1] & above[1:])[0] + 1
    onsets = []
    last = -np.inf
    for i in crossings:
        if times[i] - last >= refractory:
            onsets.append(times[i])
            last = times[i]
    return np.array(onsets)


def detect_early_jump(network_times, network_trace, mf_times, mf_trace,
                      level: float | None = None) -> EarlyJumpResult:
    """Per-epoch lead of the network's large jumps over the mean-field ones.

    Epochs are delimited by the mean-field trace's jump onsets (upward
    crossings of a mid-range level); within each epoch the nearest network
    onset is matched and the lead time is the mean-field onset minus the
    network onset, so early network jumps give positive values.  Epoch-wise
    matching avoids the cumulative phase drift between the two systems.
    """
    tn = np.asarray(network_times, dtype=float)
    un = np.asarray(network_trace, dtype=float)
    tm = np.asarray(mf_times, dtype=float)
    um = np.asarray(mf_trace, dtype=float)
    lo, hi = um.min(), um.max()
    if hi - lo < 1e-12:
        return EarlyJumpResult(False, (), (), ())
    if level is None:
        level = 0.5 * (lo + hi)
    rough = _jump_onsets(tm, um, level, refractory=0.0)
    if rough.size < 2:
        return EarlyJumpResult(False, (), (), ())
    gap = float(np.median(np.diff(rough)))
    refractory = 0.4 * gap
    mf_onsets = _jump_onsets(tm, um, level, refractory)
    net_onsets = _jump_onsets(tn, un, level, refractory)
    if mf_onsets.size < 2 or net_onsets.size == 0:
        return EarlyJumpResult(False, (), (), ())

    leads, matched = [], []
    window = 0.6 * gap
    for onset in mf_onsets:
        k = np.argmin(np.abs(net_onsets - onset))
        if abs(net_onsets[k] - onset) <= window:
            leads.append(float(onset - net_onsets[k]))
            matched.append(float(net_onsets[k]))
        else:
            leads.append(float("nan"))
            matched.append(float("nan"))
    return EarlyJumpResult(True, tuple(leads), tuple(map(float, mf_onsets)),
                           tuple(matched))


# ---------------------------------------------------------------------------
# Mean-field convergence experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    sizes: tuple[int, ...]
    errors: tuple[float, ...]              # seed-averaged sup-norm distances
    per_seed: tuple[tuple[float, ...], ...]
    slope: Optional[float]
    slope_stderr: Optional[float]


def convergence_experiment(config_factory: Callable[[int, int], NetworkConfig],
                           sizes: Sequence[int], horizon: float,
                           seeds: Sequence[int],
                           tolerances=(1e-9, 1e-8),
                           check_unique_attractor: bool = False,
                           record_every: int = 10) -> ConvergenceReport:
    """Sup-norm distance between network means and the moment system vs N.

    ``config_factory(n, seed)`` builds the network at total size scale n;
    the matched moment system is derived from the config and started from
    the per-population initial means.  The error curve is fitted by least
    squares in log-log; with no randomness anywhere the fit is skipped and
    slope is None (errors then sit at integrator-tolerance level).
    """
    sizes = [int(n) for n in sizes]
    if len(sizes) < 2:
        raise ValueError("need at least two sizes")
    if sorted(sizes) != sizes:
        raise ValueError("sizes must be increasing")

    probe = config_factory(sizes[0], int(seeds[0]))
    model = MeanFieldModel.from_network(probe)
    if check_unique_attractor:
        from .bifurcation import classify_regimes
        rm = classify_regimes(lambda a, b: model, [0.0], [0.0])
        if rm.labels[0, 0] == "bistable":
            raise ValueError("bistable regime: the mean-field comparison is ill-posed; "
                             "choose a single-attractor parameter point")

    deterministic = all(p.sigmoid.noise_sd == 0.0 and p.initial_sd == 0.0
                        for p in probe.populations)

    per_seed_errors: list[list[float]] = []
    mean_errors: list[float] = []
    for n in sizes:
        errs = []
        for seed in seeds:
            cfg = config_factory(n, int(seed))
            sim = (simulate_adaptation_network if cfg.adaptation is not None
                   else simulate_wc_network)
            from .network import RecordingPlan
            rec = sim(cfg, RecordingPlan(every=record_every, sample_count=0))
            x0 = [p.initial_mean for p in cfg.populations]
            if cfg.adaptation is not None:
                x0.append(cfg.adaptation.initial)
            mf = integrate(MeanFieldModel.from_network(cfg), np.array(x0),
                           horizon=horizon, tolerances=tolerances,
                           output_dt=cfg.dt * record_every)
            n_common = min(rec.times.size, mf.times.size)
            P = rec.population_means.shape[1]
            diff = rec.population_means[:n_common] - mf.states[:n_common, :P]
            errs.append(float(np.max(np.abs(diff))))
        per_seed_errors.append(errs)
        mean_errors.append(float(np.mean(errs)))

    slope = stderr = None
    if not deterministic:
        x = np.log(np.array(sizes, dtype=float))
        y = np.log(np.array(mean_errors))
        A = np.vstack([x, np.ones_like(x)]).T
        coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        slope = float(coef[0])
        dof = len(sizes) - 2
        if dof > 0 and res.size:
            s2 = float(res[0]) / dof
            sxx = float(np.sum((x - x.mean()) ** 2))
            stderr = math.sqrt(s2 / sxx)
    return ConvergenceReport(sizes=tuple(sizes), errors=tuple(mean_errors),
                             per_seed=tuple(tuple(e) for e in per_seed_errors),
                             slope=slope, slope_stderr=stderr)
