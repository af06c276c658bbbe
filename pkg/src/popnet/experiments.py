"""Experiment orchestration shared by the CLI and the acceptance suite.

Each function here glues the library pieces into one named experiment:
deterministic given (preset, seeds, parameters), aggregation in fixed
order, no hidden state.  Worker-pool parallelism only distributes
independent cells and never changes results.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .analysis import (
    classify_mmo,
    convergence_experiment,
    residence_radius,
    residence_statistics,
)
from .bifurcation import find_fixed_points, hopf_locus_1d, hysteresis_window
from .meanfield import MeanFieldModel, integrate
from .network import RecordingPlan, simulate_adaptation_network, simulate_wc_network
from .presets import MODEL_OVERRIDE_KEYS, Preset
from .slowfast import fsn2_locus


def _model_part(overrides: dict) -> dict:
    return {k: v for k, v in overrides.items() if k in MODEL_OVERRIDE_KEYS}

__all__ = [
    "pmap",
    "canard_window_comparison",
    "hopf_fsn2_distances",
    "residence_experiment",
    "early_jump_experiment",
    "convergence_from_preset",
    "mmo_preset_signature",
    "bench_run",
]


def pmap(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Map preserving order; results are independent of the thread count."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Canard explosion window (drive parameter, two timescale ratios)
# ---------------------------------------------------------------------------

def canard_window_comparison(preset: Preset, eps_values=(0.05, 0.01),
                             ze_range=(-0.55, -0.3), sigma1: float = 1.0,
                             coarse_step: float = 0.02, refine_tol: float = 1e-6,
                             transient: float = 60.0, measure_horizon: float = 50.0) -> dict:
    """Hysteresis window of the explosion in the drive, per timescale ratio."""
    out = {}
    for eps in eps_values:
        fam = preset.family("ze", epsilon=float(eps), sigma1=sigma1)
        win = hysteresis_window(fam, ze_range, coarse_step=coarse_step,
                                transient=transient, measure_horizon=measure_horizon,
                                refine_tol=refine_tol)
        out[float(eps)] = {
            "down_edge": win["down_edge"],
            "up_edge": win["up_edge"],
            "width": win["width"],
            "jump_ratio": win["jump_ratio"],
            "large_amplitude": win["large_amplitude"],
        }
    return out


# ---------------------------------------------------------------------------
# Hopf locus vs the fold-crossing curve in the 3-d system
# ---------------------------------------------------------------------------

def hopf_fsn2_distances(preset: Preset, eps_values=(0.005, 0.05), sigma1: float = 2.0,
                        k_scan: tuple[float, float] = (-6.6, -3.6), n_steps: int = 90) -> dict:
    """Distance in k between the Hopf point and the fold-crossing point.

    The fold-crossing (slow-reduction) point is independent of the
    timescale ratio; the Hopf of the full system approaches it as the
    ratio shrinks.
    """
    fam_sigma = preset.family("sigma1")
    curve = fsn2_locus(fam_sigma, k_range=(-20.0, 20.0), sigma1_values=[sigma1])
    if curve.k.size == 0:
        raise ValueError(f"no fold-crossing point at sigma1={sigma1}")
    k_star = float(curve.k[0])
    out = {"k_star": k_star, "residual": float(curve.residuals[0]), "hopf": {}}
    box = [(-1.05, 1.05), (-1.05, 1.05), (-3.0, 1.0)]
    for eps in eps_values:
        fam_k = preset.family("k", epsilon=float(eps), sigma1=sigma1)
        points = hopf_locus_1d(fam_k, k_scan, n_steps=n_steps, parameter_name="k",
                               search_box=box)
        ks = [p.parameter_value for p in points]
        out["hopf"][float(eps)] = {
            "k_values": ks,
            "distance": min(abs(k - k_star) for k in ks) if ks else None,
        }
    return out


# ---------------------------------------------------------------------------
# Residence fractions across the bistable band
# ---------------------------------------------------------------------------

def residence_experiment(preset: Preset, sigma1_values: Sequence[float],
                         seeds: Sequence[int], radius: float | None = None,
                         horizon: float = 400.0, n_per_pop: int | None = None,
                         record_every: int = 5, threads: int = 1) -> dict:
    """Per-noise-level residence fractions near the stationary point.

    For each noise level the stationary point is located on the mean-field
    model and every seeded network run is classified against the same ball.
    When no radius is given, half the distance from the point to the
    coexisting cycle is used (the module default), probed from a state
    carried over from the oscillatory side.
    """
    box = [(-1.05, 1.05)] * 2
    rows = []
    summary = []
    for s1 in sigma1_values:
        model = preset.meanfield_model(sigma1=float(s1))
        stable = [fp for fp in find_fixed_points(model, box, grid_density=10)
                  if fp.is_stable]
        if not stable:
            raise ValueError(f"no stable stationary point at sigma1={s1}")
        fp = stable[0].location
        if radius is None:
            carrier = integrate(preset.meanfield_model(sigma1=float(s1) + 0.02),
                                np.array([0.4, 0.2]), horizon=150.0).final_state
            rad = residence_radius(model, fp, [carrier, np.array([0.9, -0.4])])
        else:
            rad = float(radius)

        def one(seed: int, s1=s1, fp=fp, rad=rad):
            cfg = preset.network_config(seed=seed, sigma1=float(s1),
                                        initial_mean=fp, horizon=horizon,
                                        **({"n1": n_per_pop, "n2": n_per_pop}
                                           if n_per_pop else {}))
            rec = simulate_wc_network(cfg, RecordingPlan(every=record_every, sample_count=0))
            st = residence_statistics(rec.times, rec.population_means, fp, rad)
            return st

        stats = pmap(one, list(seeds), threads)
        for seed, st in zip(seeds, stats):
            rows.append({"sigma1": float(s1), "seed": int(seed),
                         "fraction": st.residence_fraction_stationary,
                         "switches": st.switch_count, "radius": st.radius})
        summary.append({"sigma1": float(s1),
                        "mean_fraction": float(np.mean([st.residence_fraction_stationary
                                                        for st in stats])),
                        "radius": rad})
    return {"rows": rows, "summary": summary}


# ---------------------------------------------------------------------------
# Early jumps: anchored single-epoch segments
# ---------------------------------------------------------------------------

def early_jump_experiment(preset: Preset, sizes_total: Sequence[int] = (2000, 10000),
                          segments: int = 12, seed0: int = 1,
                          anchor_fraction: float = 0.45, level_fraction: float = 0.7,
                          horizon_fraction: float = 0.8, threads: int = 1,
                          overrides: dict | None = None) -> dict:
    """Per-epoch lead of network jumps over the limit-system jump.

    One mean-field epoch is anchored a fixed fraction of a period before
    the deterministic jump; each segment then runs the finite network from
    the same state and records how much earlier it crosses the jump level.
    Segments are independent, so no cross-epoch phase drift accumulates.
    """
    overrides = dict(overrides or {})
    model = preset.meanfield_model(**_model_part(overrides))
    warm = integrate(model, _default_initial(preset, model), horizon=120.0,
                     tolerances=(1e-10, 1e-9))
    lap = integrate(model, warm.final_state, horizon=20.0, tolerances=(1e-10, 1e-9),
                    output_dt=0.001)
    u = lap.states[:, 0]
    level = float(u.min() + level_fraction * (u.max() - u.min()))
    crossings = np.where((u[:-1] < level) & (u[1:] >= level))[0] + 1
    if crossings.size < 3:
        raise ValueError("attractor shows no repeated large jumps; not applicable")
    onsets = lap.times[crossings]
    gap = float(np.median(np.diff(onsets)))
    t_anchor = onsets[1] - anchor_fraction * gap
    x_anchor = lap.states[np.searchsorted(lap.times, t_anchor)]
    horizon = horizon_fraction * gap

    mf = integrate(model, x_anchor, horizon=horizon, tolerances=(1e-10, 1e-9),
                   output_dt=0.001)
    um = mf.states[:, 0]
    mc = np.where((um[:-1] < level) & (um[1:] >= level))[0]
    if mc.size == 0:
        raise ValueError("mean-field jump did not occur within the segment")
    mf_onset = float(mf.times[mc[0] + 1])

    results = {"level": level, "gap": gap, "mf_onset": mf_onset, "sizes": {}}
    for n_total in sizes_total:
        n_pop = int(n_total) // 2

        def one(seed: int) -> float:
            cfg = preset.network_config(seed=seed, n1=n_pop, n2=n_pop,
                                        horizon=horizon, initial_mean=x_anchor[:2],
                                        u0=float(x_anchor[2]), initial_sd=0.0,
                                        **overrides)
            rec = simulate_adaptation_network(cfg, RecordingPlan(every=1, sample_count=0))
            un = rec.population_means[:, 0]
            cr = np.where((un[:-1] < level) & (un[1:] >= level))[0]
            if cr.size == 0:
                return float("nan")
            return mf_onset - float(rec.times[cr[0] + 1])

        leads = pmap(one, list(range(seed0, seed0 + segments)), threads)
        finite = [x for x in leads if math.isfinite(x)]
        results["sizes"][int(n_total)] = {
            "leads": leads,
            "median": float(np.median(finite)) if finite else float("nan"),
        }
    return results


def _default_initial(preset: Preset, model: MeanFieldModel) -> np.ndarray:
    net = preset.raw.get("network", {})
    x0 = list(net.get("initial_mean", [0.0] * model.n_populations))
    if model.has_slow_variable:
        x0.append(net.get("adaptation_initial", 0.0))
    return np.array(x0, dtype=float)


# ---------------------------------------------------------------------------
# Mean-field convergence from a preset
# ---------------------------------------------------------------------------

def convergence_from_preset(preset: Preset, sizes: Sequence[int], seeds: Sequence[int],
                            horizon: float = 10.0, overrides: dict | None = None,
                            anchor_at_fixed_point: bool = True):
    """Convergence experiment wired to a preset's stationary regime."""
    overrides = dict(overrides or {})
    model = preset.meanfield_model(**_model_part(overrides))
    initial = None
    if anchor_at_fixed_point:
        box = [(-1.05, 1.05)] * model.n_populations
        if model.has_slow_variable:
            box.append((-8.0, 8.0))
        stable = [fp for fp in find_fixed_points(model, box, grid_density=10)
                  if fp.is_stable]
        if not stable:
            raise ValueError("no stable stationary point; choose another regime")
        initial = stable[0].location

    def factory(n: int, seed: int):
        kw = dict(overrides)
        kw.update(n1=n, n2=n, horizon=horizon)
        return preset.network_config(seed=seed, initial_mean=initial, **kw)

    return convergence_experiment(factory, sizes=list(sizes), horizon=horizon,
                                  seeds=list(seeds))


# ---------------------------------------------------------------------------
# Mixed-mode signature of a preset attractor
# ---------------------------------------------------------------------------

def mmo_preset_signature(preset: Preset, transient: float = 120.0,
                         horizon: float = 180.0, overrides: dict | None = None,
                         large_amp=None, small_amp=None):
    model = preset.meanfield_model(**_model_part(overrides or {}))
    warm = integrate(model, _default_initial(preset, model), horizon=transient,
                     tolerances=(1e-10, 1e-9))
    sol = integrate(model, warm.final_state, horizon=horizon,
                    tolerances=(1e-10, 1e-9), output_dt=0.002)
    return classify_mmo(sol.states[:, 0], large_amp=large_amp, small_amp=small_amp)


# ---------------------------------------------------------------------------
# Sizing benchmark
# ---------------------------------------------------------------------------

def bench_run(preset: Preset, n_total: int = 2000, t_total: float = 1500.0,
              dt: float = 0.01, seed: int = 1) -> dict:
    """Wall-time reference run: two populations, long horizon, fixed step."""
    n_pop = n_total // 2
    cfg = preset.network_config(seed=seed, n1=n_pop, n2=n_pop, dt=dt,
                                horizon=t_total, epsilon=max(dt * 10.0, 0.1),
                                sigma1=0.5)
    t0 = time.perf_counter()
    rec = simulate_wc_network(cfg, RecordingPlan(every=100, sample_count=0))
    elapsed = time.perf_counter() - t0
    n_steps = int(round(t_total / dt))
    return {
        "n_total": int(n_total),
        "t_total": float(t_total),
        "dt": float(dt),
        "steps": n_steps,
        "seconds": elapsed,
        "unit_steps_per_second": n_total * n_steps / elapsed,
        "final_means": rec.population_means[-1].tolist(),
    }
