"""Vectorized fixed-step integration of the finite-size network equations.

Drift is advanced by explicit Euler while the per-unit input currents use
the exact Ornstein-Uhlenbeck transition, so all dt-bias sits in the drift
scheme.  The interaction is a population-mean field: each step computes the
P empirical means once and feeds every unit the same recurrent current.
The slow modulation variable, when present, is driven by the means only and
therefore stays identical across units; it is stored once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import erf as _erf

from .errors import IntegrationFault
from .model import NetworkConfig, TrajectoryRecord
from .noise import OuEnsemble, OuProcessSpec

__all__ = [
    "RecordingPlan",
    "NetworkState",
    "simulate_wc_network",
    "simulate_adaptation_network",
    "empirical_mean",
    "pairwise_correlation",
]

# RNG stream domains under the master seed (Philox key second word)
_DOMAIN_INITIAL = 0
_DOMAIN_OU_BASE = 1


@dataclass(frozen=True)
class RecordingPlan:
    """What to keep while stepping.

    ``every`` thins the output grid (record every k-th step; step 0 and the
    final step are always kept).  ``sample_count`` units, spread across the
    populations, get full per-unit traces; ``record_full`` keeps every unit
    instead and is gated separately because of its memory cost.
    """

    every: int = 10
    sample_count: int = 10
    sample_indices: Optional[tuple[int, ...]] = None
    record_full: bool = False

    def __post_init__(self):
        if self.every < 1:
            raise ValueError("every must be >= 1")
        if self.sample_count < 0:
            raise ValueError("sample_count must be >= 0")


@dataclass
class NetworkState:
    """Instantaneous snapshot of a network simulation."""

    activities: np.ndarray
    ou_values: np.ndarray
    time: float
    adaptation: Optional[float] = None


def _resolve_samples(config: NetworkConfig, plan: RecordingPlan) -> np.ndarray:
    if plan.record_full:
        return np.arange(config.total_size)
    if plan.sample_indices is not None:
        idx = np.asarray(plan.sample_indices, dtype=int)
        if idx.size and (idx.min() < 0 or idx.max() >= config.total_size):
            raise ValueError("sample index out of range")
        return idx
    if plan.sample_count == 0:
        return np.empty(0, dtype=int)
    # spread the budget across populations proportionally, then stride blocks
    total = config.total_size
    out: list[int] = []
    slices = config.block_slices()
    remaining = plan.sample_count
    for a, (pop, sl) in enumerate(zip(config.populations, slices)):
        if a == config.n_populations - 1:
            take = remaining
        else:
            take = max(1, round(plan.sample_count * pop.size / total))
            take = min(take, remaining)
        take = min(take, pop.size)
        if take > 0:
            local = np.linspace(0, pop.size - 1, take).round().astype(int)
            out.extend((sl.start + np.unique(local)).tolist())
        remaining -= take
        if remaining <= 0 and a < config.n_populations - 1:
            break
    return np.array(sorted(set(out)), dtype=int)


def _population_of(config: NetworkConfig, indices: np.ndarray) -> np.ndarray:
    bounds = np.cumsum([p.size for p in config.populations])
    return np.searchsorted(bounds, indices, side="right")


def simulate_wc_network(config: NetworkConfig, record: RecordingPlan | None = None) -> TrajectoryRecord:
    """Integrate the plain rate network (no slow modulation)."""
    if config.adaptation is not None:
        raise ValueError("config has an adaptation block; use simulate_adaptation_network")
    return _simulate(config, record or RecordingPlan())


def simulate_adaptation_network(config: NetworkConfig, record: RecordingPlan | None = None) -> TrajectoryRecord:
    """Integrate the network with the shared slow modulation current."""
    if config.adaptation is None:
        raise ValueError("config lacks an adaptation block; use simulate_wc_network")
    return _simulate(config, record or RecordingPlan())


def _simulate(config: NetworkConfig, plan: RecordingPlan) -> TrajectoryRecord:
    P = config.n_populations
    slices = config.block_slices()
    dt = config.dt
    n_steps = int(round(config.horizon / dt))
    J = config.coupling
    inputs = np.array([p.input for p in config.populations])
    lambdas = np.array([p.adaptation_weight for p in config.populations])
    gains = [p.sigmoid.gain for p in config.populations]
    kdt = [dt / p.time_constant for p in config.populations]

    rng_init = np.random.Generator(
        np.random.Philox(key=np.array([config.seed, _DOMAIN_INITIAL], dtype=np.uint64)))
    x = np.empty(config.total_size)
    for pop, sl in zip(config.populations, slices):
        if pop.initial_sd > 0:
            x[sl] = pop.initial_mean + pop.initial_sd * rng_init.standard_normal(pop.size)
        else:
            x[sl] = pop.initial_mean

    ensembles = [
        OuEnsemble(pop.size,
                   OuProcessSpec(pop.ou_relaxation_time, pop.sigmoid.noise_sd),
                   master_seed=config.seed, domain=_DOMAIN_OU_BASE + a)
        for a, pop in enumerate(config.populations)
    ]

    adapt = config.adaptation
    u = adapt.initial if adapt is not None else None

    sample_idx = _resolve_samples(config, plan)
    rec_steps = list(range(0, n_steps + 1, plan.every))
    if rec_steps[-1] != n_steps:
        rec_steps.append(n_steps)
    n_rec = len(rec_steps)
    times = np.array(rec_steps, dtype=float) * dt
    means_out = np.empty((n_rec, P))
    adapt_out = np.empty(n_rec) if adapt is not None else None
    samples_out = np.empty((n_rec, sample_idx.size)) if sample_idx.size else None

    means = np.empty(P)
    buf = np.empty(config.total_size)
    rec_pos = 0
    next_rec = rec_steps[0]

    for step in range(n_steps + 1):
        for a, sl in enumerate(slices):
            means[a] = x[sl].mean()
        if not np.all(np.isfinite(means)):
            raise IntegrationFault(step * dt)
        if step == next_rec:
            means_out[rec_pos] = means
            if adapt_out is not None:
                adapt_out[rec_pos] = u
            if samples_out is not None:
                samples_out[rec_pos] = x[sample_idx]
            rec_pos += 1
            next_rec = rec_steps[rec_pos] if rec_pos < n_rec else -1
        if step == n_steps:
            break

        base = inputs if adapt is None else inputs + lambdas * u
        cur = J @ means + base
        for a, sl in enumerate(slices):
            xa = x[sl]
            ba = buf[sl]
            np.add(ensembles[a].values, cur[a], out=ba)
            ba *= gains[a]
            _erf(ba, out=ba)
            ba -= xa
            ba *= kdt[a]
            xa += ba
            ensembles[a].step(dt)
        if adapt is not None:
            u = u + dt * adapt.rate * (adapt.offset + adapt.leak * u - means.sum())

    return TrajectoryRecord(
        times=times,
        population_means=means_out,
        seed_used=config.seed,
        adaptation_trace=adapt_out,
        neuron_samples=samples_out,
        sample_indices=sample_idx if sample_idx.size else None,
        sample_populations=_population_of(config, sample_idx) if sample_idx.size else None,
    )


def empirical_mean(state: NetworkState, config: NetworkConfig) -> np.ndarray:
    """Per-population arithmetic mean of the activities."""
    if state.activities.shape != (config.total_size,):
        raise ValueError("state size inconsistent with config")
    return np.array([state.activities[sl].mean() for sl in config.block_slices()])


def pairwise_correlation(record: TrajectoryRecord, pairs: Sequence[tuple[int, int]]) -> list[float]:
    """Pearson correlation over time of centered sampled activities.

    Each unit's trace is centered by its population's empirical mean at
    every recorded time, which removes the common mean-field motion; what
    remains measures pair dependence beyond the shared field.
    """
    if record.neuron_samples is None or record.sample_indices is None:
        raise ValueError("record has no per-unit samples")
    if record.times.size < 3:
        raise ValueError("record too short for correlations")
    idx = np.asarray(record.sample_indices)
    pos = {int(g): i for i, g in enumerate(idx)}
    pops = np.asarray(record.sample_populations, dtype=int)
    centered = record.neuron_samples - record.population_means[:, pops]
    out = []
    for i, j in pairs:
        if i not in pos or j not in pos:
            raise ValueError(f"pair ({i}, {j}) not covered by recorded samples")
        ci = centered[:, pos[i]]
        cj = centered[:, pos[j]]
        si, sj = ci.std(), cj.std()
        if si == 0.0 or sj == 0.0:
            out.append(1.0 if i == j else 0.0)
            continue
        out.append(float(np.mean((ci - ci.mean()) * (cj - cj.mean())) / (si * sj)))
    return out
