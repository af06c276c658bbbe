"""Experiment runner: one subcommand per experiment family.

Every run writes its delimited outputs plus ``config.json`` (the fully
resolved configuration, valid as ``--config`` input for a byte-identical
re-run) and ``manifest.json`` (config echo plus the produced file list)
into the output directory.  Exit codes: 0 success, 1 configuration or
usage error, 2 numerical fault.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import classify_mmo
from .bifurcation import amplitude_sweep, classify_regimes, find_fixed_points, hopf_locus_1d
from .errors import BranchLostError, IntegrationFault, SchemaError, StiffnessError
from .experiments import (
    bench_run,
    convergence_from_preset,
    early_jump_experiment,
    pmap,
    residence_experiment,
)
from .io import solution_to_csv, trajectory_to_csv, write_csv, write_json
from .meanfield import integrate
from .network import RecordingPlan, simulate_adaptation_network, simulate_wc_network
from .presets import MODEL_OVERRIDE_KEYS, NETWORK_OVERRIDE_KEYS, Preset, list_presets, load_preset
from .schema import validate_config
from .slowfast import ReducedSystem, critical_manifold_patch, fold_line, folded_singularities, fsn2_locus

SUBCOMMANDS = ["simulate-network", "simulate-meanfield", "fixed-points", "hopf-scan",
               "amplitude-sweep", "regime-map", "fold-analysis", "fsn2-map",
               "mmo-classify", "residence", "early-jumps", "convergence", "bench"]

_INT_OVERRIDES = {"n1", "n2"}


def _parse_set(pairs: list[str]) -> dict:
    out = {}
    for item in pairs:
        if "=" not in item:
            raise SchemaError("--set", f"expected key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in MODEL_OVERRIDE_KEYS + NETWORK_OVERRIDE_KEYS:
            raise SchemaError(f"overrides.{key}", "unknown field")
        try:
            out[key] = int(raw) if key in _INT_OVERRIDES else float(raw)
        except ValueError:
            raise SchemaError(f"overrides.{key}", f"expected a number, got {raw!r}")
    return out


def _parse_range(text: str, want_step: bool = False):
    parts = text.split(":")
    if want_step and len(parts) == 3:
        lo, hi, step = map(float, parts)
        return lo, hi, step
    if not want_step and len(parts) == 2:
        lo, hi = map(float, parts)
        return lo, hi
    raise SchemaError("params.range", f"expected {'lo:hi:step' if want_step else 'lo:hi'}, got {text!r}")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="popnet",
                                description="Stochastic population-network experiments")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--preset", default="2d-canard", help=f"one of: {', '.join(list_presets())}")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="model/network override, repeatable")
        sp.add_argument("--seed", type=int, default=1)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--output-dir", "-o", default=None,
                        help="default: $POPNET_OUTDIR/<subcommand> or ./popnet_output/<subcommand>")
        plot = sp.add_mutually_exclusive_group()
        plot.add_argument("--plot", dest="plot", action="store_true", default=True)
        plot.add_argument("--no-plot", dest="plot", action="store_false")

    sp = sub.add_parser("run", help="execute a config file")
    sp.add_argument("--config", required=True)

    sp = sub.add_parser("simulate-network", help="integrate the finite network")
    common(sp)
    sp.add_argument("--record-every", type=int, default=10)
    sp.add_argument("--sample-count", type=int, default=10)

    sp = sub.add_parser("simulate-meanfield", help="integrate the limit system")
    common(sp)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--output-dt", type=float, default=None)
    sp.add_argument("--tol", type=float, nargs=2, default=(1e-9, 1e-8),
                    metavar=("ABS", "REL"))

    sp = sub.add_parser("fixed-points", help="equilibria and stability")
    common(sp)

    sp = sub.add_parser("hopf-scan", help="Hopf points along one parameter")
    common(sp)
    sp.add_argument("--parameter", default="sigma1")
    sp.add_argument("--range", dest="prange", required=True, metavar="LO:HI")
    sp.add_argument("--steps", type=int, default=60)

    sp = sub.add_parser("amplitude-sweep", help="forward/backward attractor amplitudes")
    common(sp)
    sp.add_argument("--parameter", default="ze")
    sp.add_argument("--range", dest="prange", required=True, metavar="LO:HI:STEP")
    sp.add_argument("--transient", type=float, default=60.0)
    sp.add_argument("--measure", type=float, default=40.0)

    sp = sub.add_parser("regime-map", help="stationary/bistable/oscillatory labels")
    common(sp)
    sp.add_argument("--parameter", default="sigma1")
    sp.add_argument("--values", required=True, help="comma-separated grid values")
    sp.add_argument("--parameter2", default=None)
    sp.add_argument("--values2", default=None)
    sp.add_argument("--transient", type=float, default=40.0)
    sp.add_argument("--measure", type=float, default=30.0)

    sp = sub.add_parser("fold-analysis", help="fold line and folded singularities")
    common(sp)

    sp = sub.add_parser("fsn2-map", help="fold-crossing equilibrium locus over (k, sigma1)")
    common(sp)
    sp.add_argument("--k-range", default="-20:20", metavar="LO:HI")
    sp.add_argument("--sigma1-range", default="0.5:2.2:0.1", metavar="LO:HI:STEP")
    sp.add_argument("--branch", type=int, default=0)

    sp = sub.add_parser("mmo-classify", help="L^s signature of a trace")
    common(sp)
    sp.add_argument("--input", default=None, help="trajectory CSV; default: integrate the preset")
    sp.add_argument("--column", default="mean_1")
    sp.add_argument("--large-amp", type=float, default=None)
    sp.add_argument("--small-amp", type=float, default=None)

    sp = sub.add_parser("residence", help="fraction of time near the stationary point")
    common(sp)
    sp.add_argument("--sigma1-values", default=None, help="comma-separated; default from preset")
    sp.add_argument("--seeds", type=int, default=20)
    sp.add_argument("--radius", type=float, default=None)
    sp.add_argument("--horizon", type=float, default=400.0)

    sp = sub.add_parser("early-jumps", help="network jump lead over the limit system")
    common(sp)
    sp.add_argument("--sizes", default="2000,10000", help="total unit counts")
    sp.add_argument("--segments", type=int, default=12)
    sp.add_argument("--anchor-fraction", type=float, default=0.45)

    sp = sub.add_parser("convergence", help="sup-norm error vs N with log-log fit")
    common(sp)
    sp.add_argument("--sizes", default="100,400,1600,6400")
    sp.add_argument("--seeds", type=int, default=10)
    sp.add_argument("--horizon", type=float, default=10.0)

    sp = sub.add_parser("bench", help="sizing reference run")
    common(sp)
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--t", type=float, default=1500.0)
    sp.add_argument("--dt", type=float, default=0.01)
    return p


def _resolve(args: argparse.Namespace) -> dict:
    """Materialize every default into a schema-valid config document."""
    sc = args.subcommand
    cfg = {
        "subcommand": sc,
        "preset": args.preset,
        "seed": args.seed,
        "threads": args.threads,
        "plot": args.plot,
        "overrides": _parse_set(args.set),
        "params": {},
    }
    outdir = args.output_dir
    if outdir is None:
        base = os.environ.get("POPNET_OUTDIR", "popnet_output")
        outdir = str(Path(base) / sc)
    cfg["output_dir"] = outdir
    p = cfg["params"]
    if sc == "simulate-network":
        p["record_every"] = args.record_every
        p["sample_count"] = args.sample_count
    elif sc == "simulate-meanfield":
        if args.horizon is not None:
            p["horizon"] = args.horizon
        if args.output_dt is not None:
            p["output_dt"] = args.output_dt
        p["tolerance_abs"], p["tolerance_rel"] = args.tol
    elif sc == "hopf-scan":
        p["parameter"] = args.parameter
        p["range"] = args.prange
        p["steps"] = args.steps
    elif sc == "amplitude-sweep":
        p["parameter"] = args.parameter
        p["range"] = args.prange
        p["transient"] = args.transient
        p["measure_horizon"] = args.measure
    elif sc == "regime-map":
        p["parameter"] = args.parameter
        p["values"] = [float(v) for v in args.values.split(",")]
        if args.parameter2:
            p["parameter2"] = args.parameter2
            p["values2"] = [float(v) for v in args.values2.split(",")]
        p["transient"] = args.transient
        p["measure_horizon"] = args.measure
    elif sc == "fsn2-map":
        p["k_range"] = args.k_range
        p["sigma1_range"] = args.sigma1_range
        p["branch"] = args.branch
    elif sc == "mmo-classify":
        if args.input:
            p["input"] = args.input
        p["column"] = args.column
        if args.large_amp is not None:
            p["large_amp"] = args.large_amp
        if args.small_amp is not None:
            p["small_amp"] = args.small_amp
    elif sc == "residence":
        if args.sigma1_values:
            p["sigma1_values"] = [float(v) for v in args.sigma1_values.split(",")]
        p["seeds"] = args.seeds
        if args.radius is not None:
            p["radius"] = args.radius
        p["horizon"] = args.horizon
    elif sc == "early-jumps":
        p["sizes"] = [int(v) for v in args.sizes.split(",")]
        p["segments"] = args.segments
        p["anchor_fraction"] = args.anchor_fraction
    elif sc == "convergence":
        p["sizes"] = [int(v) for v in args.sizes.split(",")]
        p["seeds"] = args.seeds
        p["horizon"] = args.horizon
    elif sc == "bench":
        p["n_total"] = args.n
        p["t_total"] = args.t
        p["dt"] = args.dt
    return validate_config(cfg)


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------

def _model_overrides(cfg: dict) -> dict:
    return {k: v for k, v in cfg["overrides"].items() if k in MODEL_OVERRIDE_KEYS}


def _initial_state(preset: Preset, model) -> np.ndarray:
    net = preset.raw.get("network", {})
    x0 = list(net.get("initial_mean", [0.0] * model.n_populations))
    if model.has_slow_variable:
        x0.append(net.get("adaptation_initial", 0.0))
    return np.array(x0, dtype=float)


def _run_simulate_network(cfg, preset: Preset, outdir: Path) -> list[str]:
    config = preset.network_config(seed=cfg["seed"], **cfg["overrides"])
    plan = RecordingPlan(every=cfg["params"]["record_every"],
                         sample_count=cfg["params"]["sample_count"])
    sim = simulate_adaptation_network if config.adaptation is not None else simulate_wc_network
    rec = sim(config, plan)
    trajectory_to_csv(outdir / "trajectory.csv", rec)
    files = ["trajectory.csv"]
    if cfg["plot"]:
        from .plots import plot_trajectory
        series = [rec.population_means[:, a] for a in range(rec.n_populations)]
        labels = [f"mean_{a + 1}" for a in range(rec.n_populations)]
        if rec.adaptation_trace is not None:
            series.append(rec.adaptation_trace)
            labels.append("adaptation")
        plot_trajectory(outdir / "trajectory.png", rec.times, series, labels,
                        title=f"{cfg['preset']} network, seed {cfg['seed']}")
        files.append("trajectory.png")
    return files


def _run_simulate_meanfield(cfg, preset: Preset, outdir: Path) -> list[str]:
    model = preset.meanfield_model(**_model_overrides(cfg))
    p = cfg["params"]
    horizon = p.get("horizon", preset.raw["network"]["horizon"])
    tol = (p.get("tolerance_abs", 1e-9), p.get("tolerance_rel", 1e-8))
    sol = integrate(model, _initial_state(preset, model), horizon=horizon,
                    tolerances=tol, output_dt=p.get("output_dt"))
    solution_to_csv(outdir / "meanfield.csv", sol, model.n_populations)
    files = ["meanfield.csv"]
    if cfg["plot"]:
        from .plots import plot_trajectory
        labels = [f"mean_{a + 1}" for a in range(model.n_populations)]
        series = [sol.states[:, a] for a in range(model.n_populations)]
        if model.has_slow_variable:
            labels.append("adaptation")
            series.append(sol.states[:, -1])
        plot_trajectory(outdir / "meanfield.png", sol.times, series, labels,
                        title=f"{cfg['preset']} limit system")
        files.append("meanfield.png")
    return files


def _default_box(model):
    box = [(-1.05, 1.05)] * model.n_populations
    if model.has_slow_variable:
        box.append((-8.0, 8.0))
    return box


def _run_fixed_points(cfg, preset: Preset, outdir: Path) -> list[str]:
    model = preset.meanfield_model(**_model_overrides(cfg))
    fps = find_fixed_points(model, _default_box(model), grid_density=12)
    dim = model.dimension
    header = [f"x{i + 1}" for i in range(dim)]
    header += [f"eig{i + 1}_re" for i in range(dim)] + [f"eig{i + 1}_im" for i in range(dim)]
    header += ["stability", "residual"]
    rows = []
    for fp in fps:
        rows.append(list(fp.location) + list(fp.eigenvalues.real)
                    + list(fp.eigenvalues.imag) + [fp.stability, fp.residual])
    write_csv(outdir / "fixed_points.csv", header, rows)
    return ["fixed_points.csv"]


def _run_hopf_scan(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    lo, hi = _parse_range(p["range"])
    over = _model_overrides(cfg)
    over.pop(p["parameter"], None)
    fam = preset.family(p["parameter"], **over)
    model0 = fam(lo)
    points = hopf_locus_1d(fam, (lo, hi), n_steps=p["steps"],
                           parameter_name=p["parameter"],
                           search_box=_default_box(model0))
    header = ["parameter", "value", "bracket_lo", "bracket_hi", "eig_re", "eig_im"]
    header += [f"x{i + 1}" for i in range(model0.dimension)]
    rows = [[b.parameter_name, b.parameter_value, b.bracket[0], b.bracket[1],
             b.eigenvalue.real, b.eigenvalue.imag] + list(b.state) for b in points]
    write_csv(outdir / "hopf.csv", header, rows)
    return ["hopf.csv"]


def _run_amplitude_sweep(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    lo, hi, step = _parse_range(p["range"], want_step=True)
    over = _model_overrides(cfg)
    over.pop(p["parameter"], None)
    fam = preset.family(p["parameter"], **over)
    model0 = fam(lo)
    x0 = _initial_state(preset, model0)
    points = amplitude_sweep(fam, (lo, hi), step=step, transient=p["transient"],
                             measure_horizon=p["measure_horizon"], x0=x0)
    dim = model0.dimension
    header = ["direction", "parameter"] + [f"amp{i + 1}" for i in range(dim)] + ["period", "converged"]
    rows = [[q.direction, q.parameter] + list(q.amplitudes) + [q.period, int(q.converged)]
            for q in points]
    write_csv(outdir / "sweep.csv", header, rows)
    files = ["sweep.csv"]
    if cfg["plot"]:
        from .plots import plot_sweep
        plot_sweep(outdir / "sweep.png", points, title=f"sweep over {p['parameter']}")
        files.append("sweep.png")
    return files


def _run_regime_map(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    over = _model_overrides(cfg)
    p1 = p["parameter"]
    p2 = p.get("parameter2")
    over.pop(p1, None)
    values1 = p["values"]
    if p2 is None:
        p2 = "ze" if p1 != "ze" else "sigma1"
        values2 = [preset._model_params(over)[p2]]
    else:
        values2 = p["values2"]
        over.pop(p2, None)
    fam = preset.family2(p1, p2, **over)
    rm = classify_regimes(fam, values1, values2, transient=p["transient"],
                          measure_horizon=p["measure_horizon"],
                          parameter_names=(p1, p2))
    rows = []
    for i, a in enumerate(rm.values_1):
        for j, b in enumerate(rm.values_2):
            rows.append([a, b, rm.labels[i, j]])
    write_csv(outdir / "regime_map.csv", [p1, p2, "label"], rows)
    files = ["regime_map.csv"]
    if cfg["plot"]:
        from .plots import plot_regime_map
        plot_regime_map(outdir / "regime_map.png", rm)
        files.append("regime_map.png")
    return files


def _run_fold_analysis(cfg, preset: Preset, outdir: Path) -> list[str]:
    model = preset.meanfield_model(**_model_overrides(cfg))
    if model.adaptation is None:
        raise SchemaError("preset", "fold-analysis requires a three-dimensional preset")
    sys_ = ReducedSystem(model)
    roots = fold_line(sys_)
    write_csv(outdir / "fold_line.csv", ["u1"], [[r] for r in roots])
    k, gamma = model.adaptation
    sings = folded_singularities(sys_, (k, gamma))
    header = ["u1", "ze", "u2", "kind", "eig1_re", "eig1_im", "eig2_re", "eig2_im",
              "fold_residual", "flow_residual"]
    rows = [[s.u1, s.ze, s.u2, s.kind,
             s.eigenvalues[0].real, s.eigenvalues[0].imag,
             s.eigenvalues[1].real, s.eigenvalues[1].imag,
             s.fold_residual, s.flow_residual] for s in sings]
    write_csv(outdir / "folded_singularities.csv", header, rows)
    u1g = np.linspace(-0.95, 0.95, 61)
    zeg = np.linspace(-2.0, 2.0, 41)
    patch = critical_manifold_patch(sys_, u1g, zeg)
    rows = [[u1g[i], zeg[j], patch[i, j]] for i in range(u1g.size) for j in range(zeg.size)]
    write_csv(outdir / "critical_manifold.csv", ["u1", "ze", "u2"], rows)
    return ["fold_line.csv", "folded_singularities.csv", "critical_manifold.csv"]


def _run_fsn2_map(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    # the k range only bounds the solver; a lo:hi:step spelling is accepted
    # with the step ignored
    k_parts = p["k_range"].split(":")
    k_lo, k_hi = float(k_parts[0]), float(k_parts[1])
    s_lo, s_hi, s_step = _parse_range(p["sigma1_range"], want_step=True)
    sigma1_values = np.arange(s_lo, s_hi + 0.5 * s_step, s_step)
    over = _model_overrides(cfg)
    over.pop("sigma1", None)
    fam = preset.family("sigma1", **over)
    curve = fsn2_locus(fam, (k_lo, k_hi), sigma1_values, branch=p["branch"])
    header = ["sigma1", "k", "u1", "ze", "u2", "residual"]
    rows = list(zip(curve.sigma1, curve.k, curve.u1, curve.ze, curve.u2, curve.residuals))
    write_csv(outdir / "fsn2.csv", header, rows)
    write_json(outdir / "fsn2_gaps.json", {"sigma1_without_solution": list(curve.gaps)})
    files = ["fsn2.csv", "fsn2_gaps.json"]
    if cfg["plot"]:
        from .plots import plot_fsn2_curve
        plot_fsn2_curve(outdir / "fsn2.png", curve)
        files.append("fsn2.png")
    return files


def _run_mmo_classify(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    if "input" in p:
        with open(p["input"], newline="") as fh:
            reader = csv.DictReader(fh)
            col = p["column"]
            if col not in reader.fieldnames:
                raise SchemaError("params.column", f"column {col!r} not in {p['input']}")
            trace = np.array([float(row[col]) for row in reader])
    else:
        from .experiments import mmo_preset_signature
        sig = mmo_preset_signature(preset, overrides=_model_overrides(cfg),
                                   large_amp=p.get("large_amp"), small_amp=p.get("small_amp"))
        write_json(outdir / "mmo.json", _signature_payload(sig))
        return ["mmo.json"]
    sig = classify_mmo(trace, large_amp=p.get("large_amp"), small_amp=p.get("small_amp"))
    write_json(outdir / "mmo.json", _signature_payload(sig))
    return ["mmo.json"]


def _signature_payload(sig) -> dict:
    return {
        "blocks": [list(b) for b in sig.blocks],
        "dominant": list(sig.dominant()) if sig.dominant() else None,
        "signature": str(sig),
        "large_amp": sig.large_amp,
        "small_amp": sig.small_amp,
    }


def _run_residence(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    sigma_values = p.get("sigma1_values") or preset.landmarks.get("residence_sigma1_values")
    if not sigma_values:
        raise SchemaError("params.sigma1_values", "required field is missing")
    res = residence_experiment(preset, sigma_values, seeds=range(1, p["seeds"] + 1),
                               radius=p.get("radius"), horizon=p["horizon"],
                               threads=cfg["threads"])
    write_csv(outdir / "residence.csv", ["sigma1", "seed", "fraction", "switches", "radius"],
              [[r["sigma1"], r["seed"], r["fraction"], r["switches"], r["radius"]]
               for r in res["rows"]])
    write_json(outdir / "residence_summary.json", {"summary": res["summary"]})
    files = ["residence.csv", "residence_summary.json"]
    if cfg["plot"]:
        from .plots import plot_residence
        plot_residence(outdir / "residence.png",
                       [s["sigma1"] for s in res["summary"]],
                       [s["mean_fraction"] for s in res["summary"]])
        files.append("residence.png")
    return files


def _run_early_jumps(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    res = early_jump_experiment(preset, sizes_total=p["sizes"], segments=p["segments"],
                                anchor_fraction=p["anchor_fraction"],
                                threads=cfg["threads"], overrides=cfg["overrides"])
    rows = []
    for n, block in res["sizes"].items():
        for i, lead in enumerate(block["leads"]):
            rows.append([n, i, lead])
    write_csv(outdir / "early_jumps.csv", ["n_total", "segment", "lead"], rows)
    write_json(outdir / "early_jumps.json", {
        "gap": res["gap"], "level": res["level"], "mf_onset": res["mf_onset"],
        "medians": {str(n): block["median"] for n, block in res["sizes"].items()},
    })
    return ["early_jumps.csv", "early_jumps.json"]


def _run_convergence(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    rep = convergence_from_preset(preset, sizes=p["sizes"],
                                  seeds=range(1, p["seeds"] + 1),
                                  horizon=p["horizon"], overrides=cfg["overrides"])
    write_csv(outdir / "convergence.csv", ["n", "mean_error"] ,
              [[n, e] for n, e in zip(rep.sizes, rep.errors)])
    write_json(outdir / "convergence.json", {
        "sizes": list(rep.sizes), "errors": list(rep.errors),
        "per_seed": [list(r) for r in rep.per_seed],
        "slope": rep.slope, "slope_stderr": rep.slope_stderr,
    })
    files = ["convergence.csv", "convergence.json"]
    if cfg["plot"]:
        from .plots import plot_convergence
        plot_convergence(outdir / "convergence.png", rep)
        files.append("convergence.png")
    return files


def _run_bench(cfg, preset: Preset, outdir: Path) -> list[str]:
    p = cfg["params"]
    res = bench_run(preset, n_total=p["n_total"], t_total=p["t_total"], dt=p["dt"],
                    seed=cfg["seed"])
    # simulation results are reproducible; the stopwatch reading is not and
    # goes into its own file
    deterministic = {k: res[k] for k in ("n_total", "t_total", "dt", "steps", "final_means")}
    write_json(outdir / "bench.json", deterministic)
    write_json(outdir / "bench_timing.json",
               {k: res[k] for k in ("seconds", "unit_steps_per_second")})
    print(f"bench: {res['seconds']:.2f} s for {res['n_total']} units x {res['steps']} steps "
          f"({res['unit_steps_per_second']:.3g} unit-steps/s)")
    if res["seconds"] > 66.0:
        warnings.warn(f"bench took {res['seconds']:.1f} s (> 66 s reference)")
    return ["bench.json", "bench_timing.json"]


_RUNNERS = {
    "simulate-network": _run_simulate_network,
    "simulate-meanfield": _run_simulate_meanfield,
    "fixed-points": _run_fixed_points,
    "hopf-scan": _run_hopf_scan,
    "amplitude-sweep": _run_amplitude_sweep,
    "regime-map": _run_regime_map,
    "fold-analysis": _run_fold_analysis,
    "fsn2-map": _run_fsn2_map,
    "mmo-classify": _run_mmo_classify,
    "residence": _run_residence,
    "early-jumps": _run_early_jumps,
    "convergence": _run_convergence,
    "bench": _run_bench,
}


def execute(config: dict) -> int:
    config = validate_config(config)
    outdir = Path(config["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    preset = load_preset(config.get("preset", "2d-canard"))
    files = _RUNNERS[config["subcommand"]](config, preset, outdir)
    write_json(outdir / "config.json", config)
    write_json(outdir / "manifest.json", {
        "config": config,
        "package_version": __version__,
        "outputs": sorted(files),
    })
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.subcommand == "run":
            with open(args.config) as fh:
                config = json.load(fh)
        else:
            config = _resolve(args)
        return execute(config)
    except SchemaError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (KeyError, ValueError, FileNotFoundError) as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return 1
    except (IntegrationFault, StiffnessError, BranchLostError) as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
