"""Named parameter presets shipped as versioned JSON data files.

A preset bundles a mean-field model, a matching network block, and derived
landmark values (Hopf locations, bands, windows) recorded when the preset
was calibrated.  Scalar parameters can be overridden by keyword, which is
also how the CLI's ``--set`` flags are applied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Iterable

import numpy as np

from .meanfield import MeanFieldModel
from .model import AdaptationSpec, NetworkConfig, PopulationSpec, SigmoidSpec

__all__ = ["Preset", "load_preset", "list_presets", "MODEL_OVERRIDE_KEYS", "NETWORK_OVERRIDE_KEYS"]

MODEL_OVERRIDE_KEYS = ("sigma1", "sigma2", "g1", "g2", "ze", "input2",
                       "epsilon", "tau2", "k", "gamma")
NETWORK_OVERRIDE_KEYS = ("n1", "n2", "dt", "horizon", "ou_relaxation_time",
                         "initial_sd", "u0")


def _preset_dir():
    return resources.files("popnet").joinpath("data/presets")


def list_presets() -> list[str]:
    names = []
    for entry in _preset_dir().iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[:-5])
    return sorted(names)


def load_preset(name: str) -> "Preset":
    path = _preset_dir().joinpath(f"{name}.json")
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return Preset(name=name, raw=raw)


@dataclass(frozen=True)
class Preset:
    name: str
    raw: dict

    @property
    def kind(self) -> str:
        return self.raw["model"]["kind"]

    @property
    def landmarks(self) -> dict:
        return self.raw.get("landmarks", {})

    def _model_params(self, overrides: dict) -> dict:
        m = dict(self.raw["model"])
        p = {
            "sigma1": m["noise_sd"][0], "sigma2": m["noise_sd"][1],
            "g1": m["gains"][0], "g2": m["gains"][1],
            "epsilon": m["epsilon"], "tau2": m.get("tau2", 1.0),
            "ze": m.get("ze", 0.0), "input2": m.get("input2", 0.0),
            "k": m.get("k"), "gamma": m.get("gamma"),
        }
        unknown = set(overrides) - set(p)
        if unknown:
            raise KeyError(f"unknown model override(s): {sorted(unknown)}")
        p.update(overrides)
        p["coupling"] = np.array(m["coupling"], dtype=float)
        return p

    def meanfield_model(self, **overrides) -> MeanFieldModel:
        p = self._model_params(overrides)
        sigmoids = (SigmoidSpec(p["g1"], p["sigma1"]), SigmoidSpec(p["g2"], p["sigma2"]))
        if self.kind == "wc2d":
            return MeanFieldModel.wc2d(p["coupling"], sigmoids, ze=p["ze"],
                                       epsilon=p["epsilon"], tau2=p["tau2"],
                                       input2=p["input2"])
        if self.kind == "wc3d":
            return MeanFieldModel.wc3d(p["coupling"], sigmoids, k=p["k"],
                                       gamma=p["gamma"], epsilon=p["epsilon"],
                                       tau2=p["tau2"])
        raise ValueError(f"preset kind {self.kind!r} not supported")

    def family(self, parameter: str, **fixed) -> Callable[[float], MeanFieldModel]:
        """One-parameter model family for sweeps and continuation."""
        def make(value: float) -> MeanFieldModel:
            kw = dict(fixed)
            kw[parameter] = float(value)
            return self.meanfield_model(**kw)
        return make

    def family2(self, p1: str, p2: str, **fixed):
        def make(a: float, b: float) -> MeanFieldModel:
            kw = dict(fixed)
            kw[p1] = float(a)
            kw[p2] = float(b)
            return self.meanfield_model(**kw)
        return make

    def network_config(self, seed: int, sizes: Iterable[int] | None = None,
                       initial_mean=None, **overrides) -> NetworkConfig:
        net = dict(self.raw["network"])
        model_over = {k: v for k, v in overrides.items() if k in MODEL_OVERRIDE_KEYS}
        net_over = {k: v for k, v in overrides.items() if k in NETWORK_OVERRIDE_KEYS}
        unknown = set(overrides) - set(model_over) - set(net_over)
        if unknown:
            raise KeyError(f"unknown network override(s): {sorted(unknown)}")
        p = self._model_params(model_over)
        if sizes is None:
            sizes = net["sizes"]
        sizes = [int(n) for n in sizes]
        if "n1" in net_over:
            sizes[0] = int(net_over["n1"])
        if "n2" in net_over:
            sizes[1] = int(net_over["n2"])
        dt = float(net_over.get("dt", net["dt"]))
        horizon = float(net_over.get("horizon", net["horizon"]))
        tau_ou = float(net_over.get("ou_relaxation_time", net["ou_relaxation_time"]))
        if initial_mean is None:
            initial_mean = net.get("initial_mean", [0.0, 0.0])
        init_sd = float(net_over.get("initial_sd", net.get("initial_sd", 0.0)))

        taus = (p["epsilon"], p["tau2"])
        gains = (p["g1"], p["g2"])
        noises = (p["sigma1"], p["sigma2"])
        if self.kind == "wc2d":
            inputs = (p["ze"], p["input2"])
            lambdas = (0.0, 0.0)
            adaptation = None
        else:
            inputs = (0.0, 0.0)
            lambdas = (1.0, 0.0)
            u0 = float(net_over.get("u0", net.get("adaptation_initial", 0.0)))
            adaptation = AdaptationSpec(rate=1.0, offset=p["k"], leak=p["gamma"],
                                        initial=u0)
        pops = tuple(
            PopulationSpec(size=sizes[a], time_constant=taus[a], input=inputs[a],
                           sigmoid=SigmoidSpec(gains[a], noises[a]),
                           ou_relaxation_time=tau_ou,
                           adaptation_weight=lambdas[a],
                           initial_mean=float(initial_mean[a]), initial_sd=init_sd)
            for a in range(2)
        )
        return NetworkConfig(populations=pops, coupling=p["coupling"], seed=int(seed),
                             dt=dt, horizon=horizon, adaptation=adaptation)
