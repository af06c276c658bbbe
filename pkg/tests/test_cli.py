import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from popnet.cli import execute, main
from popnet.errors import SchemaError
from popnet.presets import list_presets, load_preset
from popnet.schema import load_schema, validate_config


def test_presets_available():
    names = list_presets()
    assert {"2d-canard", "2d-bistable", "3d-mmo"} <= set(names)
    with pytest.raises(KeyError):
        load_preset("no-such-preset")


def test_preset_model_and_overrides():
    p = load_preset("2d-canard")
    m = p.meanfield_model()
    assert m.kind == "wc2d" and m.epsilon == 0.05
    m2 = p.meanfield_model(sigma1=2.0, epsilon=0.01)
    assert m2.sigmoids[0].noise_sd == 2.0 and m2.epsilon == 0.01
    with pytest.raises(KeyError):
        p.meanfield_model(bogus=1.0)

    m3 = load_preset("3d-mmo").meanfield_model()
    assert m3.kind == "wc3d" and m3.adaptation == (-5.613, -6.5)


def test_preset_network_config():
    p = load_preset("2d-canard")
    cfg = p.network_config(seed=3, n1=20, n2=30, horizon=1.0)
    assert cfg.populations[0].size == 20 and cfg.populations[1].size == 30
    assert cfg.seed == 3
    cfg3 = load_preset("3d-mmo").network_config(seed=1, n1=10, n2=10, horizon=0.01)
    assert cfg3.adaptation is not None
    assert cfg3.adaptation.offset == -5.613


VALID = {
    "subcommand": "simulate-network",
    "preset": "2d-canard",
    "seed": 1,
    "threads": 1,
    "plot": False,
    "output_dir": "out",
    "overrides": {"sigma1": 1.0, "n1": 10},
    "params": {"record_every": 5, "sample_count": 0},
}


def test_schema_accepts_valid():
    validate_config(VALID)


def test_schema_rejects_unknown_and_missing():
    bad = dict(VALID)
    bad.pop("subcommand")
    with pytest.raises(SchemaError) as e:
        validate_config(bad)
    assert "subcommand" in str(e.value)

    bad = dict(VALID, extra_field=1)
    with pytest.raises(SchemaError) as e:
        validate_config(bad)
    assert "extra_field" in str(e.value)

    bad = dict(VALID, overrides={"sigma1": "high"})
    with pytest.raises(SchemaError) as e:
        validate_config(bad)
    assert "overrides.sigma1" in str(e.value)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_schema_mutations_rejected_with_path(data):
    schema = load_schema()
    mode = data.draw(st.sampled_from(["drop_required", "unknown_key", "bad_type"]))
    cfg = json.loads(json.dumps(VALID))
    if mode == "drop_required":
        key = data.draw(st.sampled_from(schema["required"]))
        cfg.pop(key, None)
        expected = key
    elif mode == "unknown_key":
        where = data.draw(st.sampled_from(["", "overrides", "params"]))
        key = data.draw(st.text(min_size=1, max_size=8).filter(str.isidentifier))
        target = cfg if where == "" else cfg[where]
        known = set(schema["properties"].keys()) if where == "" else set(
            schema["properties"][where]["properties"].keys())
        if key in known:
            return
        target[key] = 1
        expected = key
    else:
        field = data.draw(st.sampled_from(["seed", "threads", "subcommand"]))
        cfg[field] = [1, 2]
        expected = field
    with pytest.raises(SchemaError) as e:
        validate_config(cfg)
    assert expected in str(e.value)


def _net_config(outdir, seed=5):
    return {
        "subcommand": "simulate-network",
        "preset": "2d-canard",
        "seed": seed,
        "threads": 1,
        "plot": False,
        "output_dir": str(outdir),
        "overrides": {"sigma1": 0.8, "n1": 40, "n2": 40, "horizon": 2.0},
        "params": {"record_every": 10, "sample_count": 4},
    }


def test_cli_round_trip_byte_identical(tmp_path):
    out = tmp_path / "run1"
    assert execute(_net_config(out)) == 0
    first = (out / "trajectory.csv").read_bytes()
    manifest = json.loads((out / "manifest.json").read_text())
    assert "trajectory.csv" in manifest["outputs"]

    # re-run from the echoed resolved config
    rc = main(["run", "--config", str(out / "config.json")])
    assert rc == 0
    assert (out / "trajectory.csv").read_bytes() == first


def test_cli_threads_do_not_change_outputs(tmp_path):
    base = {
        "subcommand": "residence",
        "preset": "2d-bistable",
        "seed": 1,
        "plot": False,
        "overrides": {"n1": 60, "n2": 60},
        "params": {"sigma1_values": [0.996, 1.004], "seeds": 2,
                   "horizon": 30.0, "radius": 0.15},
    }
    outs = []
    for threads, name in ((1, "t1"), (4, "t4")):
        cfg = dict(base, threads=threads, output_dir=str(tmp_path / name))
        assert execute(cfg) == 0
        outs.append((tmp_path / name / "residence.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_exit_codes(tmp_path, capsys):
    # schema violation -> 1
    cfg = _net_config(tmp_path / "bad")
    cfg["overrides"]["nope"] = 1.0
    bad_file = tmp_path / "bad.json"
    bad_file.write_text(json.dumps(cfg))
    assert main(["run", "--config", str(bad_file)]) == 1
    assert "nope" in capsys.readouterr().err

    # malformed --set -> 1
    assert main(["simulate-network", "--set", "sigma1", "-o", str(tmp_path / "x")]) == 1

    # numerical fault (continuation onto a fold) -> 2
    rc = main(["hopf-scan", "--preset", "2d-canard", "--set", "ze=-0.2",
               "--parameter", "sigma1", "--range", "0.4:0.6", "--steps", "10",
               "-o", str(tmp_path / "fault"), "--no-plot"])
    assert rc == 2


def test_cli_mmo_classify_from_csv(tmp_path):
    from popnet.io import write_csv
    t = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    block = np.concatenate([np.sin(t), 0.08 * np.sin(3 * t)])
    trace = np.tile(block, 4)
    csv_path = tmp_path / "trace.csv"
    write_csv(csv_path, ["time", "mean_1"], [[i * 0.01, v] for i, v in enumerate(trace)])
    out = tmp_path / "mmo"
    rc = main(["mmo-classify", "--input", str(csv_path), "--column", "mean_1",
               "-o", str(out), "--no-plot"])
    assert rc == 0
    payload = json.loads((out / "mmo.json").read_text())
    assert payload["dominant"] == [1, 3]
    assert payload["signature"] == "1^3"


def test_cli_fixed_points_and_meanfield(tmp_path):
    out = tmp_path / "fp"
    rc = main(["fixed-points", "--preset", "2d-canard", "--set", "sigma1=1.0",
               "-o", str(out), "--no-plot"])
    assert rc == 0
    text = (out / "fixed_points.csv").read_text()
    assert "stable-focus" in text

    out2 = tmp_path / "mf"
    rc = main(["simulate-meanfield", "--preset", "2d-canard", "--set", "sigma1=1.3",
               "--horizon", "30", "-o", str(out2), "--no-plot"])
    assert rc == 0
    assert (out2 / "meanfield.csv").exists()


def test_csv_uses_crlf(tmp_path):
    out = tmp_path / "fp"
    main(["fixed-points", "--preset", "2d-canard", "-o", str(out), "--no-plot"])
    raw = (out / "fixed_points.csv").read_bytes()
    assert b"\r\n" in raw


def test_plot_files_rendered_alongside_csv(tmp_path):
    out = tmp_path / "withplots"
    cfg = _net_config(out)
    cfg["plot"] = True
    assert execute(cfg) == 0
    assert (out / "trajectory.csv").exists()
    assert (out / "trajectory.png").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert "trajectory.png" in manifest["outputs"]
