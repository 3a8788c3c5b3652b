import json

import pytest

from statelab.cli import (
    DEFAULT_CONFIG, ExperimentConfig, ValidationError, load_config, main,
)


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main(list(argv) + ["--out", str(out)]), out


def write_config(tmp_path, data, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def small_config(tmp_path, **overrides):
    # statistical tolerances are pinned at 1e5 walkers, so keep that count
    data = {"grid": {"n_points": 256}}
    for k, v in overrides.items():
        if isinstance(v, dict):
            data.setdefault(k, {}).update(v)
        else:
            data[k] = v
    return write_config(tmp_path, data)


def test_geometry_identities_exit_zero(tmp_path, capsys):
    code, out = run(tmp_path, "geometry-identities")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["overall_pass"] is True
    assert (out / "overlap_distance.csv").exists()
    by_name = {c["name"]: c for c in report["checks"]}
    assert by_name["overlap-distance-identity-max-dev"]["value"] < 1e-8
    # stable per-check schema
    for c in report["checks"]:
        assert set(c) == {"name", "value", "reference", "tolerance", "pass", "mode", "note"}


def test_invalid_grid_exits_two(tmp_path, capsys):
    cfgp = write_config(tmp_path, {"grid": {"n_points": 0}})
    code, _ = run(tmp_path, "geometry-identities", "--config", cfgp)
    assert code == 2


def test_unknown_key_exits_two(tmp_path):
    cfgp = write_config(tmp_path, {"grids": {"n_points": 128}})
    code, _ = run(tmp_path, "geometry-identities", "--config", cfgp)
    assert code == 2


def test_unit_validation(tmp_path):
    cfgp = write_config(tmp_path, {"kernel": {"sigma": 0.5},
                                   "units": {"kernel.sigma": "time"}})
    code, _ = run(tmp_path, "geometry-identities", "--config", cfgp)
    assert code == 2
    with pytest.raises(ValidationError):
        ExperimentConfig({"units": {"mystery.field": "length"}})


def test_missing_config_file_exits_two(tmp_path):
    code, _ = run(tmp_path, "geometry-identities", "--config",
                  str(tmp_path / "absent.json"))
    assert code == 2


def test_flag_overrides():
    cfg = load_config(None, {"seed": 99, "walkers": 12345, "grid": 128})
    assert cfg.seed == 99
    assert cfg.diffusion.n_walkers == 12345
    assert cfg.grid.n_points == 128


def test_default_config_is_valid():
    cfg = ExperimentConfig({})
    assert cfg.grid.n_points == DEFAULT_CONFIG["grid"]["n_points"]
    assert cfg.kernel.sigma == DEFAULT_CONFIG["kernel"]["sigma"]


def test_born_diffusion_deterministic(tmp_path, capsys):
    cfgp = small_config(tmp_path)
    code1, out1 = run(tmp_path / "a", "born-diffusion", "--config", cfgp, "--seed", "42")
    code2, out2 = run(tmp_path / "b", "born-diffusion", "--config", cfgp, "--seed", "42")
    assert code1 == code2 == 0
    for name in ("report.json", "born_masses.csv", "born_histogram.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_report_overall_flag_is_conjunction(tmp_path):
    code, out = run(tmp_path, "solid-com")
    report = json.loads((out / "report.json").read_text())
    assert report["overall_pass"] == all(c["pass"] for c in report["checks"])
    assert code == (0 if report["overall_pass"] else 1)
