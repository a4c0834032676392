import json

import pytest

from degenctl import experiments as ex
from degenctl.cli import main
from degenctl.config import config_from_dict, dump_config, parse_config
from degenctl.errors import ConfigError

MINIMAL = {"problem": {"form": "divergence", "profile": {"type": "power", "K": 0.5}, "T": 1.0},
           "grid": {"N": 8, "Nt": 8}}


def write(tmp_path, data, name="c.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return p


def test_minimal_config_defaults(tmp_path):
    cfg = parse_config(write(tmp_path, MINIMAL))
    assert cfg.grid.theta == 1.0 and cfg.grid.gamma == 2.0
    assert cfg.hum.rho == 1.0 and cfg.hum.cg_tol == 1e-10 and cfg.hum.target_mode == "memory_type"
    assert cfg.control.moving.delta == 0.15
    assert cfg.problem.u0 == "sine_mode:1"
    assert config_from_dict(json.loads(dump_config(cfg))) == cfg


def test_inadmissible_exponent_rejected():
    data = json.loads(json.dumps(MINIMAL))
    data["problem"]["profile"]["K"] = 2.5
    with pytest.raises(ConfigError, match="K < 2"):
        config_from_dict(data)


def test_unknown_key_suggestion():
    data = dict(MINIMAL)
    data["problme"] = data.pop("problem")
    with pytest.raises(ConfigError, match="did you mean 'problem'"):
        config_from_dict(data)


def test_nested_unknown_key_path():
    data = json.loads(json.dumps(MINIMAL))
    data["problem"]["profile"]["kk"] = 1
    with pytest.raises(ConfigError, match=r"problem\.profile"):
        config_from_dict(data)


def test_json_syntax_error_position(tmp_path):
    with pytest.raises(ConfigError, match="line 2, column"):
        parse_config(write(tmp_path, '{"a": 1,\n  }'))


@pytest.mark.parametrize("patch", [
    {"hum": {"epsilons": [1e-3, 1e-2, 1e-4]}},
    {"control": {"fixed": {"l": 0.3, "r": 0.8}, "moving": {"delta": 0.1}}},
    {"control": {"fixed": {"l": 0.8, "r": 0.3}}},
    {"grid": {"N": 8, "Nt": 8, "theta": 0.7}},
    {"problem": {"form": "divergence", "profile": {"type": "power", "K": 0.5}, "T": 1.0, "u0": "wave"}},
    {"problem": {"form": "divergence", "profile": {"type": "power", "K": 0.5}, "T": 1.0,
                 "b": {"type": "sine", "mean": 0.2, "amplitude": 0.5}}},
])
def test_semantic_errors(patch):
    with pytest.raises(ConfigError):
        config_from_dict({**MINIMAL, **patch})


def test_shipped_configs_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for p in root.glob("*.json"):
        parse_config(p)


def test_cli_exit_codes(tmp_path, capsys):
    bad = json.loads(json.dumps(MINIMAL))
    bad["problem"]["profile"]["K"] = 2.5
    assert main(["hum", "--config", str(write(tmp_path, bad, "bad.json"))]) == 2
    assert "not null-controllable" in capsys.readouterr().err
    assert main(["hum"]) == 2


def test_cli_hum_zero_datum(tmp_path, capsys):
    data = json.loads(json.dumps(MINIMAL))
    data["problem"]["u0"] = "zero"
    assert main(["hum", "--config", str(write(tmp_path, data)), "--out", str(tmp_path / "o"), "-q"]) == 0
    assert "cost=0.000000e+00" in capsys.readouterr().out


def test_cli_sweep_s3_blowup(tmp_path, capsys):
    cfg = json.loads(dump_config(ex.suite_config("S3_fixed_memory_obstruction")))
    cfg["grid"].update(N=32, Nt=64)
    assert main(["sweep", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o"), "-q"]) == 0
    assert "verdict=CostBlowup" in capsys.readouterr().out
    assert {p.name for p in (tmp_path / "o").iterdir()} == {"S3_fixed_memory_obstruction_sweep.csv",
                                                            "S3_fixed_memory_obstruction_cost.svg"}


def test_cli_dump_config(capsys):
    assert main(["verify", "--dump-config"]) == 0
    assert json.loads(capsys.readouterr().out)["name"] == "S4_moving_memory"


@pytest.mark.slow
def test_cli_verify_default(tmp_path, capsys):
    assert main(["verify", "--out", str(tmp_path), "-q"]) == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and "checks passed" in out


def test_cli_other_subcommands(tmp_path):
    p = write(tmp_path, {**MINIMAL, "name": "m"})
    for sub in ("simulate", "compare-forms", "ksweep"):
        assert main([sub, "--config", str(p), "--out", str(tmp_path / sub), "-q"]) == 0
    assert (tmp_path / "simulate" / "m_trajectory.csv").exists()
    assert (tmp_path / "ksweep" / "m_ksweep.csv").exists()
