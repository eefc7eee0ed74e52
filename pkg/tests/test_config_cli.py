from pathlib import Path

import pytest

from burgerlab import experiments
from burgerlab.cli import main
from burgerlab.config import (
    EXPERIMENTS,
    ConfigError,
    default_config,
    load,
    normalize,
    parse,
    parse_scan_values,
    serialize,
)
from burgerlab.experiments import RunRecord
from burgerlab.solver import SolverError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = {
    "evolve": "[grid]\nn = 64\n[time]\nt_end = 2.0\nrecord_every = 0.5\n",
    "stationary": "[grid]\nn = 64\n",
    "hbar": "[grid]\nn = 64\n[scan]\nparameter = p\nvalues = -2:2:5\n",
    "spectrum": "[grid]\nn = 256\n[time]\nt_end = 1.0\nrecord_every = 0.5\n[analysis]\nkmin = 2\nkmax = 32\n",
    "resonance": "[grid]\nn = 64\n[time]\nt_end = 10.0\n[scan]\nparameter = omega\nvalues = 0.0, 1.5\n",
    "rescale": "[grid]\nn = 64\n[time]\nt_end = 0.5\nrecord_every = 0.25\n[rescale]\nm = 2\n",
    "waveconv": "[grid]\nn = 64\n[time]\nt_end = 2.0\nrecord_every = 1.0\n",
}


def small_config(tmp_path, name):
    path = tmp_path / f"{name}.ini"
    text = SMALL[name]
    if "[analysis]" not in text:
        text += "[analysis]\nkmin = 2\nkmax = 16\n"
    path.write_text(f"[experiment]\nname = {name}\n" + text)
    return path


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_round_trip(path):
    text = path.read_text()
    cfg = load(path)
    assert serialize(cfg) == normalize(text)
    assert parse(serialize(cfg)) == cfg


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_defaults_serialize(name):
    assert parse(serialize(default_config(name))) == default_config(name)


def test_scan_values():
    assert parse_scan_values("0:1:3")[0] == (0.0, 0.5, 1.0)
    assert parse_scan_values("1, 2.5")[0] == (1.0, 2.5)
    with pytest.raises(ValueError):
        parse_scan_values("1:2")
    with pytest.raises(ConfigError, match=":4:"):
        parse("[experiment]\nname = hbar\n[scan]\nvalues = 1:2\n")


@pytest.mark.parametrize("text,needle", [
    ("[experiment]\nname = evolve\n[grid]\nn = 100\n", ":4:"),
    ("[experiment]\nname = evolve\n[grid]\nsize = 64\n", "unknown key"),
    ("[experiment]\nname = nothing\n", "unknown experiment"),
    ("[experiment]\nname = evolve\n[time]\ncfl = 0.9\n", "cfl"),
    ("[bogus]\nx = 1\n", "unknown section"),
])
def test_config_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse(text)


def test_command_must_match_config(tmp_path):
    path = small_config(tmp_path, "evolve")
    with pytest.raises(ConfigError):
        load(path, experiment="hbar")
    assert main(["hbar", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_cli_runs_every_experiment(tmp_path, name, capsys):
    out = tmp_path / "out"
    assert main([name, "--config", str(small_config(tmp_path, name)), "--out", str(out)]) == 0
    rec = RunRecord.load(out)
    assert rec.experiment == name and rec.missing_files() == []
    assert "config.ini" in rec.manifest and (out / "run_record.json").is_file()
    assert f'"experiment": "{name}"' in capsys.readouterr().out


def test_global_flags_before_subcommand(tmp_path):
    out = tmp_path / "o"
    assert main(["--out", str(out), "--config", str(small_config(tmp_path, "stationary")),
                 "stationary"]) == 0
    assert (out / "run_record.json").is_file()


def test_env_overrides_out(tmp_path, monkeypatch):
    env_out = tmp_path / "env"
    monkeypatch.setenv("BURGERS_OUT", str(env_out))
    assert main(["stationary", "--config", str(small_config(tmp_path, "stationary")),
                 "--out", str(tmp_path / "flag")]) == 0
    assert (env_out / "run_record.json").is_file() and not (tmp_path / "flag").exists()


def test_usage_and_config_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["nonsense"])
    assert exc.value.code == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nname = evolve\n[grid]\nn = 12\n")
    assert main(["evolve", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "bad.ini:4:" in capsys.readouterr().err
    assert main(["evolve", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["evolve", "--config", str(small_config(tmp_path, "evolve")), "--workers", "0",
                 "--out", str(tmp_path / "o")]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(cfg, out, workers):
        raise SolverError("blow-up")

    monkeypatch.setitem(experiments._DISPATCH, "evolve", boom)
    assert main(["evolve", "--config", str(small_config(tmp_path, "evolve")),
                 "--out", str(tmp_path / "o")]) == 3
    assert "numerical failure" in capsys.readouterr().err


@pytest.mark.parametrize("name", ["evolve", "resonance", "spectrum"])
def test_reruns_are_byte_identical(tmp_path, name):
    cfg = small_config(tmp_path, name)
    for d in ("a", "b"):
        assert main([name, "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    rec = RunRecord.load(tmp_path / "a")
    for rel in rec.manifest:
        if rel.endswith((".csv", ".ini")):
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel


def test_parallel_scan_matches_serial(tmp_path):
    cfg = small_config(tmp_path, "resonance")
    assert main(["resonance", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    assert main(["resonance", "--config", str(cfg), "--out", str(tmp_path / "p"),
                 "--workers", "2"]) == 0
    a = sorted((tmp_path / "s").rglob("*.csv"))
    assert a
    for f in a:
        assert f.read_bytes() == (tmp_path / "p" / f.relative_to(tmp_path / "s")).read_bytes()


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_plot_output(tmp_path, name):
    out = tmp_path / "o"
    assert main([name, "--config", str(small_config(tmp_path, name)), "--out", str(out),
                 "--plot"]) == 0
    rec = RunRecord.load(out)
    assert "plot/plot.gp" in rec.manifest and rec.missing_files() == []
    assert any(p.endswith(".dat") for p in rec.manifest)
