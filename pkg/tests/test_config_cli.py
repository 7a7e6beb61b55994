import csv
import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from ancsim import __version__, noise_variance, variance_statistic
from ancsim.cli import (ORACLE_COLUMNS, OUTAGE_COLUMNS, VARIANCE_COLUMNS, main,
                        run_oracle_check, run_variance_sweep)
from ancsim.config import load_config, parse_config
from ancsim.errors import ConfigError
from ancsim.outage import sample_ensemble
from ancsim.topology import build_symmetric_sweep

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """\
schema_version: 1
seed: 7
mode: {mode}
topology:
  num_pairs: 2
  alpha: 4.0
  sweep:
    steps: 3
    d_direct: [400, 1400]
    d_cross: [200, 1200]
    d_source_relay: [223.6, 1000]
    d_relay_dest: [223.6, 1000]
power:
  p_total: 2.0
  psi: [0.375, 0.375]
noise:
  model: thermal
  bandwidth_hz: 22.0e6
correlation:
  rho: [0.0, 0.9]
variance:
  n_draws: 3000
outage:
  n_trials: 3000
oracle:
  n_realizations: 2
  n_noise_draws: 20000
  tolerance: 0.05
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def small(tmp_path, mode="variance_sweep", **replace):
    text = SMALL.format(mode=mode)
    for old, new in replace.items():
        assert old in text
        text = text.replace(old, new)
    return write(tmp_path, text)


def error_of(path):
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    return str(exc.value)


# ------------------------------------------------------------------ config

@pytest.mark.parametrize("name", ["reference_variance.yaml", "reference_outage.yaml",
                                  "reference_oracle.yaml"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.p_total == 2.0
    np.testing.assert_array_equal(cfg.psi, [0.375, 0.375])
    assert cfg.allocation.p_relay == pytest.approx(0.5, rel=1e-15, abs=0)


def test_reference_sweep_config_matches_builtin():
    from ancsim import reference_sweep
    cfg = load_config(CONFIGS / "reference_variance.yaml")
    ref = reference_sweep()
    for f in ("d_direct", "d_cross", "d_source_relay", "d_relay_dest"):
        np.testing.assert_allclose(getattr(cfg.sweep, f), getattr(ref, f), rtol=1e-15)
    assert [r for r, _ in cfg.correlations] == [0.0, 0.3, 0.6, 0.9]


def test_defaults(tmp_path):
    cfg = load_config(small(tmp_path))
    assert (cfg.beta_db, cfg.beta, cfg.dest, cfg.statistic) == (0.0, 1.0, 0, "median")
    assert cfg.workers == 1 and cfg.oracle_tolerance == 0.05


def test_psi_error_names_field_and_line(tmp_path):
    msg = error_of(small(tmp_path, **{"psi: [0.375, 0.375]": "psi: [0.6, 0.6]"}))
    assert "cfg.yaml:15:" in msg and "power.psi" in msg and "exceeds 1" in msg


@pytest.mark.parametrize("old, new, field, line", [
    ("schema_version: 1", "schema_version: 2", "schema_version", 1),
    ("mode: variance_sweep", "mode: plot", "mode", 3),
    ("alpha: 4.0", "alpha: four", "topology.alpha", 6),
    ("steps: 3", "steps: 2.5", "topology.sweep.steps", 8),
    ("d_cross: [200, 1200]", "d_cross: [-1, 1200]", "topology.sweep.d_cross", 10),
    ("p_total: 2.0", "p_total: 0", "power.p_total", 14),
    ("rho: [0.0, 0.9]", "rho: [0.0, 1.5]", "correlation.rho", 20),
    ("model: thermal", "model: pink", "noise.model", 17),
    ("n_draws: 3000", "n_draws: 0", "variance.n_draws", 22),
    ("tolerance: 0.05", "tolerance: -1", "oracle.tolerance", 28),
])
def test_invalid_values_are_located(tmp_path, old, new, field, line):
    msg = error_of(small(tmp_path, **{old: new}))
    assert f"cfg.yaml:{line}: {field}:" in msg


def test_missing_required_field(tmp_path):
    msg = error_of(small(tmp_path, **{"  p_total: 2.0\n": ""}))
    assert "power.p_total" in msg and "missing" in msg


def test_statistic_is_validated(tmp_path):
    msg = error_of(small(tmp_path, **{"n_draws: 3000": "n_draws: 3000\n  statistic: mean"}))
    assert "variance.statistic" in msg


def test_gamma_matrices(tmp_path):
    good = {"2,1": np.eye(3).tolist(), "1,2": [[1, .5, .5], [.5, 1, .5], [.5, .5, 1]]}
    data = yaml.safe_load(SMALL.format(mode="variance_sweep"))
    del data["correlation"]["rho"]
    data["correlation"]["gamma"] = good
    cfg = parse_config(data)
    assert cfg.correlations[0][0] == "custom"
    data["correlation"]["gamma"]["1,2"] = [[1, .9, -.9], [.9, 1, .9], [-.9, .9, 1]]
    with pytest.raises(ConfigError, match="correlation.gamma"):
        parse_config(data)
    data["correlation"]["gamma"] = {"1,1": np.eye(3).tolist()}
    with pytest.raises(ConfigError, match="correlation.gamma"):
        parse_config(data)


def test_not_yaml(tmp_path):
    assert "not valid YAML" in error_of(write(tmp_path, "a: [1, 2\n"))


# --------------------------------------------------------------- sweep rows

def test_row_equals_direct_statistic(tmp_path):
    cfg = load_config(small(tmp_path))
    rows = run_variance_sweep(cfg)
    assert len(rows) == 3 * 2
    topo = build_symmetric_sweep(cfg.sweep)[1]
    label, spec = cfg.correlations[1]
    ens = sample_ensemble(spec, cfg.n_draws, cfg.seed)
    want = variance_statistic(ens, topo, cfg.allocation, cfg.noise)
    row = rows[1 * 2 + 1]
    assert (row["sweep_index"], row["rho"]) == (1, label)
    assert row["statistic_value"] == want
    assert row["distance_ref"] == topo.reference_distance


# ------------------------------------------------------------------ oracle

def test_oracle_without_noise_is_exact(tmp_path):
    cfg = load_config(small(tmp_path, "oracle_check", **{
        "model: thermal\n  bandwidth_hz: 22.0e6": "model: fixed\n  dest: 0.0\n  relay: 0.0"}))
    rows, ok = run_oracle_check(cfg)
    assert ok and all(r["rel_error"] == 0.0 and r["closed_form"] == 0.0 for r in rows)


def test_corrupted_closed_form_is_caught(tmp_path, caplog):
    cfg = load_config(small(tmp_path, "oracle_check"))
    assert run_oracle_check(cfg)[1]
    rows, ok = run_oracle_check(cfg, variance_fn=lambda *a: 1.2 * noise_variance(*a))
    assert not ok and not any(r["passed"] for r in rows)
    assert "oracle mismatch at realization 0" in caplog.text and "h_source_relay" in caplog.text


def test_cli_exit_status_on_oracle_failure(tmp_path):
    cfg = small(tmp_path, "oracle_check", **{"tolerance: 0.05": "tolerance: 1.0e-9"})
    out = tmp_path / "o.csv"
    assert main(["--config", str(cfg), "--out", str(out)]) == 1
    assert out.read_text().splitlines()[0] == ",".join(ORACLE_COLUMNS)


# --------------------------------------------------------------------- CLI

@pytest.mark.parametrize("mode, columns", [("variance_sweep", VARIANCE_COLUMNS),
                                           ("outage_sweep", OUTAGE_COLUMNS)])
def test_csv_is_byte_identical_across_runs(tmp_path, mode, columns):
    cfg = small(tmp_path, mode)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--config", str(cfg), "--out", str(a)]) == 0
    assert main(["--config", str(cfg), "--out", str(b)]) == 0
    raw = a.read_bytes()
    assert raw == b.read_bytes()
    assert raw.startswith((",".join(columns) + "\r\n").encode())
    assert raw.count(b"\r\n") == 1 + 3 * 2


def test_csv_round_trip(tmp_path):
    cfg_path = small(tmp_path)
    out = tmp_path / "v.csv"
    main(["--config", str(cfg_path), "--out", str(out)])
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    direct = run_variance_sweep(load_config(cfg_path))
    assert tuple(rows[0]) == VARIANCE_COLUMNS
    for got, want in zip(rows, direct):
        assert float(got["statistic_value"]) == want["statistic_value"]
        assert int(got["n_floored"]) == want["n_floored"]
        assert got["statistic"] == "median"


def test_overrides(tmp_path, capsys):
    cfg = small(tmp_path, "variance_sweep")
    assert main(["--config", str(cfg), "--mode", "outage_sweep", "--seed", "11",
                 "--trials", "500"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert tuple(rows[0]) == OUTAGE_COLUMNS
    assert {r["seed"] for r in rows} == {"11"} and {r["n_trials"] for r in rows} == {"500"}


def test_output_path_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = small(tmp_path, **{"oracle:": "output:\n  path: from_cfg.csv\noracle:"})
    assert main(["--config", str(cfg)]) == 0
    assert (tmp_path / "from_cfg.csv").exists()


@pytest.mark.parametrize("argv", [["--seed", "-1"], ["--trials", "0"], ["--workers", "0"]])
def test_bad_overrides_exit_2(tmp_path, argv):
    assert main(["--config", str(small(tmp_path))] + argv) == 2


def test_config_error_exit_2(tmp_path, caplog):
    cfg = small(tmp_path, **{"p_total: 2.0": "p_total: -2"})
    assert main(["--config", str(cfg)]) == 2
    assert "cfg.yaml:14: power.p_total" in caplog.text


def test_errors_go_to_stderr(tmp_path):
    cfg = small(tmp_path, **{"p_total: 2.0": "p_total: -2"})
    out = subprocess.run([sys.executable, "-m", "ancsim", "--config", str(cfg)],
                         capture_output=True, text=True)
    assert out.returncode == 2 and out.stdout == ""
    assert "power.p_total" in out.stderr


def test_unknown_mode_flag(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["--config", str(small(tmp_path)), "--mode", "plot"])
    assert exc.value.code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ancsim", "--version"], capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == f"ancsim {__version__}"
