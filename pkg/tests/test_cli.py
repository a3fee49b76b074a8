import csv
import os
import subprocess
import sys

import numpy as np
import pytest

from torusphase import cli
from torusphase.config import ConfigError, build_background, parse_config
from torusphase.fields import load_field
from torusphase.functionals import evaluate_state, functional_report

REPO_SRC = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src")

QUICK_FLOW = """\
# quick hypercritical run on a coarse grid
grid_n = 8
scheme = imex
t_max = 40.0
residual_tol = 1e-7
sample_interval = 0.5
alpha = 1 0 0 1
f_hat = 3 0 0 3
bump_amplitude = 0.1
bump_modes = 1 0 1 0
"""

STATIONARY = """\
grid_n = 8
t_max = 1.0
residual_tol = 1e-9
sample_interval = 0.1
alpha = 1 0 0 1
f_hat = 3 0 0 3
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run_cli(args):
    return cli.main(list(args))


class TestConfigParsing:
    def test_round_trip(self, tmp_path):
        cfg = parse_config(write(tmp_path, "a.cfg", QUICK_FLOW))
        assert cfg.grid_n == 8
        assert cfg.scheme == "imex"
        assert cfg.bump_modes == [(1, 0, 1, 0)]
        assert np.allclose(cfg.alpha, np.eye(2))

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config(write(tmp_path, "a.cfg", QUICK_FLOW + "gridn = 8\n"))

    def test_missing_required(self, tmp_path):
        with pytest.raises(ConfigError, match="missing required"):
            parse_config(write(tmp_path, "a.cfg", "grid_n = 8\n"))

    def test_duplicate_key(self, tmp_path):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(write(tmp_path, "a.cfg", QUICK_FLOW + "grid_n = 8\n"))

    def test_bad_matrix(self, tmp_path):
        bad = QUICK_FLOW.replace("alpha = 1 0 0 1", "alpha = 1 0 0")
        with pytest.raises(ConfigError, match="matrix"):
            parse_config(write(tmp_path, "a.cfg", bad))

    def test_overrides(self, tmp_path):
        cfg = parse_config(write(tmp_path, "a.cfg", QUICK_FLOW), {"grid_n": 12, "seed": None})
        assert cfg.grid_n == 12
        assert cfg.seed == 0


class TestFlowCommand:
    def test_stationary_one_row_exit_zero(self, tmp_path):
        cfgp = write(tmp_path, "s.cfg", STATIONARY)
        out = tmp_path / "out"
        assert run_cli(["flow", "--config", cfgp, "--out", str(out)]) == 0
        rows = list(csv.reader(open(out / "trace.csv")))
        assert rows[0] == list(cli.fl.TRACE_COLUMNS)
        assert len(rows) == 2

    def test_flow_converges_and_snapshot_round_trips(self, tmp_path):
        cfgp = write(tmp_path, "q.cfg", QUICK_FLOW)
        out = tmp_path / "out"
        assert run_cli(["flow", "--config", cfgp, "--out", str(out)]) == 0
        with open(out / "trace.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[-1]["res_dhym_l2"]) < 1e-7
        # reload the snapshot and recompute the monitors of the final row
        phi = load_field(out / "phi_final.tpf")
        cfg = parse_config(cfgp)
        bg = build_background(cfg)
        rep = functional_report(evaluate_state(phi, bg), bg)
        last = rows[-1]
        assert rep.v_val == pytest.approx(float(last["V"]), abs=1e-12)
        assert rep.i_val == pytest.approx(float(last["I"]), abs=1e-12)
        assert rep.j_val == pytest.approx(float(last["J"]), abs=1e-12)
        assert rep.res_dhym_sup == pytest.approx(float(last["res_dhym_sup"]), abs=1e-12)
        assert rep.res_ma_sup == pytest.approx(float(last["res_ma_sup"]), abs=1e-12)

    def test_t_max_reached_exit_two(self, tmp_path):
        short = QUICK_FLOW.replace("t_max = 40.0", "t_max = 0.2")
        cfgp = write(tmp_path, "q.cfg", short)
        out = tmp_path / "out"
        assert run_cli(["flow", "--config", cfgp, "--out", str(out)]) == 2

    def test_malformed_config_exit_one_no_outputs(self, tmp_path, capsys):
        cfgp = write(tmp_path, "bad.cfg", QUICK_FLOW + "bogus_key = 1\n")
        out = tmp_path / "out"
        assert run_cli(["flow", "--config", cfgp, "--out", str(out)]) == 1
        assert not out.exists()
        assert "unknown key" in capsys.readouterr().err

    def test_non_hypercritical_start_exit_one(self, tmp_path, capsys):
        low = QUICK_FLOW.replace("f_hat = 3 0 0 3", "f_hat = 0.5 0 0 0.5")
        cfgp = write(tmp_path, "low.cfg", low)
        out = tmp_path / "out"
        assert run_cli(["flow", "--config", cfgp, "--out", str(out)]) == 1
        assert "hypercritical" in capsys.readouterr().err


class TestNewtonCommand:
    def test_writes_report_and_snapshot(self, tmp_path):
        cfgp = write(tmp_path, "q.cfg", QUICK_FLOW.replace("residual_tol = 1e-7",
                                                           "residual_tol = 1e-10"))
        out = tmp_path / "out"
        assert run_cli(["newton", "--config", cfgp, "--out", str(out)]) == 0
        with open(out / "newton.csv") as fh:
            row = list(csv.DictReader(fh))[0]
        assert float(row["res_dhym_sup"]) < 1e-9
        assert float(row["res_ma_sup"]) < 1e-8
        phi = load_field(out / "phi_newton.tpf")
        assert abs(phi.values.mean()) < 1e-13


class TestBlowupCommand:
    def test_table_values(self, tmp_path, capsys):
        assert run_cli(["blowup", "--m", "2", "--L", "1", "--s", "0,0.05,0.1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        header = lines[0].split(",")
        assert header[:5] == ["s", "t", "cot_theta", "e_defect", "h_coeff"]
        rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
        assert len(rows) == 3
        assert float(rows[0]["cot_theta"]) == -0.75
        for r in rows:
            assert abs(float(r["e_defect"])) < 1e-12
            assert float(r["dtds_fd0"]) == pytest.approx(0.75, abs=1e-5)

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "table.csv"
        assert run_cli(["blowup", "--m", "2", "--L", "1", "--s", "0.1", "--out", str(path)]) == 0
        assert path.read_text() == capsys.readouterr().out


class TestCheckCommand:
    def test_passes_on_defaults(self, capsys):
        assert run_cli(["check"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") >= 6


class TestDeterminism:
    def test_worker_count_does_not_change_bytes(self, tmp_path):
        # Two subprocess runs with different worker budgets must produce
        # byte-identical trace CSVs.
        cfgp = write(tmp_path, "q.cfg", QUICK_FLOW.replace("t_max = 40.0", "t_max = 2.0"))
        outs = []
        for workers in ("1", "2"):
            out = tmp_path / f"out_w{workers}"
            env = dict(os.environ, TORUSPHASE_WORKERS=workers, PYTHONPATH=REPO_SRC)
            r = subprocess.run(
                [sys.executable, "-m", "torusphase.cli", "flow",
                 "--config", cfgp, "--out", str(out)],
                env=env, capture_output=True,
            )
            assert r.returncode == 2, r.stderr.decode()
            outs.append((out / "trace.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_repeat_run_identical(self, tmp_path):
        cfgp = write(tmp_path, "q.cfg", QUICK_FLOW.replace("t_max = 40.0", "t_max = 1.0"))
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / tag
            assert run_cli(["flow", "--config", cfgp, "--out", str(out)]) == 2
            blobs.append((out / "trace.csv").read_bytes())
        assert blobs[0] == blobs[1]
