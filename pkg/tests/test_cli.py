"""Command-line interface: flags, exit codes, JSON output, round trips."""

import json
import math

import numpy as np
import pytest

from hyperstab.cli import main
from hyperstab.corpus import bundled_corpus_path
from hyperstab.signals import Signal, write_trace_csv


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestClassify:
    def test_sspr_entry(self, capsys):
        code, out, _ = run_cli(capsys, "classify", "--tf", "2,1;1,1")
        assert code == 0
        report = json.loads(out)
        # descending '2,1' is 2s+1: Re = (1+2w^2)/(1+w^2), minimum 1 at w=0
        assert report["grade"] == "SSPR"
        assert report["d"] == pytest.approx(1.0)

    def test_integrator(self, capsys):
        code, out, _ = run_cli(capsys, "classify", "--tf", "1;1,0")
        assert code == 0
        report = json.loads(out)
        assert report["grade"] == "PR"
        assert report["single_pole_at_origin"] is True
        assert report["g1_grade"] == "SSPR"

    def test_zero_denominator_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "classify", "--tf", "1;0")
        assert code == 2
        assert "error" in err

    def test_improper_exit_3(self, capsys):
        code, _, _ = run_cli(capsys, "classify", "--tf", "1,0,0;1,1")
        assert code == 3

    def test_garbage_exit_2(self, capsys):
        code, _, _ = run_cli(capsys, "classify", "--tf", "a,b;c")
        assert code == 2

    def test_json_file_output(self, capsys, tmp_path):
        out_file = tmp_path / "cls.json"
        code, out, _ = run_cli(
            capsys, "classify", "--tf", "1;1,1", "--json", str(out_file)
        )
        assert code == 0
        report = json.loads(out_file.read_text())
        assert report["grade"] == "WSPR"
        assert report["d0"] == pytest.approx(1.0)

    def test_grid_env_override(self, capsys, monkeypatch):
        monkeypatch.setenv("HYPERSTAB_GRID_POINTS", "128")
        code, out, _ = run_cli(capsys, "classify", "--tf", "2,1;1,1")
        assert code == 0
        assert json.loads(out)["grade"] == "SSPR"

    def test_bad_grid_env_exit_2(self, capsys, monkeypatch):
        monkeypatch.setenv("HYPERSTAB_GRID_POINTS", "banana")
        code, _, err = run_cli(capsys, "classify", "--tf", "2,1;1,1")
        assert code == 2

    def test_unknown_flag_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["classify", "--tf", "1;1,1", "--frobnicate"])
        assert exc.value.code == 2


class TestSimulate:
    def _write_scenario(self, tmp_path, data):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(data))
        return path

    def test_sspr_demo(self, capsys, tmp_path):
        path = self._write_scenario(tmp_path, {
            "plant": {"num": [2, 1], "den": [1, 1]},
            "device": {"kind": "StaticSector", "params": {"k1": 1.0, "k2": 1.0}},
            "x0": [2.0], "excitation": None, "dt": 1e-3, "horizon": 50.0,
        })
        code, out, _ = run_cli(capsys, "simulate", "--scenario", str(path),
                               "--out-dir", str(tmp_path / "run"))
        assert code == 0
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        assert report["verdict"] == "AsymptoticallyHyperstableEvidence"
        assert (tmp_path / "run" / "traces.csv").exists()

    def test_unstable_demo_exit_4_with_artifacts(self, capsys, tmp_path):
        path = self._write_scenario(tmp_path, {
            "plant": {"num": [1], "den": [-1, 1]},
            "device": {"kind": "StaticSector", "params": {"k1": 0.5, "k2": 0.5}},
            "x0": [1.0], "excitation": None, "dt": 1e-3, "horizon": 50.0,
        })
        code, out, _ = run_cli(capsys, "simulate", "--scenario", str(path),
                               "--out-dir", str(tmp_path / "run"))
        assert code == 4
        report = json.loads((tmp_path / "run" / "report.json").read_text())
        assert report["verdict"] == "Diverged"
        assert (tmp_path / "run" / "traces.csv").exists()

    def test_missing_file_exit_2(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "simulate", "--scenario",
                               str(tmp_path / "nope.json"),
                               "--out-dir", str(tmp_path))
        assert code == 2

    def test_schema_error_exit_2(self, capsys, tmp_path):
        path = self._write_scenario(tmp_path, {"plant": {"num": [1]}})
        code, _, _ = run_cli(capsys, "simulate", "--scenario", str(path),
                             "--out-dir", str(tmp_path))
        assert code == 2


class TestAudit:
    def test_unit_trace(self, capsys, tmp_path):
        t = 1e-3 * np.arange(1001)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, {"t": t, "u": np.ones(1001), "y": np.ones(1001)})
        code, out, _ = run_cli(capsys, "audit", "--traces", str(path))
        assert code == 0
        report = json.loads(out)
        assert "WeaklyStrictlyPassive" in report["labels"]
        assert report["gamma0_sq"] == 0.0

    def test_storage_columns(self, capsys, tmp_path):
        t = 1e-3 * np.arange(2001)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, {
            "t": t, "u": np.ones(2001), "y": np.ones(2001),
            "S": np.full(2001, 2.0), "D": 3.0 * np.exp(-t),
        })
        code, out, _ = run_cli(capsys, "audit", "--traces", str(path),
                               "--with-storage")
        assert code == 0
        report = json.loads(out)
        assert "Regenerative" in report["labels"]
        assert report["residual_max"] is not None

    def test_missing_column_exit_2(self, capsys, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("t,u\n0,1\n0.001,1\n")
        code, _, err = run_cli(capsys, "audit", "--traces", str(path))
        assert code == 2

    def test_simulate_audit_round_trip(self, capsys, tmp_path):
        scenario = tmp_path / "scenario.json"
        scenario.write_text(json.dumps({
            "plant": {"num": [2, 1], "den": [1, 1]},
            "device": {"kind": "StaticSector", "params": {"k1": 1.0, "k2": 1.0}},
            "x0": [2.0], "excitation": None, "dt": 1e-3, "horizon": 10.0,
        }))
        code, _, _ = run_cli(capsys, "simulate", "--scenario", str(scenario),
                             "--out-dir", str(tmp_path / "run"))
        assert code == 0
        run_report = json.loads((tmp_path / "run" / "report.json").read_text())
        code, out, _ = run_cli(capsys, "audit", "--traces",
                               str(tmp_path / "run" / "traces.csv"))
        assert code == 0
        audit_report = json.loads(out)
        assert audit_report["gamma0_sq"] == pytest.approx(
            run_report["gamma0_sq_trace"], abs=1e-12
        )


class TestParseval:
    def _trace(self, tmp_path, u, dt=1e-3):
        t = dt * np.arange(u.size)
        path = tmp_path / "trace.csv"
        write_trace_csv(path, {"t": t, "u": u, "y": u})
        return path

    def test_rect_pulse(self, capsys, tmp_path):
        path = self._trace(tmp_path, np.ones(1001))
        code, out, _ = run_cli(capsys, "parseval", "--traces", str(path))
        assert code == 0
        report = json.loads(out)
        assert report["time_energy"] == pytest.approx(1.0)
        assert report["rel_error"] <= 1e-6

    def test_decaying_exponential(self, capsys, tmp_path):
        t = 1e-3 * np.arange(10001)
        path = self._trace(tmp_path, np.exp(-t))
        code, out, _ = run_cli(capsys, "parseval", "--traces", str(path))
        assert code == 0
        report = json.loads(out)
        assert report["time_energy"] == pytest.approx(0.5, abs=1e-5)
        assert report["freq_energy"] == pytest.approx(0.5, abs=1e-5)

    def test_missing_columns_exit_2(self, capsys, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("t,z\n0,1\n0.001,1\n")
        code, _, _ = run_cli(capsys, "parseval", "--traces", str(path))
        assert code == 2


class TestCorpus:
    def test_bundled_corpus_passes(self, capsys):
        code, out, _ = run_cli(capsys, "corpus", "--file", bundled_corpus_path())
        assert code == 0
        assert "0 mismatches" in out

    def test_mismatch_exit_6(self, capsys, tmp_path):
        path = tmp_path / "corpus.json"
        path.write_text(json.dumps(
            [{"id": "wrong", "num": [2, 1], "den": [1, 1], "grade": "NotPR"}]
        ))
        code, out, _ = run_cli(capsys, "corpus", "--file", str(path))
        assert code == 6
        assert "MISMATCH" in out

    def test_schema_error_exit_2(self, capsys, tmp_path):
        path = tmp_path / "corpus.json"
        path.write_text("{not json")
        code, _, _ = run_cli(capsys, "corpus", "--file", str(path))
        assert code == 2
