"""Command-line contracts: exit codes, REASON lines, file outputs."""

import json
from pathlib import Path

import pytest

from cwlaser.cli import main

DATA = Path(__file__).parent / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestVerify:
    def test_q2_power2(self, capsys):
        code, out = run(capsys, "verify", "--q", "2", "--power", "2")
        assert code == 0
        assert "15 components" in out

    def test_q1_power4(self, capsys):
        code, out = run(capsys, "verify", "--q", "1", "--power", "4")
        assert code == 0
        assert "24 components" in out

    def test_json_format(self, capsys):
        code, out = run(capsys, "verify", "--q", "2", "--power", "2",
                        "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["identity"] is True
        assert doc["shape_table_ok"] is True
        assert doc["shapes"]["0,2,2"] == [1, 1, 6]
        assert doc["shapes"]["1,1,2"] is None

    def test_budget_exit3(self, capsys):
        code, out = run(capsys, "verify", "--q", "9", "--power", "4")
        assert code == 3
        assert out.startswith("REASON: 3 ")


class TestEval:
    def test_feasible_sample(self, capsys):
        code, out = run(capsys, "eval", "--params", str(DATA / "sample_params.json"))
        assert code == 0
        assert "nu=" in out and "k=" in out

    def test_infeasible_exit2(self, capsys):
        code, out = run(capsys, "eval", "--params",
                        str(DATA / "infeasible_params.json"))
        assert code == 2
        assert "REASON: 2" in out
        assert "C3" in out

    def test_malformed_exit4(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{broken")
        code, out = run(capsys, "eval", "--params", str(bad))
        assert code == 4
        assert out.startswith("REASON: 4 ")

    def test_missing_file_exit4(self, capsys):
        code, out = run(capsys, "eval", "--params", "/nonexistent/params.json")
        assert code == 4


class TestCheck:
    def test_sample_certificate(self, capsys):
        code, out = run(capsys, "check", str(DATA / "sample_certificate.json"))
        assert code == 0
        assert "verifies" in out

    def test_check_never_touches_optimizer(self):
        """Verifier independence: the check path must not import the search
        machinery."""
        import subprocess
        import sys
        script = (
            "import sys\n"
            "from cwlaser.cli import main\n"
            f"rc = main(['check', {str(DATA / 'sample_certificate.json')!r}])\n"
            "assert rc == 0\n"
            "assert 'cwlaser.optimize' not in sys.modules, 'optimizer imported'\n"
            "print('ISOLATED')\n"
        )
        proc = subprocess.run([sys.executable, "-c", script],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert "ISOLATED" in proc.stdout

    def test_highprec(self, capsys):
        code, out = run(capsys, "check", str(DATA / "sample_certificate.json"),
                        "--digits", "50")
        assert code == 0

    def test_perturbed_certificate_exit2(self, capsys, tmp_path):
        doc = json.loads((DATA / "sample_certificate.json").read_text())
        doc["result"]["nu"] -= 5e-4
        bad = tmp_path / "tampered.json"
        bad.write_text(json.dumps(doc))
        code, out = run(capsys, "check", str(bad))
        assert code == 2
        assert "REASON: 2" in out

    def test_garbage_exit4(self, capsys, tmp_path):
        bad = tmp_path / "nope.json"
        bad.write_text("]")
        code, out = run(capsys, "check", str(bad))
        assert code == 4


class TestCurve:
    def test_from_csv(self, capsys, tmp_path):
        out_base = tmp_path / "curve"
        code, out = run(capsys, "curve", "--from-csv",
                        str(DATA / "sample_sweep.csv"), "--out", str(out_base),
                        "--png")
        assert code == 0
        csv_text = (tmp_path / "curve.csv").read_text()
        assert csv_text.splitlines()[0] == "k,nu"
        assert len(csv_text.splitlines()) == 5
        svg = (tmp_path / "curve.svg").read_text()
        assert "<polyline" in svg and "0.31389" in svg
        assert (tmp_path / "curve.png").stat().st_size > 1000

    def test_missing_csv_exit4(self, capsys, tmp_path):
        code, out = run(capsys, "curve", "--from-csv",
                        str(tmp_path / "none.csv"), "--out", str(tmp_path / "c"))
        assert code == 4


class TestSearchConfigFile:
    def test_config_json_used_and_flags_override(self, tmp_path):
        from cwlaser.cli import _search_config, build_parser
        from cwlaser.optimize import SearchConfig

        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(SearchConfig(qs=(5, 6), seed=5,
                                                    restarts=3).to_json_dict()))
        args = build_parser().parse_args(
            ["bound", "--k", "1.0", "--config", str(cfg_path), "--restarts", "9"])
        cfg = _search_config(args)
        assert cfg.qs == (5, 6) and cfg.seed == 5 and cfg.restarts == 9

    def test_bad_config_exit4(self, capsys, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text('{"no_such_field": 1}')
        code, out = run(capsys, "bound", "--k", "1.0", "--config", str(cfg_path))
        assert code == 4
        assert out.startswith("REASON: 4")


@pytest.mark.slow
class TestSearchCommands:
    def test_bound_writes_certificate_and_target_gate(self, capsys, tmp_path):
        cert_path = tmp_path / "cert.json"
        code, out = run(capsys, "bound", "--k", "1.0", "--qs", "5",
                        "--restarts", "2", "--seed", "7", "--threads", "1",
                        "--out", str(cert_path), "--target-nu", "2.0")
        # the bound is found and written, but nu > 2.0 is a shortfall
        assert code == 1
        assert "REASON: 1" in out
        assert cert_path.exists()
        code2, out2 = run(capsys, "check", str(cert_path))
        assert code2 == 0

    def test_sweep_csv_contract(self, capsys, tmp_path):
        out_csv = tmp_path / "sweep.csv"
        code, out = run(capsys, "sweep", "--ks", "1.0", "--qs", "5",
                        "--restarts", "1", "--seed", "7", "--threads", "1",
                        "--out", str(out_csv))
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "k,nu,q,certificate"
        k, nu, q, path = lines[1].split(",")
        assert q == "5" and float(nu) < 2.3731
        code2, _ = run(capsys, "check", path)
        assert code2 == 0
