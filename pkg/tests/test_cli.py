import json
import subprocess
import sys

import pytest

from relevance_lab.cli import EXPERIMENTS, main, resolve_params, validate_config
from relevance_lab.io import read_csv, sidecar_path

FAST = {
    "toy-spectrum": ["--grid-points", "200", "--count", "4"],
    "toy-rgflow": ["--eps6", "0", "0.001"],
    "field-relevance": ["--extent", "4096", "--spacing", "0.5", "--points", "5", "--h", "10"],
    "qfield-relevance": [],
    "particle-relevance": ["--n-in", "12", "--sigma-x", "2"],
    "mass-shell": [],
    "quantum-props": ["--dim", "2", "--trials", "3", "--seed", "1"],
    "equivalence-demo": ["--trials", "2", "--seed", "1"],
}


def run(tmp_path, name, *extra, out="out.csv"):
    path = tmp_path / out
    code = main([name, "-o", str(path), *FAST[name], *extra])
    return code, path


class TestExperiments:
    @pytest.mark.parametrize("name", sorted(FAST))
    def test_runs_and_writes(self, tmp_path, capsys, name):
        code, path = run(tmp_path, name)
        assert code == 0
        cols, rows = read_csv(path)
        meta = json.loads(sidecar_path(path).read_text())
        assert meta["experiment"] == name and meta["columns"] == cols and rows
        assert meta["status"] == "ok" and meta["conventions"]
        summary = json.loads(capsys.readouterr().out)
        assert summary["experiment"] == name

    def test_all_experiments_covered(self):
        assert set(FAST) == set(EXPERIMENTS)

    @pytest.mark.parametrize("name", ["quantum-props", "toy-spectrum"])
    def test_byte_identical(self, tmp_path, name):
        _, a = run(tmp_path, name, out="a.csv")
        _, b = run(tmp_path, name, out="b.csv")
        assert a.read_bytes() == b.read_bytes()
        assert sidecar_path(a).read_text() == sidecar_path(b).read_text().replace("b.csv", "a.csv")

    def test_toy_spectrum_values(self, tmp_path):
        run(tmp_path, "toy-spectrum")
        cols, rows = read_csv(tmp_path / "out.csv")
        eta = [float(r[cols.index("eta")]) for r in rows]
        assert eta[1] == pytest.approx(0.5, rel=1e-3)

    def test_csv_precision(self, tmp_path):
        run(tmp_path, "mass-shell")
        text = (tmp_path / "out.csv").read_text().splitlines()
        value = float(text[1].split(",")[-1])
        assert value == pytest.approx(1 + 0.5 * (2.99822295029797 - 0.881373587019543), rel=1e-14)


class TestExitCodes:
    def test_window_error_is_numerical(self, tmp_path, capsys):
        code = main(["field-relevance", "-o", str(tmp_path / "w.csv"), "--d", "2", "--extent", "256",
                     "--spacing", "0.2", "--points", "3", "--h", "10"])
        assert code == 3
        assert (tmp_path / "w.csv").exists()
        meta = json.loads(sidecar_path(tmp_path / "w.csv").read_text())
        assert meta["status"] == "failed" and "WindowError" in meta["failure"]

    def test_divergence(self, tmp_path, capsys):
        code = main(["toy-rgflow", "-o", str(tmp_path / "d.csv"), "--lambda-phys", "-0.01", "--eps6", "0", "0.001"])
        assert code == 3
        assert "in relevance_lab.toy_rg" in capsys.readouterr().err

    @pytest.mark.parametrize("argv", [
        ["mass-shell", "--ir", "20"],
        ["toy-spectrum", "--sigma", "-1"],
        ["quantum-props", "--trials", "1"],
        ["toy-rgflow", "--eps6", "0.002", "0.001"],
    ])
    def test_invalid(self, tmp_path, capsys, argv):
        assert main([*argv, "-o", str(tmp_path / "x.csv")]) == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_output(self, capsys):
        assert main(["mass-shell"]) == 2

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as e:
            main(["mass-shell", "--m2", "1"])
        assert e.value.code == 2

    def test_subprocess(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "relevance_lab", "mass-shell", "-o", str(tmp_path / "m.csv")],
                             capture_output=True, text=True)
        assert res.returncode == 0 and json.loads(res.stdout)["experiment"] == "mass-shell"


class TestConfig:
    def write(self, tmp_path, cfg):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(cfg))
        return str(p)

    def test_precedence(self, tmp_path):
        cfg = self.write(tmp_path, {"experiment": "mass-shell", "output_path": str(tmp_path / "c.csv"),
                                    "params": {"m": 2.0, "uv": 5.0}})
        assert main(["mass-shell", "--config", cfg, "--uv", "8"]) == 0
        meta = json.loads(sidecar_path(tmp_path / "c.csv").read_text())
        assert meta["params"]["m"] == 2.0 and meta["params"]["uv"] == 8.0 and meta["params"]["ir"] == 1.0

    def test_strict_keys(self, tmp_path, capsys):
        cfg = self.write(tmp_path, {"experiment": "mass-shell", "output_path": "x.csv", "params": {"mass": 1}})
        assert main(["mass-shell", "--config", cfg]) == 2
        cfg = self.write(tmp_path, {"experiment": "mass-shell", "output_path": "x.csv", "extra": 1})
        assert main(["mass-shell", "--config", cfg]) == 2

    def test_wrong_experiment(self, tmp_path):
        cfg = self.write(tmp_path, {"experiment": "toy-spectrum", "output_path": "x.csv"})
        assert main(["mass-shell", "--config", cfg]) == 2

    def test_validate_ok(self, tmp_path, capsys):
        cfg = self.write(tmp_path, {"experiment": "quantum-props", "output_path": "q.csv", "seed": 4})
        assert main(["validate", "--config", cfg]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["status"] == "ok" and report["params"]["trials"] == 100
        assert report["defaults"]["mass_shell_measure"] == "two-ray"

    def test_validate_errors(self):
        rep = validate_config({"experiment": "quantum-props", "params": {"trials": "many"}})
        assert rep["status"] == "invalid"
        assert any("seed" in e for e in rep["errors"]) and any("output_path" in e for e in rep["errors"])
        assert any("trials" in e for e in rep["errors"])
        assert validate_config({"experiment": "nope", "output_path": "x"})["status"] == "invalid"

    def test_validate_warns_coarse_kernel(self):
        rep = validate_config({"experiment": "toy-spectrum", "output_path": "x.csv",
                               "params": {"sigma": 0.05, "grid_points": 100}})
        assert rep["status"] == "ok" and rep["warnings"]

    def test_type_coercion(self):
        exp = EXPERIMENTS["particle-relevance"]
        p = resolve_params(exp, {"n_in": 30.0, "n_out": None}, {"u": 2})
        assert p["n_in"] == 30 and p["n_out"] is None and p["u"] == 2.0
        with pytest.raises(Exception):
            resolve_params(exp, {"n_in": 30.5})
        with pytest.raises(Exception):
            resolve_params(exp, {"fock": "yes"})
