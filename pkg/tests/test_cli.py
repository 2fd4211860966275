import json

import numpy as np
import pytest

from ncr import cli
from ncr.simulator import InfluenceConeBreachError


def read(path):
    return path.read_bytes()


class TestFlux:
    def test_writes_table_sidecar_manifest(self, tmp_path):
        out = tmp_path / "flux.csv"
        rc = cli.main(["flux", "--b", "0.08", "--samples", "50",
                       "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "v,H,H_prime,H_second"
        assert len(lines) == 52
        sidecar = json.loads((tmp_path / "flux.csv.sidecar.json").read_text())
        assert sidecar["convexity_class"] == "MIXED"
        sp = sidecar["special_points"]
        assert sp["v_infl"] == pytest.approx(0.18437, abs=1e-4)
        assert sp["v_max"] == pytest.approx(0.47092, abs=1e-4)
        assert sp["v_zero"] == pytest.approx(0.80147, abs=1e-4)
        manifest = json.loads((tmp_path / "flux.csv.manifest.json").read_text())
        assert manifest["subcommand"] == "flux"

    def test_marginal_case_sidecar(self, tmp_path):
        out = tmp_path / "flux.csv"
        assert cli.main(["flux", "--c", "0.0625", "--out", str(out)]) == 0
        sidecar = json.loads((tmp_path / "flux.csv.sidecar.json").read_text())
        assert sidecar["convexity_class"] == "MARGINALLY_CONCAVE"
        assert "special_points" not in sidecar

    def test_invalid_parameters_exit_2(self, tmp_path):
        out = str(tmp_path / "x.csv")
        assert cli.main(["flux", "--b", "0.6", "--out", out]) == 2
        assert cli.main(["flux", "--b", "0.08", "--c", "0.01",
                        "--out", out]) == 2
        assert cli.main(["flux", "--out", out]) == 2


class TestClassify:
    def test_rsr(self, capsys):
        assert cli.main(["classify", "--b", "0.08", "--ul", "1",
                        "--ur", "-1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["label"] == "RSR"
        kinds = [w["kind"] for w in doc["waves"]]
        assert kinds == ["FAN", "SHOCK", "FAN"]
        assert abs(doc["waves"][1]["speed"]) < 1e-12

    def test_concave_single_shock(self, capsys):
        assert cli.main(["classify", "--b", "0.2", "--ul", "-0.3",
                        "--ur", "0.6"]) == 0
        assert json.loads(capsys.readouterr().out)["label"] == "S"

    def test_diagonal_exit_2(self):
        assert cli.main(["classify", "--b", "0.08", "--ul", "0.2",
                        "--ur", "0.2"]) == 2


class TestSolve:
    def test_tails_and_self_similarity(self, tmp_path):
        args = ["solve", "--b", "0.08", "--ul", "0.9", "--ur", "-0.6",
                "--samples", "200"]
        o1 = tmp_path / "t1.csv"
        o2 = tmp_path / "t2.csv"
        assert cli.main(args + ["--t", "1", "--out", str(o1)]) == 0
        assert cli.main(args + ["--t", "2", "--xmin", "-3", "--xmax", "3",
                        "--out", str(o2)]) == 0
        d1 = np.loadtxt(o1, delimiter=",", skiprows=1)
        d2 = np.loadtxt(o2, delimiter=",", skiprows=1)
        assert d1[0, 1] == 0.9 and d1[-1, 1] == -0.6
        # u(x, 2) sampled on a doubled window equals u(x/2, 1)
        assert np.allclose(d2[:, 1], d1[:, 1], atol=1e-12)

    def test_bad_time_exit_2(self, tmp_path):
        assert cli.main(["solve", "--b", "0.08", "--ul", "1", "--ur", "-1",
                        "--t", "0", "--out", str(tmp_path / "x.csv")]) == 2


class TestPhaseDiagram:
    def test_grid_labels(self, tmp_path):
        out = tmp_path / "pd.csv"
        assert cli.main(["phase-diagram", "--b", "0.2", "--resolution", "11",
                        "--out", str(out)]) == 0
        rows = out.read_text().splitlines()[1:]
        labels = {r.split(",")[2] for r in rows}
        assert labels == {"S", "R", "NONE"}
        assert len(rows) == 121


class TestSimulate:
    ARGS = ["simulate", "--b", "0.08", "--ul", "1", "--ur", "-1",
            "--N", "50", "--t-end", "0.3", "--seed", "5", "--replicas", "2"]

    def test_byte_identical_reruns(self, tmp_path):
        o1, o2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(self.ARGS + ["--out", str(o1)]) == 0
        assert cli.main(self.ARGS + ["--out", str(o2)]) == 0
        assert read(o1) == read(o2)
        header = o1.read_text().splitlines()[0]
        assert header == "time,bin_center,density,replicas"

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text(
            "b = 0.08\nul = 1\nur = -1\nN = 50\nt_end = 0.3\n"
            "seed = 5\nreplicas = 2\n"
        )
        o1, o2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(["simulate", "--config", str(cfg),
                        "--out", str(o1)]) == 0
        assert cli.main(self.ARGS + ["--out", str(o2)]) == 0
        assert read(o1) == read(o2)
        o3 = tmp_path / "c.csv"
        assert cli.main(["simulate", "--config", str(cfg), "--seed", "6",
                        "--out", str(o3)]) == 0
        m = json.loads((tmp_path / "c.csv.manifest.json").read_text())
        assert m["parameters"]["seed"] == 6

    def test_non_attractive_exit_2(self, tmp_path):
        assert cli.main(["simulate", "--c", "0.6", "--ul", "1", "--ur", "-1",
                        "--N", "50", "--t-end", "0.1",
                        "--out", str(tmp_path / "x.csv")]) == 2

    def test_breach_exit_3(self, tmp_path, monkeypatch):
        def boom(config):
            raise InfluenceConeBreachError("influence cone reached boundary")

        monkeypatch.setattr(cli, "run_simulation", boom)
        assert cli.main(self.ARGS + ["--out", str(tmp_path / "x.csv")]) == 3


class TestCompare:
    def test_exact_reference(self, tmp_path, capsys):
        sim = tmp_path / "sim.csv"
        assert cli.main(TestSimulate.ARGS + ["--out", str(sim)]) == 0
        capsys.readouterr()
        assert cli.main(["compare", "--sim", str(sim), "--b", "0.08",
                        "--ul", "1", "--ur", "-1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["l1"] < 0.5
        assert 0.0 <= doc["linf"] <= 2.0

    def test_solver_against_itself_is_zero(self, tmp_path, capsys):
        sol = tmp_path / "sol.csv"
        assert cli.main(["solve", "--b", "0.08", "--ul", "1", "--ur", "-1",
                        "--t", "1", "--out", str(sol)]) == 0
        capsys.readouterr()
        assert cli.main(["compare", "--sim", str(sol), "--b", "0.08",
                        "--ul", "1", "--ur", "-1", "--t", "1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        # only CSV round-off (12 significant digits) separates the two
        assert doc["l1"] < 1e-10
        assert doc["linf"] < 1e-10

    def test_fvm_reference(self, tmp_path, capsys):
        sim = tmp_path / "sim.csv"
        assert cli.main(TestSimulate.ARGS + ["--out", str(sim)]) == 0
        capsys.readouterr()
        assert cli.main(["compare", "--sim", str(sim), "--fvm", "--cells",
                        "800", "--b", "0.08", "--ul", "1", "--ur", "-1"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["l1"] < 0.5

    def test_missing_file_exit_2(self):
        assert cli.main(["compare", "--sim", "/nonexistent.csv",
                        "--b", "0.08", "--ul", "1", "--ur", "-1"]) == 2
