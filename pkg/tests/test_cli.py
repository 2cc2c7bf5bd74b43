import json
import math

import pytest

from ifmidpoint.cli import ConfigError, build_config, load_config_file, main

CONVERGE_HEADER = "N,err_inf,order_err,E,order_E,bound,ei_U"
SUMMARY_HEADER = "tol,eta,k_max,err_inf,bound,ei_U,count"
TRAJECTORY_HEADER = "t_n,k_n,E_theta_n,err_n,rejected_count_at_step"


def run_cli(args):
    return main([str(a) for a in args])


class TestConfigFile:
    def test_parse_key_values(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# sweep setup\nproblem = ex1\nm = 49\nn_list = 16,32\n")
        values = load_config_file(path)
        assert values == {"problem": "ex1", "m": "49", "n_list": "16,32"}

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("problme = ex1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config_file(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("just words\n")
        with pytest.raises(ConfigError):
            load_config_file(path)

    def test_flag_beats_file(self):
        cfg = build_config("converge", {"problem": "ex1", "m": "49"},
                           {"m": 33, "n_list": "16"})
        assert cfg.m == 33

    def test_file_beats_default(self):
        cfg = build_config("converge", {"problem": "ex1", "m": "63",
                                        "n_list": "16"}, {})
        assert cfg.m == 63
        assert cfg.backend == "spectral"

    def test_per_problem_theta_default(self):
        one = build_config("converge", {}, {"problem": "ex1", "n_list": "16"})
        two = build_config("converge", {}, {"problem": "ex2", "n_list": "16"})
        assert one.theta == pytest.approx((5.0 - math.sqrt(21.0)) / 20.0)
        assert two.theta == pytest.approx(0.25)

    def test_missing_n_list_message(self):
        with pytest.raises(ConfigError, match="no step counts given"):
            build_config("converge", {}, {"problem": "ex1"})

    def test_empty_n_list_message(self):
        with pytest.raises(ConfigError, match="no step counts given"):
            build_config("converge", {}, {"problem": "ex1", "n_list": " , "})

    def test_adapt_requires_tolerance(self):
        with pytest.raises(ConfigError, match="requires tol"):
            build_config("adapt", {}, {"problem": "ex3", "k0": 0.01,
                                       "k_max": 0.1})


class TestConvergeCommand:
    def run(self, tmp_path, n_list="16,32,64", extra=()):
        out = tmp_path / "results"
        code = run_cli(["converge", "--problem", "ex1", "--m", "49",
                        "--n-list", n_list, "--out", out, *extra])
        return code, out

    def test_csv_schema_and_rows(self, tmp_path):
        code, out = self.run(tmp_path)
        assert code == 0
        lines = (out / "converge.csv").read_text().splitlines()
        assert lines[0] == CONVERGE_HEADER
        assert len(lines) == 4
        first = lines[1].split(",")
        assert first[0] == "16" and first[2] == "" and first[4] == ""
        second = lines[2].split(",")
        assert second[2] != "" and second[4] != ""
        # orders near two for this smooth problem
        assert float(second[2]) == pytest.approx(2.0, abs=0.2)

    def test_single_step_count_leaves_orders_blank(self, tmp_path):
        code, out = self.run(tmp_path, n_list="32")
        assert code == 0
        lines = (out / "converge.csv").read_text().splitlines()
        assert len(lines) == 2
        row = lines[1].split(",")
        assert row[2] == "" and row[4] == ""

    def test_byte_identical_reruns(self, tmp_path):
        _, out1 = self.run(tmp_path / "a")
        _, out2 = self.run(tmp_path / "b")
        assert (out1 / "converge.csv").read_bytes() == (out2 / "converge.csv").read_bytes()
        assert (out1 / "converge.json").read_bytes() == (out2 / "converge.json").read_bytes()

    def test_json_round_trip(self, tmp_path):
        code, out = self.run(tmp_path)
        summary = json.loads((out / "converge.json").read_text())
        cfg = summary["config"]
        assert cfg["mode"] == "converge"
        assert cfg["problem"] == "ex1"
        assert cfg["m"] == 49
        assert cfg["n_list"] == [16, 32, 64]
        assert cfg["backend"] == "spectral"
        assert 0.0 < cfg["theta"] < 0.5
        assert len(summary["rows"]) == 3

    def test_numbers_use_scientific_notation(self, tmp_path):
        _, out = self.run(tmp_path, n_list="16")
        row = (out / "converge.csv").read_text().splitlines()[1].split(",")
        assert "e" in row[1] and "e" in row[3]

    def test_empty_n_list_fails(self, tmp_path, capsys):
        code = run_cli(["converge", "--problem", "ex1", "--out", tmp_path])
        assert code == 1
        assert "no step counts given" in capsys.readouterr().err

    def test_config_file_drives_run(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(f"problem = ex1\nm = 33\nn_list = 16,32\nout = {tmp_path/'o'}\n")
        code = run_cli(["converge", "--config", cfg])
        assert code == 0
        assert (tmp_path / "o" / "converge.csv").exists()

    def test_unknown_config_key_fails(self, tmp_path, capsys):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text("problem = ex1\nn_list = 16\nwhatever = 3\n")
        code = run_cli(["converge", "--config", cfg, "--out", tmp_path])
        assert code == 1
        assert "unknown key" in capsys.readouterr().err

    def test_unwritable_output_fails(self, tmp_path, capsys):
        blocker = tmp_path / "file.txt"
        blocker.write_text("")
        code = run_cli(["converge", "--problem", "ex1", "--m", "9",
                        "--n-list", "8", "--out", blocker / "sub"])
        assert code == 1
        assert "error" in capsys.readouterr().err


class TestAdaptCommand:
    def run(self, tmp_path):
        out = tmp_path / "adapt"
        code = run_cli(["adapt", "--problem", "ex3", "--m", "49",
                        "--tol", "0.9", "--k0", str(1.0 / 60.0),
                        "--kmax", "0.1", "--out", out])
        return code, out

    def test_summary_schema(self, tmp_path):
        code, out = self.run(tmp_path)
        assert code == 0
        lines = (out / "adapt_summary.csv").read_text().splitlines()
        assert lines[0] == SUMMARY_HEADER
        fields = lines[1].split(",")
        assert len(fields) == 7
        assert float(fields[0]) == pytest.approx(0.9)
        assert float(fields[1]) == pytest.approx(math.sqrt(0.9), rel=1e-5)
        count = int(fields[6])
        assert count > 0

    def test_trajectory_schema(self, tmp_path):
        code, out = self.run(tmp_path)
        lines = (out / "adapt_trajectory.csv").read_text().splitlines()
        assert lines[0] == TRAJECTORY_HEADER
        count = int((out / "adapt_summary.csv").read_text().splitlines()[1]
                    .split(",")[6])
        assert len(lines) == count + 1
        last = lines[-1].split(",")
        assert float(last[0]) == pytest.approx(1.0)
        assert all(len(line.split(",")) == 5 for line in lines[1:])

    def test_byte_identical_reruns(self, tmp_path):
        _, out1 = self.run(tmp_path / "a")
        _, out2 = self.run(tmp_path / "b")
        for name in ("adapt_summary.csv", "adapt_trajectory.csv", "adapt.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_json_round_trip(self, tmp_path):
        code, out = self.run(tmp_path)
        summary = json.loads((out / "adapt.json").read_text())
        cfg = summary["config"]
        assert cfg["mode"] == "adapt"
        assert cfg["tol"] == pytest.approx(0.9)
        assert cfg["k0"] == pytest.approx(1.0 / 60.0)
        assert cfg["k_max"] == pytest.approx(0.1)
        assert summary["count"] > 0

    def test_missing_tolerance_fails(self, tmp_path, capsys):
        code = run_cli(["adapt", "--problem", "ex3", "--out", tmp_path])
        assert code == 1
        assert "requires tol" in capsys.readouterr().err


class TestArgumentValidation:
    def test_bad_theta(self, tmp_path, capsys):
        code = run_cli(["converge", "--problem", "ex1", "--n-list", "16",
                        "--theta", "0.7", "--out", tmp_path])
        assert code == 1
        assert "theta" in capsys.readouterr().err

    def test_bad_problem_rejected_by_parser(self, tmp_path):
        with pytest.raises(SystemExit):
            run_cli(["converge", "--problem", "nope", "--n-list", "16",
                     "--out", tmp_path])

    def test_missing_problem(self, tmp_path, capsys):
        code = run_cli(["converge", "--n-list", "16", "--out", tmp_path])
        assert code == 1
        assert "no problem given" in capsys.readouterr().err
