import csv
import xml.etree.ElementTree as ET

import pytest

from bora.cli import main

CONFIG = """\
case = "bernoulli_jobs"
m = 2
T = 8
runs = 2
master_seed = 31
policies = ["bora2", "sbf", "random"]

[budget]
mode = "constant"
value = 33.9

[beta]
mode = "fixed"
value = 2.0

[env]
nu = [25.0, 50.0]
"""


@pytest.fixture
def config_path(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(CONFIG)
    return p


class TestValidate:
    def test_ok(self, config_path, capsys):
        assert main(["validate", "--config", str(config_path)]) == 0
        assert "config ok" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        code = main(["validate", "--config", str(tmp_path / "absent.toml")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_invalid_config_contents(self, tmp_path, capsys):
        p = tmp_path / "bad.toml"
        p.write_text('case = "bernoulli_jobs"\n')
        assert main(["validate", "--config", str(p)]) == 1


class TestUsageErrors:
    def test_no_command(self):
        assert main([]) == 1

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0


class TestRun:
    def test_writes_all_outputs(self, config_path, tmp_path, capsys):
        out = tmp_path / "results"
        assert main(["run", "--config", str(config_path), "--out", str(out)]) == 0
        assert (out / "trace.csv").is_file()
        assert (out / "summary.csv").is_file()
        assert (out / "summary.svg").is_file()
        with open(out / "trace.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert len(rows) == 1 + 3 * 2 * 8

    def test_seed_override_changes_trace(self, config_path, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        main(["run", "--config", str(config_path), "--out", str(out_a)])
        main(["run", "--config", str(config_path), "--out", str(out_b), "--seed", "77"])
        assert (out_a / "trace.csv").read_text() != (out_b / "trace.csv").read_text()

    def test_negative_seed_rejected(self, config_path, tmp_path):
        code = main(
            ["run", "--config", str(config_path), "--out", str(tmp_path), "--seed", "-1"]
        )
        assert code == 1


class TestGpSlice:
    def test_writes_svg(self, config_path, tmp_path):
        out = tmp_path / "slices"
        code = main([
            "gp-slice", "--config", str(config_path),
            "--policy", "bora2", "--t", "6", "--out", str(out),
        ])
        assert code == 0
        svg = out / "gp_slice_bora2_t6.svg"
        assert svg.is_file()
        assert ET.parse(svg).getroot().tag.endswith("svg")

    def test_bad_policy_is_config_error(self, config_path, tmp_path):
        code = main([
            "gp-slice", "--config", str(config_path),
            "--policy", "random", "--t", "6", "--out", str(tmp_path),
        ])
        assert code == 1
