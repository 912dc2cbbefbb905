"""Command-line surface: verbs, flags, output files, exit codes."""

import json

import pytest

from hybridsim.cli import EXIT_OK, EXIT_VALIDATION, main
from hybridsim.scenario import preset_path

FIG11 = str(preset_path("paper_fig11"))

SHORT_CFG = """
[scenario]
duration_s = 60
init_delay_s = 5
node_count = 2
optimizer = etno
seed = 9
"""


@pytest.fixture()
def short_cfg(tmp_path):
    path = tmp_path / "short.cfg"
    path.write_text(SHORT_CFG)
    return str(path)


class TestRun:
    def test_run_writes_traces_and_summary(self, short_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["run", "--config", short_cfg, "--out", str(out)])
        assert code == EXIT_OK
        assert (out / "summary.json").exists()
        assert (out / "trace_node1.csv").exists()
        stdout = capsys.readouterr().out
        assert "node1" in stdout and "MB" in stdout

    def test_seed_override_lands_in_summary(self, short_cfg, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", short_cfg, "--seed", "77", "--out", str(out)])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["seed"] == 77

    def test_optimizer_override(self, short_cfg, tmp_path):
        out = tmp_path / "out"
        main(["run", "--config", short_cfg, "--optimizer", "euno",
              "--out", str(out)])
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["optimizer"] == "euno"

    def test_missing_config_is_validation_failure(self, tmp_path):
        code = main(["run", "--config", str(tmp_path / "nope.cfg")])
        assert code == EXIT_VALIDATION

    def test_bad_key_is_validation_failure(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text(SHORT_CFG + "\n[traffic]\nwarp_speed = 9\n")
        assert main(["run", "--config", str(bad)]) == EXIT_VALIDATION


class TestSweep:
    def test_single_rate_single_optimizer(self, short_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["sweep", "--config", short_cfg, "--rates", "100",
                     "--optimizer", "etno", "--out", str(out)])
        assert code == EXIT_OK
        text = (out / "sweep.csv").read_text()
        lines = text.strip().splitlines()
        assert lines[0] == "target_rate_kbps,optimizer,achieved_rate_kbps"
        assert len(lines) == 2 and lines[1].startswith("100,etno,")

    def test_all_optimizers_by_default(self, short_cfg, capsys):
        code = main(["sweep", "--config", short_cfg, "--rates", "50"])
        assert code == EXIT_OK
        stdout = capsys.readouterr().out
        assert "euno" in stdout and "etno-owc" in stdout

    def test_empty_rates_rejected(self, short_cfg):
        assert main(["sweep", "--config", short_cfg, "--rates", ","]) == EXIT_VALIDATION


class TestSelfChecks:
    def test_validate_ber_passes(self, capsys):
        assert main(["validate-ber"]) == EXIT_OK
        assert "PASS" in capsys.readouterr().out

    def test_check_calibration_passes(self, capsys):
        assert main(["check-calibration"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "ble_uplink_normal" in out and "FAIL" not in out

    def test_corrupt_table_fails_with_code_2(self, tmp_path, capsys):
        import csv
        from hybridsim.energy import default_calibration_path
        rows = list(csv.reader(default_calibration_path().open()))
        for row in rows[1:]:
            if row[0] == "ble" and row[1] == "uplink_tx" and row[2] == "normal":
                row[3] = "18.2"
        bad = tmp_path / "bad.csv"
        with bad.open("w", newline="") as fh:
            csv.writer(fh).writerows(rows)
        assert main(["check-calibration", "--table", str(bad)]) == EXIT_VALIDATION
        assert "FAIL ble_uplink_normal" in capsys.readouterr().out


class TestPrintConfig:
    def test_echo_parses_as_json(self, capsys):
        assert main(["print-config", "--config", FIG11]) == EXIT_OK
        echo = json.loads(capsys.readouterr().out)
        assert echo["optimizer"] == "etno"
        assert echo["weights"]["p_m"] == 0.91
