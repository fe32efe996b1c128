"""Tests for config loading, the CLI harness, and the output bundle."""

import json
import os

import pytest

from mixbench.cli import emit_transient, main, render_summary_text
from mixbench.config import (
    ALL_MEASUREMENTS,
    build_nf_setup,
    build_plan,
    build_scenario,
    from_dict,
    load_config,
    loads_config,
    measurement_plan,
)
from mixbench.engine import simulate
from mixbench.errors import ValidationError
from mixbench.signals import bin_amplitude


def write_config(tmp_path, text, name="config.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestConfigLoading:
    def test_empty_config_gives_full_default_run(self, tmp_path):
        cfg = load_config(write_config(tmp_path, ""))
        assert cfg.measurements == ALL_MEASUREMENTS
        scenario = build_scenario(cfg)
        assert scenario.mixer.transconductor.gm == 0.034
        assert scenario.mixer.load.rd == 220.0
        assert scenario.mixer.bias.vdd == 1.8
        assert scenario.mixer.leakage.kappa == 0.01303
        assert scenario.f_rf == 76.0 and scenario.f_lo == 72.0
        assert scenario.frequency_scale == pytest.approx(2.5e7)

    def test_single_field_override_keeps_other_defaults(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path, "scenario:\n  mixer:\n    gm: 0.017\n"))
        scenario = build_scenario(cfg)
        assert scenario.mixer.transconductor.gm == 0.017
        assert scenario.mixer.load.rd == 220.0
        assert scenario.mixer.transconductor.a3 == -0.696

    def test_unknown_key_rejected_with_path(self, tmp_path):
        with pytest.raises(ValidationError, match="gm_typo"):
            load_config(write_config(
                tmp_path, "scenario:\n  mixer:\n    gm_typo: 1\n"))

    def test_incoherent_tone_spacing_rejected(self):
        with pytest.raises(ValidationError, match="spacing"):
            loads_config("sweeps:\n  iip3:\n    tone_spacing_hz: 3.3e7\n")

    def test_incommensurate_plan_rejected(self):
        with pytest.raises(ValidationError):
            loads_config("scenario:\n  lo_hz: 1.83559e9\n")

    def test_empty_measurement_list_rejected(self):
        with pytest.raises(ValidationError, match="non-empty"):
            from_dict({"measurements": []})

    def test_unknown_measurement_rejected(self):
        with pytest.raises(ValidationError, match="vswr"):
            from_dict({"measurements": ["vswr"]})

    def test_bad_yaml_reports_parse_error(self, tmp_path):
        with pytest.raises(ValidationError, match="parse"):
            load_config(write_config(tmp_path, "scenario: [unclosed\n"))

    def test_missing_file_rejected(self):
        with pytest.raises(ValidationError, match="read"):
            load_config("/nonexistent/config.yaml")

    def test_effective_config_round_trip(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path, "scenario:\n  rf_power_dbm: -25.0\n"))
        reloaded = loads_config(cfg.effective_yaml())
        assert reloaded.raw == cfg.raw
        assert reloaded.parameter_hash() == cfg.parameter_hash()
        assert build_scenario(reloaded) == build_scenario(cfg)

    def test_seed_override(self):
        cfg = from_dict({})
        assert cfg.with_seed(9).seed == 9
        assert cfg.seed == 1729  # original untouched

    def test_nf_setup_uses_long_grid(self):
        cfg = from_dict({})
        scenario, settings = build_nf_setup(cfg)
        assert scenario.grid.num_samples == 32 * 18 * 2048
        assert settings.segments == 32
        assert scenario.grid.num_samples % settings.segments == 0

    def test_measurement_plan_translation(self):
        cfg = from_dict({})
        plan = measurement_plan(cfg)
        assert plan.p1db_range == (-40.0, 0.0)
        assert plan.iip3_tone_spacing == 1.0  # 25 MHz on the default grid


class TestCliRun:
    def run_cli(self, *argv):
        return main(list(argv))

    def test_validate_ok(self, tmp_path):
        path = write_config(tmp_path, "measurements: [cg, power]\n")
        assert self.run_cli("validate", "--config", path) == 0

    def test_validate_bad_config(self, tmp_path):
        path = write_config(tmp_path, "scenario:\n  mixer:\n    gm: -3\n")
        assert self.run_cli("validate", "--config", path) == 2

    def test_run_bad_config_exits_2(self, tmp_path):
        path = write_config(tmp_path, "measurements: [nothing]\n")
        out = tmp_path / "out"
        assert self.run_cli("run", "--config", path, "--out", str(out)) == 2

    def test_run_cg_and_power(self, tmp_path, capsys):
        path = write_config(tmp_path, "measurements: [cg, power]\n")
        out = tmp_path / "out"
        assert self.run_cli("run", "--config", path, "--out", str(out)) == 0
        summary = json.loads((out / "summary.json").read_text())
        cg = summary["measurements"]["cg"]
        assert cg["analytic_db"] == pytest.approx(13.5556, abs=1e-3)
        assert cg["value_db"] == pytest.approx(13.48, abs=0.1)
        power = summary["measurements"]["power"]
        assert power["value_w"] == pytest.approx(2.0e-3, rel=1e-3)
        assert summary["reference"]["conversion_gain_db"] == 12.42
        assert (out / "cg.csv").exists()
        assert (out / "power.csv").exists()
        text = capsys.readouterr().out
        assert "conversion gain" in text

    def test_run_p1db_sweep_csv(self, tmp_path):
        path = write_config(tmp_path, "measurements: [p1db]\n")
        out = tmp_path / "out"
        assert self.run_cli("run", "--config", path, "--out", str(out)) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["measurements"]["p1db"]["value_dbm"] == pytest.approx(
            -11.5, abs=0.2)
        lines = (out / "p1db_sweep.csv").read_text().splitlines()
        assert lines[0] == "input_power_dbm,output_power_dbm,gain_db"
        assert len(lines) == 1 + 81  # header + sweep -40..0 in 0.5 dB steps

    def test_partial_failure_exit_code(self, tmp_path):
        path = write_config(tmp_path, (
            "measurements: [cg, p1db]\n"
            "scenario:\n  mixer:\n    a3: 0.0\n"))
        out = tmp_path / "out"
        assert self.run_cli("run", "--config", path, "--out", str(out)) == 1
        summary = json.loads((out / "summary.json").read_text())
        assert "error" in summary["measurements"]["p1db"]
        assert "NoCompression" in summary["measurements"]["p1db"]["error"]
        assert "value_db" in summary["measurements"]["cg"]

    def test_run_is_deterministic(self, tmp_path):
        path = write_config(
            tmp_path, "measurements: [cg, isolation, nf, transient]\n")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert self.run_cli("run", "--config", path, "--out", str(out1)) == 0
        assert self.run_cli("run", "--config", path, "--out", str(out2)) == 0
        for name in sorted(os.listdir(out1)):
            a = (out1 / name).read_bytes()
            b = (out2 / name).read_bytes()
            assert a == b, f"{name} differs between identical runs"

    def test_seed_changes_noise_output(self, tmp_path):
        path = write_config(tmp_path, "measurements: [nf]\n")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert self.run_cli("run", "--config", path, "--out", str(out1)) == 0
        assert self.run_cli("run", "--config", path, "--out", str(out2),
                            "--seed", "99") == 0
        a = json.loads((out1 / "summary.json").read_text())
        b = json.loads((out2 / "summary.json").read_text())
        assert a["measurements"]["nf"]["value_db"] != \
            b["measurements"]["nf"]["value_db"]

    def test_json_format_output(self, tmp_path):
        path = write_config(tmp_path,
                            "measurements: [cg]\noutput:\n  format: json\n")
        out = tmp_path / "out"
        assert self.run_cli("run", "--config", path, "--out", str(out)) == 0
        rows = json.loads((out / "cg.json").read_text())
        assert rows[0]["analytic_gain_db"] == pytest.approx(13.5556, abs=1e-3)

    def test_report_regenerates_summary(self, tmp_path):
        path = write_config(tmp_path, "measurements: [cg, power]\n")
        out = tmp_path / "out"
        assert self.run_cli("run", "--config", path, "--out", str(out)) == 0
        original = (out / "summary.txt").read_text()
        (out / "summary.txt").unlink()
        assert self.run_cli("report", "--out", str(out)) == 0
        assert (out / "summary.txt").read_text() == original

    def test_report_missing_dir_exits_3(self, tmp_path):
        assert self.run_cli("report", "--out", str(tmp_path / "nope")) == 3

    def test_metadata_contents(self, tmp_path):
        path = write_config(tmp_path, "measurements: [power]\n")
        out = tmp_path / "out"
        assert self.run_cli("run", "--config", path, "--out", str(out)) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["tool"] == "mixbench"
        assert meta["seed"] == 1729
        assert len(meta["parameter_sha256"]) == 64
        assert meta["internal_grid"]["rf_bin"] == 76
        cfg = load_config(str(out / "effective_config.yaml"))
        assert cfg.parameter_hash() == meta["parameter_sha256"]


class TestTransientOutput:
    def test_row_count_and_decimation(self, tmp_path):
        cfg = from_dict({"measurements": ["transient"]})
        scenario = build_scenario(cfg)
        result = simulate(scenario)
        paths = emit_transient(result, str(tmp_path), decimation=1)
        lines = open(paths[0]).read().splitlines()
        assert len(lines) == 1 + scenario.grid.num_samples
        paths = emit_transient(result, str(tmp_path), decimation=8)
        lines = open(paths[0]).read().splitlines()
        assert len(lines) == 1 + scenario.grid.num_samples // 8

    def test_filtered_output_is_nearly_sinusoidal(self, tmp_path):
        # After the IF low-pass the record is a clean IF tone: second
        # harmonic more than 40 dB down (H2/H1 < 1%).
        cfg = from_dict({})
        scenario = build_scenario(cfg)
        result = simulate(scenario)
        assert result.v_out_filtered is not None
        h1 = bin_amplitude(result.v_out_filtered, scenario.f_if).amplitude
        h2 = bin_amplitude(result.v_out_filtered, 2 * scenario.f_if).amplitude
        assert h2 / h1 < 0.01
        paths = emit_transient(result, str(tmp_path))
        assert len(paths) == 2

    def test_unfiltered_output_keeps_rf_structure(self):
        # The raw output carries most of its AC power above the IF region.
        cfg = from_dict({})
        scenario = build_scenario(cfg)
        result = simulate(scenario)
        import numpy as np
        spectrum = np.abs(np.fft.rfft(result.v_out.samples)) ** 2
        total_ac = spectrum[1:].sum()
        high = spectrum[int(scenario.f_lo) - 4:].sum()
        assert high / total_ac > 0.10

    def test_time_axis_in_physical_seconds(self, tmp_path):
        cfg = from_dict({})
        scenario = build_scenario(cfg)
        result = simulate(scenario)
        paths = emit_transient(result, str(tmp_path), decimation=1)
        lines = open(paths[0]).read().splitlines()
        t0 = float(lines[1].split(",")[0])
        t1 = float(lines[2].split(",")[0])
        # Sample spacing equals 1/(scaled sample rate) in seconds.
        fs_hz = scenario.grid.sample_rate * scenario.frequency_scale
        assert t1 - t0 == pytest.approx(1.0 / fs_hz, rel=1e-9)
        assert t0 == 0.0


class TestSummaryRendering:
    def test_errors_section_lists_failures(self):
        summary = {
            "measurements": {
                "cg": {"value_db": 13.5, "analytic_db": 13.56,
                       "reference_db": 12.42},
                "p1db": {"error": "NoCompressionError: a3 must be < 0"},
            },
            "reference": {"noise_figure_db": 8.92},
        }
        text = render_summary_text(summary)
        assert "failed measurements:" in text
        assert "NoCompressionError" in text
        assert "conversion gain" in text
