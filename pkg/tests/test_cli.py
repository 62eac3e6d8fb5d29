"""Config parsing, the experiment runner and the command-line interface."""

import json
from importlib import resources

import numpy as np
import pytest

from jsdmsim.cli import main
from jsdmsim.config import ConfigError, load_config, parse_config
from jsdmsim.runner import run


def bundled_text():
    return resources.files("jsdmsim.configs").joinpath("table1.cfg").read_text()


def desk_config_text(beamformers="geb pe", combiners="zf lmmse", estimator="lmmse",
                     phi="-2.0 2.0 2.0", trials=3, m=16):
    start, stop, step = phi.split()
    return f"""
[scenario]
antennas = {m}
taps = 32
noise_power = 1.0
block_length = 32

[group 1]
mobile = true
users = 2
chains = 4
symbol_energy_db = 30
spread = 2.0
gain = 1.0
mpc 0 = -15.5 -14.5
mpc 5 = -2.5 -1.5
mpc 11 = 16.5 17.5

[group 2]
users = 2
chains = 4
symbol_energy_db = 20
spread = 2.0
gain = 1.0
mpc 3 = 40.5 41.5
mpc 9 = 20.5 21.5

[run]
beamformers = {beamformers}
combiners = {combiners}
estimator = {estimator}

[estimation]
pilot_length = 8

[sweep]
phi_start = {start}
phi_stop = {stop}
phi_step = {step}

[mc]
trials = {trials}
seed = 7

[output]
beampattern_step = 1.0
"""


class TestConfigParsing:
    def test_bundled_table1(self):
        cfg = parse_config(bundled_text())
        scn = cfg.scenario
        assert scn.n_antennas == 128
        assert scn.n_groups == 4
        assert scn.n_taps == 32
        assert scn.noise_power == 1.0
        assert scn.groups[0].delays == (0, 5, 11)
        assert scn.groups[0].mobile
        assert scn.groups[1].delays == (3, 9)
        assert scn.groups[3].delays == (29,)
        np.testing.assert_allclose(scn.groups[0].mean_aoa,
                                   [[-15.5, -2.5, 16.5], [-14.5, -1.5, 17.5]])
        np.testing.assert_allclose(scn.groups[0].spread, 2.0)
        np.testing.assert_allclose(scn.groups[0].gain, 1.0)
        assert cfg.group == 0
        assert cfg.phi_step == pytest.approx(0.1)

    def test_missing_required_key(self):
        text = desk_config_text().replace("chains = 4", "", 1)
        with pytest.raises(ConfigError, match="chains"):
            parse_config(text)

    def test_zero_chains_invariant(self):
        text = desk_config_text().replace("chains = 4", "chains = 0", 1)
        with pytest.raises(ConfigError, match="chain"):
            parse_config(text)

    def test_unknown_key_with_location(self):
        text = desk_config_text() + "\n[numerics]\nbogus = 3\n"
        with pytest.raises(ConfigError, match=r"line \d+.*bogus"):
            parse_config(text)

    def test_unknown_beamformer(self):
        with pytest.raises(ConfigError, match="svd-magic"):
            parse_config(desk_config_text(beamformers="geb svd-magic"))

    def test_duplicate_key(self):
        text = desk_config_text().replace("trials = 3", "trials = 3\ntrials = 4")
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(text)

    def test_phi_values(self):
        cfg = parse_config(desk_config_text(phi="-1.0 1.0 0.5"))
        np.testing.assert_allclose(cfg.phi_values(), [-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_estimator_requires_section(self):
        text = desk_config_text()
        text = text.replace("[estimation]\npilot_length = 8\n", "")
        with pytest.raises(ConfigError, match="estimation"):
            parse_config(text)


class TestRunner:
    def test_smoke_emits_all_files(self, tmp_path):
        cfg_file = tmp_path / "desk.cfg"
        cfg_file.write_text(desk_config_text())
        cfg = load_config(cfg_file)
        manifest = run(cfg, tmp_path / "out")
        assert manifest["exit_code"] == 0
        for name in ("results.csv", "cdf.csv", "beampattern.csv", "manifest.json"):
            assert (tmp_path / "out" / name).is_file()
        header = (tmp_path / "out" / "results.csv").read_text().splitlines()[0]
        assert header == "phi,beamformer,combiner,user,capacity,expected_sinr,nmse"

    def test_rerun_byte_identical(self, tmp_path):
        cfg = parse_config(desk_config_text())
        run(cfg, tmp_path / "a")
        run(cfg, tmp_path / "b")
        for name in ("results.csv", "cdf.csv", "beampattern.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_beamformer_labels_in_csv(self, tmp_path):
        cfg = parse_config(desk_config_text(beamformers="geb dft", combiners="zf",
                                            estimator="none"))
        run(cfg, tmp_path / "out")
        rows = (tmp_path / "out" / "results.csv").read_text().splitlines()[1:]
        labels = {row.split(",")[1] for row in rows}
        assert labels == {"geb", "dft"}

    def test_db_flag_changes_columns(self, tmp_path):
        cfg = parse_config(desk_config_text(estimator="none"))
        run(cfg, tmp_path / "out", db=True)
        header = (tmp_path / "out" / "results.csv").read_text().splitlines()[0]
        assert "expected_sinr_db" in header

    def test_manifest_contents(self, tmp_path):
        cfg = parse_config(desk_config_text())
        run(cfg, tmp_path / "out", seed=99, threads=2)
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["seed"] == 99
        assert manifest["threads"] == 2
        assert manifest["failures"] == []
        assert manifest["numerics"]["tol"] == 1e-8
        assert "numpy" in manifest["versions"]

    def test_beampattern_stage_failure_flagged(self, tmp_path):
        # a chain count that does not divide the array breaks the fixed designs
        # at every stage; the run completes with every failure in the manifest
        text = desk_config_text(beamformers="geb fixed-ordered", combiners="zf",
                                estimator="none", m=18)
        cfg = parse_config(text)
        manifest = run(cfg, tmp_path / "out")
        assert manifest["exit_code"] == 2
        pattern_rows = [f for f in manifest["failures"] if f["combiner"] == "(beampattern)"]
        assert pattern_rows and pattern_rows[0]["beamformer"] == "fixed-ordered"
        body = (tmp_path / "out" / "beampattern.csv").read_text().splitlines()
        labels = {row.split(",")[0] for row in body[1:]}
        assert labels == {"geb"}

    def test_partial_failures_flagged(self, tmp_path):
        # block length below the delay spread fails every angle at run time
        text = desk_config_text().replace("block_length = 32", "block_length = 8")
        cfg = parse_config(text)
        manifest = run(cfg, tmp_path / "out")
        assert manifest["exit_code"] == 2
        assert manifest["partial"] is True
        assert len(manifest["failures"]) > 0
        assert "block length" in manifest["failures"][0]["error"]
        # outputs still exist, with the failed rows omitted
        rows = (tmp_path / "out" / "results.csv").read_text().splitlines()
        assert rows[0].startswith("phi,")
        assert len(rows) == 1


class TestCli:
    def test_validate_ok(self, tmp_path, capsys):
        cfg_file = tmp_path / "desk.cfg"
        cfg_file.write_text(desk_config_text())
        assert main(["validate", str(cfg_file)]) == 0
        assert "OK" in capsys.readouterr().out

    def test_validate_bad_config(self, tmp_path, capsys):
        cfg_file = tmp_path / "bad.cfg"
        cfg_file.write_text("[scenario]\nantennas = what\n")
        assert main(["validate", str(cfg_file)]) == 1
        assert "error" in capsys.readouterr().err

    def test_run_and_seed_override(self, tmp_path):
        cfg_file = tmp_path / "desk.cfg"
        cfg_file.write_text(desk_config_text(beamformers="geb", combiners="zf",
                                             estimator="none", trials=2))
        out = tmp_path / "out"
        assert main(["run", str(cfg_file), "--out", str(out), "--seed", "5"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 5

    def test_scenario_emission_and_scaling(self, tmp_path):
        out = tmp_path / "desk_t1.cfg"
        assert main(["scenario", "table1", "--scale", "32", "-o", str(out)]) == 0
        cfg = load_config(out)
        assert cfg.scenario.n_antennas == 32
        assert cfg.phi_step == pytest.approx(1.0)
        assert cfg.trials == 200
        # unscaled emission keeps the canonical values
        full = tmp_path / "full_t1.cfg"
        assert main(["scenario", "table1", "-o", str(full)]) == 0
        cfg_full = load_config(full)
        assert cfg_full.scenario.n_antennas == 128
        assert cfg_full.phi_step == pytest.approx(0.1)

    def test_env_output_override(self, tmp_path, monkeypatch):
        cfg_file = tmp_path / "desk.cfg"
        cfg_file.write_text(desk_config_text(beamformers="geb", combiners="zf",
                                             estimator="none", trials=2, phi="0.0 0.0 1.0"))
        monkeypatch.setenv("JSDMSIM_OUT", str(tmp_path / "envout"))
        assert main(["run", str(cfg_file)]) == 0
        assert (tmp_path / "envout" / "results.csv").is_file()

    def test_env_threads_override(self, tmp_path, monkeypatch):
        cfg_file = tmp_path / "desk.cfg"
        cfg_file.write_text(desk_config_text(beamformers="geb", combiners="zf",
                                             estimator="none", trials=2, phi="0.0 2.0 1.0"))
        monkeypatch.setenv("JSDMSIM_THREADS", "3")
        out = tmp_path / "out"
        assert main(["run", str(cfg_file), "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["threads"] == 3

    def test_run_missing_config(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "nope.cfg")]) == 1
        assert "not found" in capsys.readouterr().err
