import json

import numpy as np
import pytest

from lfmcal.cli import main as cli_main
from lfmcal.exceptions import ConfigError, ManifestError
from lfmcal.io_utils import read_csv, read_json, write_json
from lfmcal.scenarios import (
    builtin_scenario,
    builtin_scenario_names,
    compare_methods,
    config_from_dict,
    config_to_dict,
    run_scenario,
    verify_manifest,
)


def small_doc(name="unit", seed=77, **overrides):
    """A fast 4-channel scenario document for runner tests."""
    doc = {
        "schema_version": 1,
        "name": name,
        "master_seed": seed,
        "lfm": {"f0_hz": 1.0e9, "bw_hz": 0.5e9, "pulse_width_s": 2e-6,
                "proc_rate_hz": 2.5e9, "base_rate_hz": 0.5e9},
        "fine_grid_s": 20e-12,
        "n_trm": 4,
        "reference_trm": 0,
        "errors": [{"trm_ids": [2], "kind": "freq_dependent",
                    "amp_range_db": [-1.1, 0.0], "phase_range_deg": [-7.0, 7.0],
                    "n_knots": 8}],
        "windows": [{"window_len": 250, "overlap_ratio": 0.85}],
        "subbands": None,
        "delay_mode": "fold",
        "beamforming": None,
    }
    doc.update(overrides)
    return doc


class TestConfigValidation:
    def test_round_trip(self):
        cfg = config_from_dict(small_doc())
        again = config_from_dict(config_to_dict(cfg))
        assert config_to_dict(again) == config_to_dict(cfg)

    def test_unknown_top_level_key_named_in_error(self):
        doc = small_doc()
        doc["bogus_key"] = 1
        with pytest.raises(ConfigError, match=r"\$.*bogus_key"):
            config_from_dict(doc)

    def test_unknown_nested_key_has_field_path(self):
        doc = small_doc()
        doc["errors"][0]["mystery"] = 2
        with pytest.raises(ConfigError, match=r"errors\[0\].*mystery"):
            config_from_dict(doc)

    def test_missing_required_key(self):
        doc = small_doc()
        del doc["lfm"]["bw_hz"]
        with pytest.raises(ConfigError, match=r"\$\.lfm\.bw_hz"):
            config_from_dict(doc)

    def test_bad_delay_mode(self):
        with pytest.raises(ConfigError):
            config_from_dict(small_doc(delay_mode="nope"))

    def test_builtins_all_parse(self):
        for name in builtin_scenario_names():
            cfg = builtin_scenario(name)
            assert cfg.name == name

    def test_unknown_builtin(self):
        with pytest.raises(ConfigError):
            builtin_scenario("definitely-not-a-scenario")


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("small_run")
    cfg = config_from_dict(small_doc())
    manifest = run_scenario(cfg, out_dir=out)
    return out, manifest


@pytest.fixture(scope="module")
def oracle_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("oracle_run")
    doc = small_doc(include_oracle=True, subbands=10)
    run_scenario(config_from_dict(doc), out_dir=out)
    return out


class TestRunScenario:
    def test_manifest_lists_all_files(self, run_dir):
        out, manifest = run_dir
        for name in manifest["files"]:
            assert (out / name).is_file()
        verify_manifest(out / "manifest.json")

    def test_determinism_hash_identical(self, tmp_path, run_dir):
        _, manifest = run_dir
        again = run_scenario(config_from_dict(small_doc()), out_dir=tmp_path)
        assert again == manifest

    def test_seed_changes_hashes(self, tmp_path, run_dir):
        _, manifest = run_dir
        other = run_scenario(config_from_dict(small_doc(seed=78)), out_dir=tmp_path)
        assert other["files"]["calibration_w250_o85.csv"]["sha256"] \
            != manifest["files"]["calibration_w250_o85.csv"]["sha256"]

    def test_reference_row_zero_in_csv(self, run_dir):
        out, _ = run_dir
        cols = read_csv(out / "calibration_w250_o85.csv")
        ref = cols["trm_id"] == 0
        assert np.all(cols["amp_db"][ref] == 0.0)
        assert np.all(cols["phase_deg"][ref] == 0.0)

    def test_tampering_detected(self, run_dir, tmp_path):
        out, _ = run_dir
        import shutil
        copy = tmp_path / "copy"
        shutil.copytree(out, copy)
        (copy / "conventional.csv").write_text("trm_id,amp_db\n0,0\n")
        with pytest.raises(ManifestError):
            verify_manifest(copy / "manifest.json")

    def test_zero_error_scenario_reads_zero(self, tmp_path):
        doc = small_doc(errors=[])
        run_scenario(config_from_dict(doc), out_dir=tmp_path)
        summary = read_json(tmp_path / "summary.json")
        for stats in summary["methods"]["sliding_w250_o85"]["per_trm"].values():
            assert stats["amp_rmse_db"] < 1e-9
            assert stats["phase_rmse_deg"] < 1e-9


class TestCompareMethods:
    def test_oracle_rmse_exactly_zero(self, oracle_dir):
        result = compare_methods(oracle_dir / "manifest.json")
        oracle_rows = [r for r in result["calibration"] if r["method"] == "oracle"]
        assert oracle_rows
        for row in oracle_rows:
            assert row["amp_rmse_db"] == 0.0
            assert row["phase_rmse_deg"] == 0.0

    def test_method_ordering_on_errored_channel(self, oracle_dir):
        result = compare_methods(oracle_dir / "manifest.json")
        by = {(r["method"], r["trm_id"]): r for r in result["calibration"]}
        sliding = by[("sliding_w250_o85", 2)]
        sub = by[("subband_10", 2)]
        conv = by[("conventional", 2)]
        assert sliding["phase_rmse_deg"] <= sub["phase_rmse_deg"] \
            <= conv["phase_rmse_deg"]

    def test_missing_artifact_raises(self, oracle_dir, tmp_path):
        import shutil
        copy = tmp_path / "copy"
        shutil.copytree(oracle_dir, copy)
        manifest = read_json(copy / "manifest.json")
        (copy / "conventional.csv").unlink()
        del manifest["files"]["conventional.csv"]
        write_json(copy / "manifest.json", manifest)
        with pytest.raises(ManifestError):
            compare_methods(copy / "manifest.json")


class TestCli:
    def test_list_scenarios(self, capsys):
        assert cli_main(["list-scenarios"]) == 0
        out = capsys.readouterr().out
        for name in builtin_scenario_names():
            assert name in out

    def test_run_config_and_compare(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(small_doc()))
        out_dir = tmp_path / "artifacts"
        assert cli_main(["run", str(cfg_path), "--out-dir", str(out_dir)]) == 0
        assert (out_dir / "manifest.json").is_file()
        assert cli_main(["compare", str(out_dir / "manifest.json")]) == 0
        out = capsys.readouterr().out
        assert "conventional" in out

    def test_run_flag_overrides(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(small_doc()))
        out_dir = tmp_path / "artifacts"
        code = cli_main(["run", str(cfg_path), "--out-dir", str(out_dir),
                         "--window-len", "300", "--overlap", "0.5",
                         "--subbands", "5", "--seed", "123"])
        assert code == 0
        manifest = read_json(out_dir / "manifest.json")
        assert "calibration_w300_o50.csv" in manifest["files"]
        assert "subband_5.csv" in manifest["files"]
        assert manifest["master_seed"] == 123

    def test_invalid_config_machine_readable_error(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.json"
        doc = small_doc()
        doc["nonsense"] = True
        cfg_path.write_text(json.dumps(doc))
        code = cli_main(["run", str(cfg_path), "--out-dir", str(tmp_path / "x")])
        assert code != 0
        err = capsys.readouterr().err
        payload = json.loads(err)
        assert payload["error"] == "ConfigError"
        assert "nonsense" in payload["message"]
