"""Command line client over the in-process service transport."""

import json

import pytest

from batsim.cli import main
from batsim.presets import preset_text


@pytest.fixture()
def tiny_scenario(tmp_path):
    text = preset_text("table2").replace("n_replicates = 50000",
                                         "n_replicates = 300")
    path = tmp_path / "tiny.scenario"
    path.write_text(text)
    return path


class TestRunCommand:
    def test_writes_display_and_sidecar_files(self, tiny_scenario, tmp_path, capsys):
        out = tmp_path / "results"
        rc = main(["run", "--scenario", str(tiny_scenario), "--out", str(out)])
        assert rc == 0
        display = (out / "tiny.csv").read_text()
        full = (out / "tiny_full.csv").read_text()
        assert display.startswith("prior,interims,pFDR")
        assert display.count("\n") == 1 + 18  # header + 9 variants x 2 designs
        assert "se_pfdr" in full.splitlines()[0]
        assert capsys.readouterr().out == display  # stdout carries the table

    def test_byte_identical_reruns(self, tiny_scenario, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["run", "--scenario", str(tiny_scenario), "--out", str(out1)])
        main(["run", "--scenario", str(tiny_scenario), "--out", str(out2)])
        assert (out1 / "tiny.csv").read_bytes() == (out2 / "tiny.csv").read_bytes()
        assert (out1 / "tiny_full.csv").read_bytes() == (out2 / "tiny_full.csv").read_bytes()

    def test_zero_replicates_fails_cleanly(self, tiny_scenario, tmp_path):
        with pytest.raises(SystemExit):
            main(["run", "--scenario", str(tiny_scenario), "--out", str(tmp_path),
                  "--replicates", "0"])

    def test_parse_error_names_the_key(self, tmp_path):
        bad = tmp_path / "bad.scenario"
        bad.write_text(preset_text("table2").replace("cutoff = 0.689",
                                                     "cutoff = high"))
        with pytest.raises(SystemExit, match="cutoff"):
            main(["run", "--scenario", str(bad), "--out", str(tmp_path)])


class TestOtherCommands:
    def test_calibrate_prints_json(self, tiny_scenario, capsys):
        rc = main(["calibrate", "--scenario", str(tiny_scenario),
                   "--replicates", "5000"])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"cutoff", "achieved_pfdr", "mc_se", "band"}

    def test_list_presets(self, capsys):
        assert main(["list-presets"]) == 0
        out = capsys.readouterr().out
        assert "table2\t" in out and "table_s9\t" in out

    def test_properties_smoke(self, capsys):
        rc = main(["properties", "--suite", "mcmc-geweke", "--scale", "smoke"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[-1] == "PASS\tsuite=mcmc-geweke"
        assert all(line.startswith(("PASS", "FAIL")) for line in lines)
