import json
import subprocess
import sys
from pathlib import Path

import pytest

from degenlab.harness.cli import build_parser, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def test_parser_lists_subcommands():
    text = build_parser().format_help()
    for cmd in ("weights", "assemble", "scaling", "hls", "lorentz", "sharpness", "calculus",
                "coeff", "riesz", "report"):
        assert cmd in text


def test_weights_command_writes_report(tmp_path, capsys):
    status = main(["weights", "--config", str(CONFIGS / "weights_power.toml"),
                   "--out", str(tmp_path), "--seed", "7"])
    assert status == 0
    data = json.loads((tmp_path / "weights_weights_power.json").read_text())
    assert data["config"]["seed"] == 7 and data["status"] == 0
    assert (tmp_path / "weights_weights_power_classes.csv").exists()
    assert "[PASS]" in capsys.readouterr().out


def test_assemble_exports_operator(tmp_path):
    assert main(["assemble", "--config", str(CONFIGS / "assemble_power.toml"),
                 "--out", str(tmp_path)]) == 0
    assert any(p.suffix == ".txt" for p in tmp_path.iterdir())


def test_report_aggregates(tmp_path, capsys):
    main(["weights", "--config", str(CONFIGS / "weights_power.toml"), "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["report", "--out", str(tmp_path)]) == 0
    assert "weights" in capsys.readouterr().out


def test_refine_override(tmp_path):
    main(["hls", "--config", str(CONFIGS / "hls_half.toml"), "--out", str(tmp_path),
          "--refine", "0"])
    data = json.loads((tmp_path / "hls_hls_half.json").read_text())
    assert data["config"]["refine"] == 0
    assert len(data["tables"]["hls_ladder"]["rows"]) == 2


def test_missing_config_fails():
    with pytest.raises(SystemExit):
        main(["hls"])


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "degenlab", "weights", "--config",
                           str(CONFIGS / "weights_power.toml"), "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "report:" in proc.stdout
