import logging
import math
from pathlib import Path

import pandas as pd
import pytest

from qgeo import cli, verify
from qgeo.cli import main


def test_geometry_to_stdout(capsys: pytest.CaptureFixture[str]):
    code = main(["geometry", "--param", "theta=2", "--param", "phi=1", "--param", "r=0.5"])
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("theta [rad],phi [rad],r [1],")
    assert len(lines) == 2


def test_scan_writes_the_requested_file(tmp_path: Path):
    config = tmp_path / "scan.toml"
    config.write_text(
        "\n".join(
            [
                'model = "ssh"',
                "params = { w = 1.0, k = 2.0 }",
                "[scan]",
                'quantities = ["max_qmt"]',
                "[[scan.axes]]",
                'name = "v"',
                "start = 0.0",
                "stop = 2.0",
                "count = 3",
            ]
        ),
        encoding="utf-8",
    )
    out = tmp_path / "scan.csv"
    code = main(["scan", "--config", str(config), "--grid", "5", "--out", str(out), "--T", "5"])
    assert code == 0
    frame = pd.read_csv(out)
    assert list(frame["v [H0]"]) == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])


def test_adaptive_schedule_from_the_command_line(tmp_path: Path):
    config = tmp_path / "adaptive.toml"
    config.write_text("[adaptive.schedule]\nr = [0.1, 0.3, 0.2, 0.17]\n", encoding="utf-8")
    out = tmp_path / "trace.csv"
    args = ["adaptive", "--config", str(config), "--out", str(out)]
    args += ["--param", f"theta={math.pi}", "--param", "phi=0", "--param", "r=0.2"]
    assert main(args) == 0
    frame = pd.read_csv(out)
    assert list(frame["qmt[theta,theta] [1/rad^2]"]) == pytest.approx(
        [0.88088, 3.57969, 20.6705, 97.0358], abs=5e-4
    )


def test_search_that_does_not_converge_exits_5(tmp_path: Path):
    out = tmp_path / "trace.csv"
    args = ["adaptive", "--mode", "search", "--policy", "fixed", "--out", str(out)]
    args += ["--param", f"theta={math.pi / 4}", "--param", "phi=0", "--param", "r=0.2"]
    assert main(args) == 5
    assert set(pd.read_csv(out)["status"]) == {"not_converged"}


@pytest.mark.parametrize(
    "args",
    [
        ["geometry", "--param", "theta=1"],
        ["geometry", "--param", "theta"],
        ["geometry", "--param", "theta=abc"],
        ["geometry", "--probe", "up"],
        ["geometry", "--config", "/nonexistent/run.toml"],
        ["geometry", "--T", "-1", "--param", "theta=1", "--param", "phi=0", "--param", "r=0"],
        ["geometry", "--param", "theta=9", "--param", "phi=0", "--param", "r=0"],
        ["scan", "--grid", "4"],
    ],
)
def test_input_errors_exit_2(args: list[str], capsys: pytest.CaptureFixture[str]):
    assert main(args) == 2
    assert "error" in capsys.readouterr().err


def test_vanishing_field_exits_3_with_a_hint(tmp_path: Path, capsys: pytest.CaptureFixture[str]):
    config = tmp_path / "flat.toml"
    config.write_text(
        'model = "custom"\nparams = { a = 0.0 }\n'
        '[custom]\nnames = ["a"]\ncomponents = ["a", "0", "0"]\n',
        encoding="utf-8",
    )
    assert main(["geometry", "--config", str(config)]) == 3
    err = capsys.readouterr().err
    assert "limit path" in err


def test_custom_expression_error_exits_2(tmp_path: Path):
    config = tmp_path / "custom.toml"
    config.write_text(
        'model = "custom"\nparams = { a = 1.0 }\n'
        '[custom]\nnames = ["a"]\ncomponents = ["exp(a)", "0", "1"]\n',
        encoding="utf-8",
    )
    assert main(["geometry", "--config", str(config)]) == 2


def test_verify_prints_a_table_and_maps_failures(
    monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
):
    monkeypatch.setattr(verify, "CHECKS", (verify.check_transition_limits,))
    assert main(["verify"]) == 0
    assert "transition limits" in capsys.readouterr().out

    failing = verify.CheckResult("always fails", False, 1.0, 0.0)
    monkeypatch.setattr(verify, "CHECKS", (lambda config, rng: failing,))
    assert main(["verify"]) == 4


def test_verbosity_levels():
    for count, level in [(0, logging.WARNING), (1, logging.INFO), (2, logging.DEBUG)]:
        cli._logging_setup(count)
        assert logging.getLogger().level == level
