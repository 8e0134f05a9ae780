import argparse
import logging
from collections.abc import Sequence
from typing import Any

from qg import DegenerateError, DomainError, InconsistencyError, StepTooLargeError
from rich import print as rich_print
from rich.console import Console
from rich.logging import RichHandler
from rich.text import Text

from .commands import cmd_adaptive, cmd_geometry, cmd_scan
from .configs import ConfigError, Overrides, RunConfig, config_load
from .expressions import ExpressionError
from .verify import cmd_verify, report_table

logger = logging.getLogger("qgeo")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4
EXIT_NOT_CONVERGED = 5

LIMIT_HINT = (
    "hint: approach the transition along a limit path, e.g. theta = π - 1e-6 and r = 1 - 1e-6 "
    "(canonical) or v = w - 1e-6 and k = π - 1e-6 (ssh)"
)

stderr = Console(stderr=True)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        command, path, overrides, verbosity = _parse_args(argv)
    except ConfigError as e:
        _report(e)
        return EXIT_INPUT

    _logging_setup(verbosity)

    try:
        config = config_load(path, overrides)
        return _run(command, config)
    except (ConfigError, DomainError, ExpressionError) as e:
        _report(e)
        return EXIT_INPUT
    except DegenerateError as e:
        _report(e)
        stderr.print(LIMIT_HINT)
        return EXIT_NUMERICAL
    except (InconsistencyError, StepTooLargeError) as e:
        _report(e)
        return EXIT_NUMERICAL


def _report(error: Exception) -> None:
    stderr.print(Text.assemble(("error: ", "bold red"), str(error)))


def _run(command: str, config: RunConfig) -> int:
    match command:
        case "geometry":
            cmd_geometry(config)
        case "scan":
            cmd_scan(config)
        case "adaptive":
            trace = cmd_adaptive(config)
            if config.adaptive.mode == "search" and not trace.converged:
                return EXIT_NOT_CONVERGED
        case "verify":
            report = cmd_verify(config)
            rich_print(report_table(report))
            if not report.passed:
                logger.error("verification failed: %s", ", ".join(report.failures))
                return EXIT_VERIFY
        case _:
            raise ConfigError(f"unknown command '{command}'")
    return EXIT_OK


def _logging_setup(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=stderr, show_path=False)],
        force=True,
    )


def _parse_args(argv: Sequence[str] | None) -> tuple[str, str | None, Overrides, int]:
    parser = argparse.ArgumentParser(
        prog="qgeo", description="Quantum geometry of SU(2) encodings and adaptive sensing"
    )
    parser.add_argument("command", choices=["geometry", "scan", "adaptive", "verify"])
    parser.add_argument("--config", type=str, default=None, help="TOML run configuration")
    parser.add_argument("--model", type=str, default=None, help="canonical, ssh or custom")
    parser.add_argument("--T", type=float, default=None, help="Evolution time")
    parser.add_argument("--probe", type=str, default=None, help="ground, optimal or x,y,z")
    parser.add_argument("--out", type=str, default=None, help="Output path instead of stdout")
    parser.add_argument("--format", type=str, default=None, help="csv or json")
    parser.add_argument("--grid", type=str, default=None, help="Scan counts, N or NxM")
    parser.add_argument("--mode", type=str, default=None, help="Adaptive schedule or search")
    parser.add_argument("--policy", type=str, default=None, help="Search policy")
    parser.add_argument("--noise-sigma", type=float, default=None, help="Gaussian QMT noise")
    parser.add_argument("--fd-step", type=float, default=None, help="Finite-difference step")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument(
        "--param", action="append", default=[], metavar="NAME=VALUE", help="Parameter value"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    args = parser.parse_args(argv)

    overrides: list[tuple[str, Any]] = []
    flags = {
        "model": args.model,
        "T": args.T,
        "out": args.out,
        "format": args.format,
        "grid": args.grid,
        "adaptive.mode": args.mode,
        "adaptive.policy": args.policy,
        "adaptive.noise_sigma": args.noise_sigma,
        "fd.step": args.fd_step,
        "seed": args.seed,
    }
    overrides += [(key, value) for key, value in flags.items() if value is not None]
    if args.probe is not None:
        overrides.append(("probe", _parse_probe(args.probe)))
    overrides += [_parse_param(text) for text in args.param]

    return args.command, args.config, tuple(overrides), args.verbose


def _parse_probe(text: str) -> str | tuple[float, ...]:
    if text in ("ground", "optimal"):
        return text
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--probe expects ground, optimal or x,y,z, got '{text}'") from None


def _parse_param(text: str) -> tuple[str, float]:
    name, sep, raw = text.partition("=")
    if not sep or not name.strip():
        raise ConfigError(f"--param expects NAME=VALUE, got '{text}'")
    try:
        return f"params.{name.strip()}", float(raw)
    except ValueError:
        raise ConfigError(f"--param {name.strip()} needs a number, got '{raw}'") from None
