#!/usr/bin/env python3
"""homroll command line

Runs scenario files through the rolling library::

    homroll roll|closed-form|compare|validate --config <path> [--out <dir>]

Exit codes: 0 when every residual is within its threshold, 1 on a threshold
violation, 2 on configuration or construction errors, 3 on numerical failure.
"""

import argparse
import json
import logging
import os
import sys
import time
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
from dotenv import load_dotenv

from lie import NotInGroupError, TooFarFromGroupError
from matcore import TOLERANCES, HomrollError, NonFiniteError
from reductive import AlphaMap, natural_reductivity_residual, validate_space
from rolling import (
    ControlCurve,
    RollingTrajectory,
    StateInvariantViolatedError,
    closed_form_trajectory,
    compare_trajectories,
    horizontality_residual,
    integrate_rolling,
    lie_group_rolling,
    stiefel_special_rolling,
    verify_no_slip,
    verify_no_twist,
)
from scenario import (
    BuiltSpace,
    Derivative,
    ScenarioConfig,
    ScenarioConfigError,
    SpaceKind,
    build_alpha,
    build_control,
    build_space,
    load_scenario,
    special_xi,
    write_report,
    write_trajectory_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

TRAJECTORY_FILE = "trajectory.csv"
REPORT_FILE = "report.json"


def _configure_logging() -> None:
    # stdout carries command results; logs go to stderr
    level_name = os.getenv("HOMROLL_LOG_LEVEL", "INFO").upper()
    level = logging.getLevelName(level_name)
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.INFO,
        stream=sys.stderr,
        format="%(name)s: %(message)s",
    )


def _quad_panels() -> int:
    raw = os.getenv("HOMROLL_QUAD_PANELS", "4")
    try:
        panels = int(raw)
    except ValueError as e:
        raise ScenarioConfigError(f"HOMROLL_QUAD_PANELS must be an integer, got {raw!r}") from e
    if panels < 2 or panels % 2:
        raise ScenarioConfigError(f"HOMROLL_QUAD_PANELS must be a positive even integer, got {panels}")
    return panels


def _out_dir(config: ScenarioConfig, override: str | None) -> Path:
    if override:
        return Path(override)
    if config.output is not None:
        return config.output
    return Path(os.getenv("HOMROLL_OUT_DIR", "."))


def _uses_group_factorization(config: ScenarioConfig) -> bool:
    return config.space.kind is SpaceKind.LIE_GROUP and config.derivative is Derivative.CANONICAL_FIRST


def _integrate(config: ScenarioConfig, built: BuiltSpace, alpha: AlphaMap, control: ControlCurve) -> RollingTrajectory:
    if _uses_group_factorization(config):
        return lie_group_rolling(built.space, control, steps=config.steps)
    return integrate_rolling(alpha, built.space, control, steps=config.steps)


def _emit(report: dict[str, Any]) -> None:
    print(json.dumps(report, indent=2, sort_keys=True))


def cmd_roll(config: ScenarioConfig, out_dir: Path) -> int:
    """Integrate the configured rolling and report its residuals.

    Parameters
    ----------
    config : ScenarioConfig
        Validated scenario.
    out_dir : Path
        Directory receiving ``trajectory.csv`` and ``report.json``.

    Returns
    -------
    int
        ``EXIT_OK`` when all residuals are within their thresholds, otherwise
        ``EXIT_THRESHOLD``.
    """
    started = time.perf_counter()
    built = build_space(config.space, config.seed)
    alpha = build_alpha(config.derivative)
    control = build_control(config, built.space, alpha)
    traj = _integrate(config, built, alpha, control)

    residuals = {
        "no_slip_residual": verify_no_slip(traj),
        "no_twist_residual": verify_no_twist(traj, built.space, alpha),
        "S_orthogonality_drift": traj.diagnostics.s_drift,
        "g_group_drift": traj.diagnostics.g_drift,
    }
    thresholds = {
        "no_slip_residual": TOLERANCES.no_slip,
        "no_twist_residual": TOLERANCES.no_twist,
        "S_orthogonality_drift": TOLERANCES.s_orthogonality,
        "g_group_drift": TOLERANCES.g_group,
    }
    failed = sorted(name for name, value in residuals.items() if value > thresholds[name])
    report: dict[str, Any] = {
        "command": "roll",
        "space": built.space.name,
        "derivative": config.derivative.value,
        "steps": config.steps,
        **residuals,
        "S_orthogonality_drift_raw": traj.diagnostics.s_drift_raw,
        "horizontality_residual": horizontality_residual(traj),
        "thresholds": thresholds,
        "failed": failed,
        "passed": not failed,
        "wall_time": time.perf_counter() - started,
    }
    write_trajectory_csv(out_dir / TRAJECTORY_FILE, traj)
    write_report(out_dir / REPORT_FILE, report)
    _emit(report)
    for name in failed:
        logger.warning(f"{name} = {residuals[name]:.3e} exceeds {thresholds[name]:.1e}")
    return EXIT_OK if not failed else EXIT_THRESHOLD


def cmd_closed_form(config: ScenarioConfig, out_dir: Path) -> int:
    """Sample the closed-form rolling of a ``special`` control into ``trajectory.csv``."""
    built = build_space(config.space, config.seed)
    alpha = build_alpha(config.derivative)
    xi = special_xi(config, built.space)
    panels = _quad_panels()
    gamma = None
    if built.stiefel is not None:
        xi1, xi2 = built.stiefel.split(xi.mat)
        rolled = stiefel_special_rolling(built.stiefel, xi1, xi2, config.t1, config.steps + 1, alpha, panels)
        traj, gamma = rolled.trajectory, rolled.gamma
    else:
        traj = closed_form_trajectory(built.space, xi, alpha, config.t1, config.steps, panels)
    write_trajectory_csv(out_dir / TRAJECTORY_FILE, traj, gamma)
    print(out_dir / TRAJECTORY_FILE)
    return EXIT_OK


def cmd_compare(config: ScenarioConfig, out_dir: Path) -> int:
    """Compare the integrated rolling of a ``special`` control with its closed form."""
    started = time.perf_counter()
    built = build_space(config.space, config.seed)
    alpha = build_alpha(config.derivative)
    xi = special_xi(config, built.space)
    numerical = _integrate(config, built, alpha, build_control(config, built.space, alpha))
    closed = closed_form_trajectory(built.space, xi, alpha, config.t1, config.steps, _quad_panels())
    comparison = compare_trajectories(numerical, closed)
    threshold = 1e-5 * (1.0 + xi.norm())
    passed = comparison.deviation <= threshold
    report = {
        "command": "compare",
        "space": built.space.name,
        "derivative": config.derivative.value,
        "steps": config.steps,
        "xi_norm": xi.norm(),
        "deviation": comparison.deviation,
        "deviation_time": comparison.time,
        "deviation_component": comparison.component,
        "threshold": threshold,
        "passed": passed,
        "wall_time": time.perf_counter() - started,
    }
    write_report(out_dir / REPORT_FILE, report)
    _emit(report)
    if not passed:
        logger.warning(f"deviation {comparison.deviation:.3e} exceeds {threshold:.1e} at t={comparison.time:g}")
    return EXIT_OK if passed else EXIT_THRESHOLD


def cmd_validate(config: ScenarioConfig, out_dir: Path) -> int:
    """Print the structural checks of the configured space."""
    built = build_space(config.space, config.seed)
    report = validate_space(built.space, build_alpha(config.derivative))
    for check in report.checks:
        status = "pass" if check.passed else "FAIL"
        print(f"{check.name}: {status} value={check.value:.3e} limit={check.limit:.1e}")
    if built.stiefel is not None:
        residual = natural_reductivity_residual(built.space, np.random.default_rng(config.seed))
        print(f"natural_reductivity: value={residual:.3e}")
    return EXIT_OK if report.passed else EXIT_THRESHOLD


COMMANDS: dict[str, Callable[[ScenarioConfig, Path], int]] = {
    "roll": cmd_roll,
    "closed-form": cmd_closed_form,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homroll", description="Intrinsic rollings of reductive homogeneous spaces")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="scenario JSON file")
        cmd.add_argument("--out", help="output directory (default: scenario 'output', then HOMROLL_OUT_DIR)")
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        config = load_scenario(args.config)
        out_dir = _out_dir(config, args.out)
        code = COMMANDS[args.command](config, out_dir)
    except (NonFiniteError, NotInGroupError, StateInvariantViolatedError, TooFarFromGroupError) as e:
        logger.error(f"{args.command} aborted on a numerical failure: {e}")
        return EXIT_NUMERIC
    except (HomrollError, ValueError, OSError) as e:
        logger.error(f"{args.command} aborted: {e}")
        return EXIT_CONFIG
    logger.info(f"{args.command} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
