"""Scenario files

Parsing of JSON scenario configurations into frozen dataclasses, construction
of the configured space, derivative and control, and the trajectory CSV and
report JSON formats written by the command line.
"""

import csv
import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np

from lie import AlgebraElement
from matcore import HomrollError
from reductive import AlphaMap, ReductiveSpace
from rolling import ConstantControl, ControlCurve, RollingTrajectory, SampledControl, SpecialControl
from spaces import StiefelAlphaSpace, make_group_as_reductive, make_so_n, make_stiefel, make_symmetric_pair

logger = logging.getLogger(__name__)


class ScenarioConfigError(HomrollError):
    """Raised for invalid scenario configurations; the message names the field"""

    pass


class SpaceKind(Enum):
    SO_N = "so_n"
    LIE_GROUP = "lie_group"
    SYMMETRIC_PAIR = "symmetric_pair"
    STIEFEL = "stiefel"


class Derivative(Enum):
    CANONICAL_FIRST = "canonical_first"
    CANONICAL_SECOND = "canonical_second"


class ControlKind(Enum):
    CONSTANT = "constant"
    SAMPLED = "sampled"
    SPECIAL = "special"


@dataclass(frozen=True)
class SpaceConfig:
    kind: SpaceKind
    n: int
    k: int | None = None
    alpha_param: float | None = None


@dataclass(frozen=True)
class ControlConfig:
    kind: ControlKind
    coords: tuple[float, ...] = ()
    file: Path | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    space: SpaceConfig
    derivative: Derivative
    control: ControlConfig
    t1: float
    steps: int
    output: Path | None = None
    seed: int = 0


def _field(data: dict[str, Any], key: str, prefix: str = "") -> Any:
    if key not in data:
        raise ScenarioConfigError(f"missing field '{prefix}{key}'")
    return data[key]


def _integer(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioConfigError(f"field '{name}' must be an integer, got {value!r}")
    return value


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, int | float) or not np.isfinite(value):
        raise ScenarioConfigError(f"field '{name}' must be a finite number, got {value!r}")
    return float(value)


def _enum(cls: type[Enum], value: Any, name: str) -> Any:
    try:
        return cls(value)
    except ValueError as e:
        choices = ", ".join(m.value for m in cls)
        raise ScenarioConfigError(f"field '{name}' must be one of {choices}, got {value!r}") from e


def _parse_space(data: Any) -> SpaceConfig:
    if not isinstance(data, dict):
        raise ScenarioConfigError("field 'space' must be an object")
    kind = _enum(SpaceKind, _field(data, "type", "space."), "space.type")
    n = _integer(_field(data, "n", "space."), "space.n")
    if kind is SpaceKind.STIEFEL:
        k = _integer(_field(data, "k", "space."), "space.k")
        alpha_param = _number(_field(data, "alpha_param", "space."), "space.alpha_param")
        if not 1 <= k <= n:
            raise ScenarioConfigError(f"field 'space.k' must satisfy 1 <= k <= n, got k={k}, n={n}")
        return SpaceConfig(kind, n, k, alpha_param)
    if n < 2:
        raise ScenarioConfigError(f"field 'space.n' must be at least 2, got {n}")
    return SpaceConfig(kind, n)


def _parse_control(data: Any, base_dir: Path) -> ControlConfig:
    if not isinstance(data, dict):
        raise ScenarioConfigError("field 'control' must be an object")
    kind = _enum(ControlKind, _field(data, "type", "control."), "control.type")
    if kind is ControlKind.SAMPLED:
        file = base_dir / str(_field(data, "file", "control."))
        if not file.is_file():
            raise ScenarioConfigError(f"field 'control.file' names a missing file: {file}")
        return ControlConfig(kind, file=file)
    key = "xi" if kind is ControlKind.SPECIAL else "coords"
    raw = _field(data, key, "control.")
    if not isinstance(raw, list):
        raise ScenarioConfigError(f"field 'control.{key}' must be a list of numbers")
    return ControlConfig(kind, tuple(_number(x, f"control.{key}[{i}]") for i, x in enumerate(raw)))


def parse_scenario(data: Any, base_dir: Path = Path(".")) -> ScenarioConfig:
    """Validate a decoded scenario document.

    Raises
    ------
    ScenarioConfigError
        If a field is missing, malformed, or out of range.
    """
    if not isinstance(data, dict):
        raise ScenarioConfigError("scenario must be a JSON object")
    space = _parse_space(_field(data, "space"))
    derivative = _enum(Derivative, data.get("derivative", "canonical_first"), "derivative")
    control = _parse_control(_field(data, "control"), base_dir)
    t1 = _number(_field(data, "t1"), "t1")
    if t1 <= 0:
        raise ScenarioConfigError(f"field 't1' must be positive, got {t1}")
    steps = _integer(_field(data, "steps"), "steps")
    if steps < 1:
        raise ScenarioConfigError(f"field 'steps' must be at least 1, got {steps}")
    output = data.get("output")
    seed = _integer(data.get("seed", 0), "seed")
    return ScenarioConfig(space, derivative, control, t1, steps, Path(output) if output else None, seed)


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file; relative control files resolve against its directory."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioConfigError(f"cannot read scenario file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ScenarioConfigError(f"scenario file {path} is not valid JSON: {e}") from e
    return parse_scenario(data, path.parent)


@dataclass(frozen=True)
class BuiltSpace:
    space: ReductiveSpace
    stiefel: StiefelAlphaSpace | None = None


def build_space(config: SpaceConfig, seed: int = 0) -> BuiltSpace:
    rng = np.random.default_rng(seed)
    if config.kind in (SpaceKind.SO_N, SpaceKind.LIE_GROUP):
        return BuiltSpace(make_group_as_reductive(make_so_n(config.n)))
    if config.kind is SpaceKind.SYMMETRIC_PAIR:
        return BuiltSpace(make_symmetric_pair(make_so_n(config.n), rng))
    assert config.k is not None and config.alpha_param is not None
    stiefel = make_stiefel(config.n, config.k, config.alpha_param, rng=rng)
    return BuiltSpace(stiefel.space, stiefel)


def build_alpha(derivative: Derivative) -> AlphaMap:
    if derivative is Derivative.CANONICAL_FIRST:
        return AlphaMap.canonical_first()
    return AlphaMap.canonical_second()


def read_control_csv(path: Path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``t,u_0,u_1,...`` rows of a sampled control."""
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as e:
        raise ScenarioConfigError(f"field 'control.file' could not be read: {e}") from e
    if table.shape[1] < 2:
        raise ScenarioConfigError("field 'control.file' needs a time column and at least one control column")
    return table[:, 0], table[:, 1:]


def build_control(config: ScenarioConfig, space: ReductiveSpace, alpha: AlphaMap) -> ControlCurve:
    control = config.control
    if control.kind is ControlKind.SAMPLED:
        assert control.file is not None
        times, values = read_control_csv(control.file)
        if values.shape[1] != space.dim_m:
            raise ScenarioConfigError(f"field 'control.file' has {values.shape[1]} columns, expected {space.dim_m}")
        if abs(times[0]) > 1e-12 or times[-1] < config.t1 - 1e-12:
            raise ScenarioConfigError(f"field 'control.file' must cover [0, {config.t1}]")
        try:
            full = SampledControl(times, values)
        except ValueError as e:
            raise ScenarioConfigError(f"field 'control.file': {e}") from e
        if times[-1] <= config.t1 + 1e-12:
            return full
        # cut the samples at t1 so that integration stops there
        inside = times < config.t1 - 1e-12
        return SampledControl(np.append(times[inside], config.t1), np.vstack([values[inside], full(config.t1)]))
    if control.kind is ControlKind.CONSTANT:
        if len(control.coords) != space.dim_m:
            raise ScenarioConfigError(f"field 'control.coords' needs {space.dim_m} entries, got {len(control.coords)}")
        return ConstantControl(np.array(control.coords), config.t1)
    return SpecialControl(space, special_xi(config, space), alpha, config.t1)


def special_xi(config: ScenarioConfig, space: ReductiveSpace) -> AlgebraElement:
    """The algebra element of a ``special`` control."""
    if config.control.kind is not ControlKind.SPECIAL:
        raise ScenarioConfigError("field 'control.type' must be 'special' for closed-form rollings")
    coords = config.control.coords
    if len(coords) != space.group.dim:
        raise ScenarioConfigError(f"field 'control.xi' needs {space.group.dim} entries, got {len(coords)}")
    return space.group.element(np.array(coords))


def _index_names(prefix: str, rows: int, cols: int) -> list[str]:
    sep = "" if max(rows, cols) <= 10 else "_"
    return [f"{prefix}_{i}{sep}{j}" for i in range(rows) for j in range(cols)]


def trajectory_header(dim_m: int, n: int, gamma_shape: tuple[int, int] | None) -> list[str]:
    header = ["t", *(f"v_{i}" for i in range(dim_m)), *_index_names("g", n, n), *_index_names("S", dim_m, dim_m)]
    if gamma_shape is not None:
        header += _index_names("gamma", *gamma_shape)
    return header


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path: Path, traj: RollingTrajectory, gamma: np.ndarray | None = None) -> None:
    """Write one row per state; ``gamma`` defaults to the trajectory's development curve."""
    gamma = traj.development if gamma is None else gamma
    first = traj.states[0]
    gamma_shape = None if gamma is None else (gamma.shape[1], gamma.shape[2])
    header = trajectory_header(len(first.v), first.g.mat.shape[0], gamma_shape)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for i, state in enumerate(traj.states):
            row = [state.t, *state.v, *state.g.mat.ravel(), *state.S.ravel()]
            if gamma is not None:
                row += list(gamma[i].ravel())
            writer.writerow([_fmt(x) for x in row])
    logger.info(f"Wrote {len(traj.states)} states to {path}")


@dataclass(frozen=True)
class TrajectoryTable:
    """Columns of a trajectory CSV."""

    header: tuple[str, ...]
    times: np.ndarray
    v: np.ndarray
    g: np.ndarray
    S: np.ndarray
    gamma: np.ndarray | None


def read_trajectory_csv(path: Path) -> TrajectoryTable:
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = np.array([[float(x) for x in row] for row in reader])
    dim_m = sum(1 for h in header if h.startswith("v_"))
    g_size = sum(1 for h in header if h.startswith("g_"))
    gamma_names = [h for h in header if h.startswith("gamma_")]
    n = int(round(np.sqrt(g_size)))
    g_end = 1 + dim_m + g_size
    s_end = g_end + dim_m * dim_m
    gamma = None
    if gamma_names:
        last = gamma_names[-1].removeprefix("gamma_")
        i, j = last.split("_") if "_" in last else (last[0], last[1])
        gamma = rows[:, s_end:].reshape(len(rows), int(i) + 1, int(j) + 1)
    return TrajectoryTable(
        tuple(header),
        rows[:, 0],
        rows[:, 1 : 1 + dim_m],
        rows[:, 1 + dim_m : g_end].reshape(len(rows), n, n),
        rows[:, g_end:s_end].reshape(len(rows), dim_m, dim_m),
        gamma,
    )


def write_report(path: Path, report: dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote report to {path}")
