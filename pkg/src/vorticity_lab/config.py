from dataclasses import dataclass, fields
from enum import Enum
from functools import cached_property
import hashlib
from pathlib import Path
from typing import Any, Callable, Mapping, NamedTuple, Self

from vorticity_lab.errors import IssueLog
from vorticity_lab.fixtures import FixtureKind, FixtureSpec
from vorticity_lab.forward import AdvectionScheme, SolverConfig, StoragePolicy
from vorticity_lab.grid import MIN_NODES, Grid, make_grid
from vorticity_lab.inverse import InverseConfig, InverseMethod, JacobianMode
from vorticity_lab.parser import Parser
from vorticity_lab.scanner import Scanner


class Command(Enum):
    FORWARD = "forward"
    INVERSE = "inverse"
    VERIFY = "verify"
    STABILITY = "stability"
    CONVERGENCE = "convergence"


class Study(Enum):
    TAYLOR = "taylor"
    POISSON = "poisson"


class Setting(NamedTuple):
    text: str
    line: int | None
    origin: str


class ConfigScope:
    values: dict[str, Setting]
    enclosing: Self | None

    def __init__(self, origin: str, enclosing: Self | None = None) -> None:
        self.origin = origin
        self.values = {}
        self.enclosing = enclosing

    def define(self, name: str, text: str, line: int | None = None) -> None:
        self.values[name] = Setting(text, line, self.origin)

    def defines(self, name: str) -> bool:
        return name in self.values

    def get(self, name: str) -> Setting:
        if name in self.values:
            return self.values[name]
        elif self.enclosing is not None:
            return self.enclosing.get(name)
        else:
            raise KeyError(name)


def _render(value: Any) -> str:
    match value:
        case None:
            return "auto"
        case bool():
            return "true" if value else "false"
        case Enum():
            return value.value
        case float():
            return repr(value)
        case tuple():
            return ",".join(_render(item) for item in value)
        case _:
            return str(value)


def _boolean(text: str) -> bool:
    match text.lower():
        case "true" | "on" | "yes" | "1":
            return True
        case "false" | "off" | "no" | "0":
            return False
    raise ValueError(text)


def _positive[T: (int, float)](kind: Callable[[str], T]) -> Callable[[str], T]:
    def convert(text: str) -> T:
        value = kind(text)
        if not value > 0:
            raise ValueError(text)
        return value

    return convert


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(text)
    return value


def _optional_positive_float(text: str) -> float | None:
    return None if text == "auto" else _positive(float)(text)


def _optional_float(text: str) -> float | None:
    return None if text == "auto" else float(text)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(","))


def _positive_float_list(text: str) -> tuple[float, ...]:
    return tuple(_positive(float)(part) for part in text.split(","))


def _directions(text: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for part in text.split(","):
        a, b = part.split("x")
        pairs.append((_positive(int)(a), _positive(int)(b)))
    return tuple(pairs)


def _render_directions(pairs: tuple[tuple[int, int], ...]) -> str:
    return ",".join(f"{a}x{b}" for a, b in pairs)


def _boundary_source(text: str) -> float | Path | None:
    if text == "trace":
        return None
    try:
        return float(text)
    except ValueError:
        if not text.lower().endswith(".csv"):
            raise
        return Path(text)


def _render_boundary(value: float | Path | None) -> str:
    return "trace" if value is None else _render(value)


@dataclass(frozen=True)
class KeySpec:
    name: str
    convert: Callable[[str], Any]
    default: str
    expected: str
    help: str
    render: Callable[[Any], str] = _render


KEYS: tuple[KeySpec, ...] = (
    KeySpec("command", Command, "forward", "a subcommand", "subcommand to run"),
    KeySpec("grid", int, "65", "an integer", f"nodes per axis, at least {MIN_NODES}"),
    KeySpec("lx", _positive(float), "1.0", "a positive number", "domain length along x"),
    KeySpec("ly", _positive(float), "1.0", "a positive number", "domain length along y"),
    KeySpec("dt", _positive(float), "0.001", "a positive number", "time step"),
    KeySpec("tmax", _positive(float), "0.5", "a positive number", "time horizon T (a whole number of steps)"),
    KeySpec(
        "fixture", FixtureSpec.parse, "taylor", "a fixture",
        "initial vorticity: taylor, constant:c, random-stream:seed,modes or a field .csv",
    ),
    KeySpec(
        "h", _boundary_source, "trace", "trace, a number or a (t,h) .csv",
        "forward boundary vorticity", _render_boundary,
    ),
    KeySpec("advection", _boolean, "true", "true or false", "include the advection term"),
    KeySpec("scheme", AdvectionScheme, "midpoint", "midpoint or ab2", "time discretization of the advection term"),
    KeySpec("cfl_safety", _positive(float), "0.9", "a number in (0, 1]", "advective step safety factor"),
    KeySpec("poisson_tol", _positive(float), "1e-10", "a positive number", "relative residual bound of elliptic solves"),
    KeySpec("store", StoragePolicy.parse, "norms", "all, norms or every:m", "field snapshot storage"),
    KeySpec("method", InverseMethod, "projection", "projection, landweber or lm", "inverse method"),
    KeySpec("L", _optional_float, "auto", "a number or auto", "target mean vorticity (auto: mean of the initial field)"),
    KeySpec("stop_tol", _positive(float), "1e-08", "a positive number", "residual threshold of iterative methods"),
    KeySpec("max_iters", _non_negative_int, "200", "a non-negative integer", "iteration cap of iterative methods"),
    KeySpec("step_size", _optional_positive_float, "auto", "a positive number or auto", "Landweber step (auto: 1/|J|^2)"),
    KeySpec("damping", _positive(float), "1e-06", "a positive number", "initial Levenberg-Marquardt damping"),
    KeySpec("growth", _positive(float), "10.0", "a number above 1", "damping growth factor"),
    KeySpec("jacobian_mode", JacobianMode, "sensitivity", "sensitivity or finite-difference", "Jacobian evaluation"),
    KeySpec("fd_eps", _positive(float), "0.0001", "a positive number", "central difference increment"),
    KeySpec("jacobian_refresh", _positive(int), "10", "a positive integer", "Landweber iterations between Jacobians"),
    KeySpec("out", Path, "out", "a directory", "output directory"),
    KeySpec("seed", _non_negative_int, "0", "a non-negative integer", "seed of every random draw"),
    KeySpec("grids", _int_list, "33,65,129", "comma separated integers", "convergence grid ladder"),
    KeySpec("study", Study, "taylor", "taylor or poisson", "convergence study"),
    KeySpec("epsilons", _positive_float_list, "0.1,0.01,0.001", "comma separated positive numbers", "perturbation sizes"),
    KeySpec(
        "directions", _directions, "2x2,1x2,2x1", "comma separated axb mode pairs",
        "perturbation stream function modes", _render_directions,
    ),
    KeySpec("samples", _positive(int), "20", "a positive integer", "elliptic constant sample count"),
)

SPECS: dict[str, KeySpec] = {spec.name: spec for spec in KEYS}


@dataclass(frozen=True)
class RunConfig:
    command: Command
    grid: int
    lx: float
    ly: float
    dt: float
    tmax: float
    fixture: FixtureSpec
    h: float | Path | None
    advection: bool
    scheme: AdvectionScheme
    cfl_safety: float
    poisson_tol: float
    store: StoragePolicy
    method: InverseMethod
    L: float | None
    stop_tol: float
    max_iters: int
    step_size: float | None
    damping: float
    growth: float
    jacobian_mode: JacobianMode
    fd_eps: float
    jacobian_refresh: int
    out: Path
    seed: int
    grids: tuple[int, ...]
    study: Study
    epsilons: tuple[float, ...]
    directions: tuple[tuple[int, int], ...]
    samples: int

    def echo(self) -> str:
        lines = [
            f"{item.name} = {SPECS[item.name].render(getattr(self, item.name))}"
            for item in fields(self)
        ]
        return "\n".join(sorted(lines)) + "\n"

    @cached_property
    def hash(self) -> str:
        return hashlib.sha256(self.echo().encode()).hexdigest()[:16]

    def make_grid(self, n: int | None = None) -> Grid:
        n = self.grid if n is None else n
        return make_grid(n, n, self.lx, self.ly)

    def solver_config(self, grid: Grid | None = None, dt: float | None = None) -> SolverConfig:
        return SolverConfig(
            grid if grid is not None else self.make_grid(),
            self.dt if dt is None else dt,
            self.tmax,
            advection_on=self.advection,
            scheme=self.scheme,
            cfl_safety=self.cfl_safety,
            poisson_tol=self.poisson_tol,
            storage=self.store,
        )

    def inverse_config(self) -> InverseConfig:
        return InverseConfig(
            self.method, self.L, self.max_iters, self.step_size, self.damping, self.growth,
            self.stop_tol, self.jacobian_mode, self.fd_eps, self.jacobian_refresh,
        )


def _check_consistency(values: dict[str, Any], scope: ConfigScope, issues: IssueLog) -> None:
    def problem(kind: str, name: str, message: str) -> None:
        issues.report(kind, message, line=scope.get(name).line, key=name)

    if values["grid"] < MIN_NODES:
        problem("inconsistent", "grid", f"Grid needs at least {MIN_NODES} nodes per axis, got {values['grid']}")
    dt, tmax = values["dt"], values["tmax"]
    if dt > tmax:
        problem("inconsistent", "dt", f"Time step dt={dt!r} exceeds the horizon tmax={tmax!r}")
    elif abs(round(tmax / dt) * dt - tmax) > 1e-9 * tmax:
        problem("inconsistent", "dt", f"Horizon tmax={tmax!r} is not a whole number of steps dt={dt!r}")
    if values["cfl_safety"] > 1:
        problem("inconsistent", "cfl_safety", f"Safety factor must not exceed 1, got {values['cfl_safety']!r}")
    if values["growth"] <= 1:
        problem("inconsistent", "growth", f"Damping growth must exceed 1, got {values['growth']!r}")

    fixture = values["fixture"]
    if fixture.kind is FixtureKind.FILE and not fixture.path.is_file():
        problem("missing-file", "fixture", f"Field file '{fixture.path}' does not exist")
    if isinstance(values["h"], Path) and not values["h"].is_file():
        problem("missing-file", "h", f"Boundary file '{values['h']}' does not exist")

    if values["command"] is Command.CONVERGENCE:
        grids = values["grids"]
        if len(grids) < 3:
            problem("inconsistent", "grids", f"Convergence study needs at least 3 grids, got {len(grids)}")
        if any(n < MIN_NODES for n in grids):
            problem("inconsistent", "grids", f"Every grid needs at least {MIN_NODES} nodes per axis")


def parse_config(source: str | Path | None = None, flags: Mapping[str, str] | None = None) -> RunConfig:
    issues = IssueLog()

    defaults = ConfigScope("default")
    for spec in KEYS:
        defaults.define(spec.name, spec.default)

    file_scope = ConfigScope("file", defaults)
    if source is not None:
        path = Path(source)
        if not path.is_file():
            issues.report("missing-file", f"Config file '{path}' does not exist", key="config")
            issues.raise_if_any()
        entries = Parser(Scanner(path.read_text(), issues).scan_tokens(), issues).parse()
        for entry in entries:
            name = entry.key.lexeme
            if name not in SPECS:
                issues.error(entry.key, f"Unknown key '{name}'", kind="unknown-key")
            elif file_scope.defines(name):
                issues.error(entry.key, f"Key '{name}' is set more than once", kind="inconsistent")
            else:
                file_scope.define(name, entry.text, entry.key.line)

    flag_scope = ConfigScope("flag", file_scope)
    for name, text in (flags or {}).items():
        if name not in SPECS:
            issues.report("unknown-key", f"Unknown key '{name}'", key=name)
        else:
            flag_scope.define(name, str(text))

    values: dict[str, Any] = {}
    for spec in KEYS:
        setting = flag_scope.get(spec.name)
        try:
            values[spec.name] = spec.convert(setting.text)
        except (ValueError, TypeError):
            issues.report(
                "type-mismatch", f"Expected {spec.expected}, got '{setting.text}'",
                line=setting.line, key=spec.name,
            )
    issues.raise_if_any()

    _check_consistency(values, flag_scope, issues)
    issues.raise_if_any()
    return RunConfig(**values)
