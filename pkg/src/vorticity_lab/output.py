import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from vorticity_lab.errors import FieldError
from vorticity_lab.forward import BoundaryVorticity
from vorticity_lab.grid import Grid, ScalarField

FIELD_HEADER = ("nx", "ny", "lx", "ly")


def format_value(value: Any) -> str:
    match value:
        case bool():
            return "true" if value else "false"
        case int() | np.integer():
            return str(int(value))
        case float() | np.floating():
            return "%.17g" % float(value)
        case _:
            return str(value)


def stamp(config_hash: str | None) -> str:
    return f"# config {config_hash or 'none'}"


def _data_lines(path: Path) -> list[str]:
    with path.open() as handle:
        return [line.strip() for line in handle if line.strip() and not line.startswith("#")]


def write_csv(
    path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]], config_hash: str | None = None
) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        handle.write(stamp(config_hash) + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def _cell(item: str) -> float | str:
    try:
        return float(item)
    except ValueError:
        return item


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    reader = csv.reader(_data_lines(Path(path)))
    columns = next(reader)
    rows = [[_cell(item) for item in row] for row in reader]
    numeric = all(isinstance(item, float) for row in rows for item in row)
    values = np.array(rows, dtype=float if numeric else object)
    return columns, values.reshape(-1, len(columns))


def _finite(value: Any) -> Any:
    match value:
        case float() | np.floating():
            value = float(value)
            return value if math.isfinite(value) else str(value)
        case np.integer():
            return int(value)
        case np.bool_():
            return bool(value)
        case dict():
            return {str(key): _finite(item) for key, item in value.items()}
        case list() | tuple() | np.ndarray():
            return [_finite(item) for item in value]
        case _:
            return value


def write_json(path: Path, document: dict[str, Any], config_hash: str | None = None) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config_hash": config_hash, **document} if config_hash is not None else document
    path.write_text(json.dumps(_finite(body), indent=2, sort_keys=True) + "\n")
    return path


def write_field(path: Path, field: ScalarField, config_hash: str | None = None) -> Path:
    grid = field.grid
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as handle:
        handle.write(stamp(config_hash) + "\n")
        handle.write(",".join(FIELD_HEADER) + "\n")
        handle.write(",".join(format_value(item) for item in (grid.nx, grid.ny, grid.lx, grid.ly)) + "\n")
        for value in field.values.ravel():
            handle.write(format_value(value) + "\n")
    return path


def read_field(path: Path) -> ScalarField:
    lines = _data_lines(Path(path))
    if len(lines) < 2 or tuple(lines[0].split(",")) != FIELD_HEADER:
        raise FieldError(f"'{path}' is not a field file", kind="shape-mismatch", path=str(path))
    nx, ny, lx, ly = lines[1].split(",")
    grid = Grid(int(nx), int(ny), float(lx), float(ly))
    values = np.array([float(line) for line in lines[2:]])
    if values.size != grid.nx * grid.ny:
        raise FieldError(
            f"'{path}' holds {values.size} values, expected {grid.nx * grid.ny}",
            kind="shape-mismatch", path=str(path),
        )
    return ScalarField(grid, values.reshape(grid.shape))


def read_h_series(path: Path) -> BoundaryVorticity:
    columns, table = read_csv(Path(path))
    if columns[:2] != ["t", "h"] or len(table) < 2:
        raise FieldError(f"'{path}' is not a (t, h) table", kind="shape-mismatch", path=str(path))
    times, values = table[:, 0], table[:, 1]
    steps = np.diff(times)
    dt = float(np.mean(steps))
    if not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise FieldError(f"'{path}' is not sampled on uniform time nodes", kind="shape-mismatch", path=str(path))
    return BoundaryVorticity(float(times[0]), dt, values)
