"""Text formats: matrix literals, CSV matrices and samples, JSON reports, TSV curves."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .fieldsim import Grid, GridSample

FLOAT_FMT = "%.17g"


def parse_matrix(text: str) -> np.ndarray:
    """``"a,b;c,d"`` literal, or a path to a CSV file."""
    text = str(text).strip()
    path = Path(text)
    if path.suffix.lower() in (".csv", ".txt") or (path.exists() and path.is_file()):
        return read_matrix_csv(path)
    rows = [r for r in text.split(";") if r.strip()]
    if not rows:
        raise ValidationError("empty matrix literal")
    try:
        M = [[float(v) for v in r.split(",")] for r in rows]
    except ValueError as exc:
        raise ValidationError(f"cannot parse matrix literal {text!r}") from exc
    if len({len(r) for r in M}) != 1:
        raise ValidationError(f"ragged matrix literal {text!r}")
    return np.array(M)


def parse_vector(text: str) -> np.ndarray:
    M = parse_matrix(text)
    if min(M.shape) != 1:
        raise ValidationError(f"expected a vector, got shape {M.shape}")
    return M.ravel()


def read_matrix_csv(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"file not found: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    try:
        M = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"non-numeric entry in {path}") from exc
    if M.ndim != 2:
        raise ValidationError(f"ragged rows in {path}")
    return M


def write_matrix_csv(M, path) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(M, dtype=float)), delimiter=",", fmt=FLOAT_FMT)


def write_tsv(path, header, columns) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    np.savetxt(path, np.column_stack(cols), delimiter="\t", fmt=FLOAT_FMT, header="\t".join(header), comments="")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=False)


def write_json(report: dict, path) -> None:
    Path(path).write_text(dumps(report) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON in {path}: {exc}") from exc


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def write_sample(sample: GridSample, path, model: dict | None = None) -> Path:
    """Sample rows to CSV plus ``<path>.json`` with seed, grid and model."""
    write_matrix_csv(sample.values, path)
    side = sidecar_path(path)
    write_json(
        {
            "seed": sample.seed,
            "range_dim": sample.range_dim,
            "n_samples": sample.n_samples,
            "grid": None if sample.grid is None else sample.grid.points,
            "model": model,
            "meta": sample.meta,
        },
        side,
    )
    return side


def read_sample(path) -> GridSample:
    meta = read_json(sidecar_path(path))
    values = read_matrix_csv(path)
    grid = None if meta.get("grid") is None else Grid(meta["grid"])
    return GridSample(grid, int(meta["range_dim"]), values, int(meta["seed"]), meta.get("meta", {}))
