"""CSV and JSON readers/writers for point clouds, lifted clouds and diagrams."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .geometry import LiftedCloud
from .persistence import PersistenceDiagram


def _fmt(v: float) -> str:
    return repr(float(v))


def _read_rows(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
        vals = []
        for col, cell in enumerate(row, start=1):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: column {col}: not a number: {cell!r}") from None
        data.append(vals)
    return path, header, np.array(data, dtype=float).reshape(len(data), len(header))


def write_points_csv(path, points) -> None:
    X = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(f"x{i}" for i in range(X.shape[1])) + "\n")
        for row in X:
            fh.write(",".join(map(_fmt, row)) + "\n")


def read_points_csv(path) -> np.ndarray:
    path, header, A = _read_rows(path)
    if not header or any(h != f"x{i}" for i, h in enumerate(header)):
        raise ValidationError(f"{path}:1: header must be x0,x1,...")
    if len(A) == 0:
        raise ValidationError(f"{path}: no points")
    return A


def _lifted_header(n: int):
    return [f"x{i}" for i in range(n)] + [f"m{a}{b}" for a in range(n) for b in range(n)] + ["weight"]


def write_lifted_csv(path, lc: LiftedCloud) -> None:
    n = lc.points.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(_lifted_header(n)) + "\n")
        M = lc.matrices.reshape(len(lc), -1)
        for x, m, w in zip(lc.points, M, lc.weights):
            fh.write(",".join(map(_fmt, np.concatenate([x, m, [w]]))) + "\n")


def read_lifted_csv(path) -> LiftedCloud:
    path, header, A = _read_rows(path)
    n = sum(1 for h in header if h.startswith("x"))
    if header != _lifted_header(n):
        raise ValidationError(f"{path}:1: header must be x0..,m00..,weight for ambient dimension {n}")
    if len(A) == 0:
        raise ValidationError(f"{path}: no points")
    return LiftedCloud(A[:, :n], A[:, n:n + n * n].reshape(-1, n, n), A[:, -1], None)


def write_values_csv(path, values, name: str = "value") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"index,{name}\n")
        for i, v in enumerate(np.asarray(values, dtype=float)):
            fh.write(f"{i},{_fmt(v)}\n")


def write_diagram_json(path, D: PersistenceDiagram) -> None:
    Path(path).write_text(D.to_json() + "\n")


def read_diagram_json(path) -> PersistenceDiagram:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return PersistenceDiagram.from_json(text)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
