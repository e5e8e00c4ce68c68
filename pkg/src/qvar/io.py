"""CSV/JSON input and output.

Sequences are one complex sample per line as "re,im" (a bare "re" is read
as real).  Matrices are CSV with either N real columns or 2N interleaved
re,im columns, or JSON objects {"matrix": [[...]], "weights": [...]} whose
entries are scalars or [re, im] pairs.  All norms are emitted with 17
significant digits.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .lp_model import MatrixOperator, MeasureSpace
from .semigroups import GeneratorModel


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def _data_lines(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    for raw in text.splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line


def load_sequence(path) -> np.ndarray:
    """Complex samples, one per line as "re,im" or a bare real."""
    vals = []
    for line in _data_lines(path):
        parts = [p.strip() for p in line.split(",")]
        try:
            if len(parts) == 1:
                vals.append(complex(float(parts[0]), 0.0))
            elif len(parts) == 2:
                vals.append(complex(float(parts[0]), float(parts[1])))
            else:
                raise ValueError("expected 1 or 2 fields")
        except ValueError as exc:
            raise InputError(f"{path}: bad sequence line {line!r}: {exc}") from exc
    if not vals:
        raise InputError(f"{path}: no samples found")
    return np.asarray(vals, dtype=np.complex128)


def load_weights(path) -> np.ndarray:
    vals = []
    for line in _data_lines(path):
        for part in line.split(","):
            part = part.strip()
            if part:
                try:
                    vals.append(float(part))
                except ValueError as exc:
                    raise InputError(f"{path}: bad weight {part!r}") from exc
    if not vals:
        raise InputError(f"{path}: no weights found")
    return np.asarray(vals)


def _entry_to_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise InputError(f"complex entries must be [re, im], got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v), 0.0)


def _load_matrix_json(path):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(obj, dict) or "matrix" not in obj:
        raise InputError(f'{path}: expected an object with a "matrix" field')
    rows = obj["matrix"]
    mat = np.array(
        [[_entry_to_complex(v) for v in row] for row in rows], dtype=np.complex128
    )
    weights = np.asarray(obj["weights"], dtype=np.float64) if "weights" in obj else None
    return mat, weights


def _load_matrix_csv(path):
    rows = []
    for line in _data_lines(path):
        fields = [p.strip() for p in line.split(",") if p.strip() != ""]
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise InputError(f"{path}: bad matrix line {line!r}") from exc
    if not rows:
        raise InputError(f"{path}: empty matrix")
    n = len(rows)
    widths = {len(r) for r in rows}
    if widths == {n}:
        return np.asarray(rows, dtype=np.float64).astype(np.complex128)
    if widths == {2 * n}:
        arr = np.asarray(rows, dtype=np.float64)
        return arr[:, 0::2] + 1j * arr[:, 1::2]
    raise InputError(
        f"{path}: expected {n} real or {2 * n} interleaved re,im columns per row"
    )


def load_matrix(path):
    """Square complex matrix from CSV or JSON; returns (matrix, weights)."""
    if str(path).endswith(".json"):
        return _load_matrix_json(path)
    return _load_matrix_csv(path), None


def load_operator(path, weights_path=None) -> MatrixOperator:
    """Operator from file; weights from JSON, a weights file, or uniform."""
    mat, weights = load_matrix(path)
    if weights_path is not None:
        weights = load_weights(weights_path)
    if weights is None:
        weights = np.full(mat.shape[0], 1.0 / mat.shape[0])
    return MatrixOperator(mat, MeasureSpace(weights))


def load_generator(path, weights_path=None) -> GeneratorModel:
    mat, weights = load_matrix(path)
    if weights_path is not None:
        weights = load_weights(weights_path)
    if weights is None:
        weights = np.full(mat.shape[0], 1.0 / mat.shape[0])
    return GeneratorModel(mat, MeasureSpace(weights))


def parse_kernel(text: str) -> dict:
    """Kernel string "0:0.5,1:0.25,-1:0.25" to an offset -> weight mapping.

    Values parse as Python complex literals (e.g. "1:0.1+0.2j").
    """
    out = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise InputError(f"bad kernel entry {chunk!r}; expected offset:value")
        off, val = chunk.split(":", 1)
        try:
            out[int(off)] = complex(val)
        except ValueError as exc:
            raise InputError(f"bad kernel entry {chunk!r}: {exc}") from exc
    if not out:
        raise InputError("empty kernel")
    return out


def parse_complex_list(text: str) -> np.ndarray:
    """Semicolon-separated complex values, e.g. "1;0.5+0.1j;0"."""
    vals = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            vals.append(complex(chunk))
        except ValueError as exc:
            raise InputError(f"bad complex value {chunk!r}") from exc
    if not vals:
        raise InputError("empty value list")
    return np.asarray(vals, dtype=np.complex128)


def parse_float_list(text: str):
    try:
        return [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise InputError(f"bad number list {text!r}") from exc


def parse_int_list(text: str):
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise InputError(f"bad integer list {text!r}") from exc


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        fields = []
        for v in row:
            if isinstance(v, float):
                fields.append(format_float(v))
            else:
                fields.append(str(v))
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def save_matrix_csv(path, mat: np.ndarray) -> None:
    """Interleaved re,im CSV, the same layout :func:`load_matrix` reads."""
    mat = np.asarray(mat, dtype=np.complex128)
    lines = []
    for row in mat:
        fields = []
        for v in row:
            fields.append(format_float(v.real))
            fields.append(format_float(v.imag))
        lines.append(",".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")
