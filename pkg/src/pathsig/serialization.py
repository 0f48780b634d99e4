"""
Wire formats: tensor sequences and recovery results as JSON, coefficient
matrices as CSV, and the one-entry-per-line flat vector.
"""
from __future__ import annotations

import csv
import json
import math
from fractions import Fraction
from typing import TYPE_CHECKING, Any, Dict, List, Optional

import numpy as np

from src.pathsig.errors import FieldError, SerializationError, ShapeError
from src.pathsig.tensor_algebra import CoefficientField, TensorAlgebraSpace, TensorSequence, flatten

if TYPE_CHECKING:
    from src.pathsig.recovery import RecoveryResult


def _encode_scalar(field: CoefficientField, value: Any) -> Any:
    if field.is_exact:
        return str(value)  # Fraction normalizes to lowest terms, "p" for integers
    return float(value)


def _encode_level(field: CoefficientField, level: np.ndarray) -> Any:
    if level.ndim == 0:
        return _encode_scalar(field, level[()])
    if level.ndim == 1:
        return [_encode_scalar(field, value) for value in level]
    return [_encode_level(field, sub) for sub in level]


def sequence_to_dict(t: TensorSequence) -> Dict[str, Any]:
    return {
        "dimension": t.parent.dimension,
        "level": t.parent.truncation_level,
        "field": t.parent.field.value,
        "levels": [_encode_level(t.parent.field, level) for level in t.levels],
    }


def sequence_to_json(t: TensorSequence, indent: Optional[int] = None) -> str:
    return json.dumps(sequence_to_dict(t), indent=indent)


def _decode_scalar(field: CoefficientField, value: Any) -> Any:
    if field.is_exact:
        if isinstance(value, float) and not value.is_integer():
            raise SerializationError(f"Rational entries must be 'p/q' strings or integers, got {value!r}")
        try:
            return field.coerce(value)
        except FieldError as e:
            raise SerializationError(str(e)) from e
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SerializationError(f"float64 entries must be JSON numbers, got {value!r}")
    try:
        result = float(value)
    except OverflowError:
        result = math.inf
    if not math.isfinite(result):
        raise SerializationError(f"float64 entries must be finite, got {value!r}")
    return result


def _decode_level(space: TensorAlgebraSpace, level_index: int, data: Any) -> np.ndarray:
    shape = space.level_shape(level_index)
    out = space.field.zeros(shape)

    def fill(prefix: tuple, node: Any, depth: int) -> None:
        if depth == level_index:
            if isinstance(node, list):
                raise SerializationError(f"Level {level_index} is nested deeper than {level_index}")
            out[prefix] = _decode_scalar(space.field, node)
            return
        if not isinstance(node, list) or len(node) != space.dimension:
            raise SerializationError(
                f"Level {level_index} must be nested {level_index} deep with {space.dimension} entries per axis"
            )
        for i, child in enumerate(node):
            fill(prefix + (i,), child, depth + 1)

    fill((), data, 0)
    return out


def _header_int(data: Dict[str, Any], key: str) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise SerializationError(f"'{key}' must be a JSON integer, got {value!r}")
    return value


def sequence_from_dict(data: Dict[str, Any]) -> TensorSequence:
    if not isinstance(data, dict):
        raise SerializationError("A tensor sequence must be a JSON object")
    try:
        field = CoefficientField.from_name(str(data["field"]))
        space = TensorAlgebraSpace(_header_int(data, "dimension"), _header_int(data, "level"), field)
        raw_levels = data["levels"]
    except KeyError as e:
        raise SerializationError(f"Missing field {e} in tensor sequence") from e
    except (FieldError, ShapeError, TypeError, ValueError) as e:
        raise SerializationError(f"Invalid tensor sequence header: {e}") from e
    if not isinstance(raw_levels, list) or len(raw_levels) != space.truncation_level + 1:
        raise SerializationError(f"Expected {space.truncation_level + 1} levels")
    return TensorSequence(space, [_decode_level(space, i, level) for i, level in enumerate(raw_levels)])


def sequence_from_json(text: str) -> TensorSequence:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SerializationError(f"Malformed JSON: {e}") from e
    return sequence_from_dict(data)


def read_sequence(path: str) -> TensorSequence:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return sequence_from_json(f.read())
    except (IOError, UnicodeDecodeError) as e:
        raise SerializationError(f"Cannot read tensor sequence file {path}: {e}") from e


def format_flat(t: TensorSequence) -> str:
    """One flattened coordinate per line."""
    return "\n".join(str(_encode_scalar(t.parent.field, v)) for v in flatten(t))


def _parse_csv_entry(field: CoefficientField, text: str, row: int, column: int) -> Any:
    entry = text.strip()
    if not entry:
        raise SerializationError(f"Empty entry at row {row}, column {column}")
    try:
        value = Fraction(entry)
    except (ValueError, ZeroDivisionError):
        raise SerializationError(f"Cannot parse '{entry}' at row {row}, column {column}") from None
    if field.is_exact:
        if "/" not in entry and value.denominator != 1:
            raise SerializationError(
                f"Decimal '{entry}' at row {row}, column {column} is not an integer; use 'p/q' for rational coefficients"
            )
        return value
    try:
        result = float(value)
    except OverflowError:
        result = math.inf
    if not math.isfinite(result):
        raise SerializationError(f"Non-finite entry '{entry}' at row {row}, column {column}")
    return result


def parse_coefficient_csv(text: str, field: CoefficientField) -> np.ndarray:
    """Parses a d x m coefficient matrix; the field decides the parsing."""
    rows: List[List[Any]] = []
    for row_number, row in enumerate(csv.reader(text.splitlines()), start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        rows.append([_parse_csv_entry(field, cell, row_number, c) for c, cell in enumerate(row, start=1)])
    if not rows:
        raise SerializationError("Coefficient CSV is empty")
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise SerializationError(f"Coefficient CSV rows have different lengths: {sorted(widths)}")
    return field.array(rows)


def read_coefficient_csv(path: str, field: CoefficientField) -> np.ndarray:
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            return parse_coefficient_csv(f.read(), field)
    except (IOError, UnicodeDecodeError) as e:
        raise SerializationError(f"Cannot read coefficient file {path}: {e}") from e


def result_to_dict(result: RecoveryResult) -> Dict[str, Any]:
    return {
        "coef": np.asarray(result.coef, dtype=np.float64).tolist(),
        "residual_norm": float(result.residual_norm),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "restart_index": int(result.restart_index),
        "seed": int(result.seed),
        "distinct_solutions": int(result.distinct_solutions),
        "status": result.status,
    }


def result_to_json(result: RecoveryResult, indent: Optional[int] = None) -> str:
    return json.dumps(result_to_dict(result), indent=indent)
