"""
The truncated tensor algebra T_{d,k}.

An element is a TensorSequence holding one dense numpy array per level
0..k, level l having shape (d,)*l. Coefficients live either in exact
rationals (object arrays of fractions.Fraction) or in float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from numbers import Integral, Rational
from typing import Any, Iterator, List, Sequence, Tuple, Union

import numpy as np

from src.pathsig.errors import (
    ConstantTermError,
    FieldError,
    NonFiniteValueError,
    NotGroupElementError,
    ShapeError,
    SpaceMismatchError,
    WordError,
)
from src.pathsig.words import Word, shuffles, words_of_length

Coefficient = Union[Fraction, float]

# Tolerance used when a float-field scalar must equal 0 or 1.
SCALAR_TOLERANCE = 1e-12


class CoefficientField(Enum):
    RATIONAL = "rational"
    FLOAT64 = "float64"

    @classmethod
    def from_name(cls, name: str) -> CoefficientField:
        try:
            return cls(name.strip().lower())
        except ValueError:
            choices = ", ".join(f.value for f in cls)
            raise FieldError(f"Unknown coefficient field '{name}'. Expected one of: {choices}") from None

    @property
    def is_exact(self) -> bool:
        return self is CoefficientField.RATIONAL

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(object) if self.is_exact else np.dtype(np.float64)

    def coerce(self, value: Any) -> Coefficient:
        """
        Converts a scalar into this field.

        Rationals accept integers, Fractions and 'p/q' strings; floats are
        only accepted when they hold an integer, so inexact values never
        leak into exact computations unnoticed.
        """
        if self is CoefficientField.FLOAT64:
            if isinstance(value, str):
                value = _to_fraction(value)
            try:
                return float(value)
            except (TypeError, ValueError, OverflowError) as e:
                raise FieldError(f"Cannot represent {value!r} as a float64 coefficient: {e}") from e
        return _to_fraction(value)

    def reciprocal(self, n: int) -> Coefficient:
        return self.coerce(Fraction(1, n))

    def array(self, values: Any) -> np.ndarray:
        """Builds a new array of this field from nested sequences or another array."""
        if self is CoefficientField.FLOAT64:
            try:
                return np.array(values, dtype=np.float64)
            except (TypeError, ValueError) as e:
                raise FieldError(f"Cannot build a float64 array: {e}") from e

        raw = np.array(values, dtype=object)
        if raw.ndim == 0:
            return np.array(self.coerce(raw.item()), dtype=object)
        out = np.empty(raw.shape, dtype=object)
        for index, value in np.ndenumerate(raw):
            out[index] = self.coerce(value)
        return out

    def zeros(self, shape: Tuple[int, ...]) -> np.ndarray:
        if self.is_exact:
            return np.full(shape, Fraction(0), dtype=object)
        return np.zeros(shape, dtype=np.float64)

    def scalar_equals(self, value: Coefficient, target: int) -> bool:
        if self.is_exact:
            return value == target
        return abs(float(value) - target) <= SCALAR_TOLERANCE


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, bool):
        raise FieldError(f"Booleans are not rational coefficients: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Integral):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value) or not float(value).is_integer():
            raise FieldError(
                f"Float {value!r} is not an exact rational coefficient; pass a Fraction or a 'p/q' string"
            )
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise FieldError(f"Cannot parse '{value}' as a rational: {e}") from e
    raise FieldError(f"Unsupported rational coefficient {value!r} of type {type(value).__name__}")


@dataclass(frozen=True)
class TensorAlgebraSpace:
    """The ambient space T_{d,k} over a coefficient field."""
    dimension: int
    truncation_level: int
    field: CoefficientField = CoefficientField.RATIONAL

    def __post_init__(self) -> None:
        for name in ("dimension", "truncation_level"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, Integral) or value < 1:
                raise ShapeError(f"TensorAlgebraSpace: {name} must be a positive integer, got {value!r}")
        if not isinstance(self.field, CoefficientField):
            raise FieldError(f"TensorAlgebraSpace: unknown field {self.field!r}")

    @property
    def coordinate_count(self) -> int:
        d, k = self.dimension, self.truncation_level
        if d == 1:
            return k + 1
        return (d ** (k + 1) - 1) // (d - 1)

    def level_shape(self, level: int) -> Tuple[int, ...]:
        return (self.dimension,) * level

    def words(self, level: int) -> Iterator[Word]:
        return words_of_length(self.dimension, level)

    def with_dimension(self, dimension: int) -> TensorAlgebraSpace:
        return replace(self, dimension=dimension)

    def with_field(self, field: CoefficientField) -> TensorAlgebraSpace:
        return replace(self, field=field)

    def zero(self) -> TensorSequence:
        return zero(self)

    def one(self) -> TensorSequence:
        return one(self)

    def __str__(self) -> str:
        return f"T_{{{self.dimension},{self.truncation_level}}}[{self.field.value}]"


class TensorSequence:
    """
    An element of T_{d,k}. Immutable: the level arrays are marked read-only.

    The constructor takes ownership of the arrays it is given; use
    from_levels() to build an element from arbitrary nested data.
    """
    __slots__ = ("parent", "levels")

    def __init__(self, parent: TensorAlgebraSpace, levels: Sequence[Any]):
        if len(levels) != parent.truncation_level + 1:
            raise ShapeError(
                f"{parent} needs {parent.truncation_level + 1} levels, got {len(levels)}"
            )
        checked: List[np.ndarray] = []
        for level_index, level in enumerate(levels):
            arr = np.asarray(level)
            if arr.dtype != parent.field.dtype:
                arr = parent.field.array(arr)
            expected = parent.level_shape(level_index)
            if arr.shape != expected:
                raise ShapeError(f"Level {level_index} of {parent} must have shape {expected}, got {arr.shape}")
            arr.setflags(write=False)
            checked.append(arr)
        self.parent = parent
        self.levels: Tuple[np.ndarray, ...] = tuple(checked)

    @classmethod
    def from_levels(cls, parent: TensorAlgebraSpace, levels: Sequence[Any]) -> TensorSequence:
        return cls(parent, [parent.field.array(level) for level in levels])

    @property
    def constant_term(self) -> Coefficient:
        return self.levels[0][()]

    def get_entry(self, word: Sequence[int]) -> Coefficient:
        return get_entry(self, word)

    def flatten(self) -> np.ndarray:
        return flatten(self)

    def __add__(self, other: TensorSequence) -> TensorSequence:
        return add(self, other)

    def __sub__(self, other: TensorSequence) -> TensorSequence:
        return sub(self, other)

    def __neg__(self) -> TensorSequence:
        return neg(self)

    def __mul__(self, other: Any) -> TensorSequence:
        if isinstance(other, TensorSequence):
            return mul(self, other)
        return scale(other, self)

    def __rmul__(self, other: Any) -> TensorSequence:
        return scale(other, self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TensorSequence):
            return NotImplemented
        return self.parent == other.parent and all(
            np.array_equal(a, b) for a, b in zip(self.levels, other.levels)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        shown = ", ".join(str(level.tolist()) for level in self.levels[:3])
        suffix = ", ..." if len(self.levels) > 3 else ""
        return f"TensorSequence({self.parent}, [{shown}{suffix}])"


def _check_same_space(x: TensorSequence, y: TensorSequence, operation: str) -> TensorAlgebraSpace:
    if x.parent != y.parent:
        raise SpaceMismatchError(f"Cannot {operation} an element of {x.parent} with an element of {y.parent}")
    return x.parent


def zero(space: TensorAlgebraSpace) -> TensorSequence:
    return TensorSequence(space, [space.field.zeros(space.level_shape(i)) for i in range(space.truncation_level + 1)])


def one(space: TensorAlgebraSpace) -> TensorSequence:
    levels = [space.field.zeros(space.level_shape(i)) for i in range(space.truncation_level + 1)]
    levels[0][()] = space.field.coerce(1)
    return TensorSequence(space, levels)


def homogeneous(space: TensorAlgebraSpace, tensor: Any, level: int) -> TensorSequence:
    """The element supported only on the given level."""
    if not 0 <= level <= space.truncation_level:
        raise ShapeError(f"Level {level} is outside 0..{space.truncation_level}")
    levels = [space.field.zeros(space.level_shape(i)) for i in range(space.truncation_level + 1)]
    levels[level] = space.field.array(tensor)
    return TensorSequence(space, levels)


def add(x: TensorSequence, y: TensorSequence) -> TensorSequence:
    space = _check_same_space(x, y, "add")
    return TensorSequence(space, [a + b for a, b in zip(x.levels, y.levels)])


def sub(x: TensorSequence, y: TensorSequence) -> TensorSequence:
    space = _check_same_space(x, y, "subtract")
    return TensorSequence(space, [a - b for a, b in zip(x.levels, y.levels)])


def neg(x: TensorSequence) -> TensorSequence:
    return TensorSequence(x.parent, [-a for a in x.levels])


def scale(c: Any, x: TensorSequence) -> TensorSequence:
    c = x.parent.field.coerce(c)
    return TensorSequence(x.parent, [c * a for a in x.levels])


def mul(x: TensorSequence, y: TensorSequence) -> TensorSequence:
    """
    Truncated tensor product: level l of the result is the sum over i+j=l of
    x^(i) (x) y^(j). Anything above the truncation level is dropped.
    """
    space = _check_same_space(x, y, "multiply")
    levels = []
    for level in range(space.truncation_level + 1):
        acc = space.field.zeros(space.level_shape(level))
        for i in range(level + 1):
            acc = acc + np.multiply.outer(x.levels[i], y.levels[level - i])
        levels.append(acc)
    return TensorSequence(space, levels)


def _without_constant(x: TensorSequence) -> TensorSequence:
    levels = list(x.levels)
    levels[0] = x.parent.field.zeros(())
    return TensorSequence(x.parent, levels)


def _require_group_element(g: TensorSequence, operation: str) -> None:
    if not g.parent.field.scalar_equals(g.constant_term, 1):
        raise NotGroupElementError(
            f"Cannot take the {operation} of an element that is not a group element "
            f"(level-0 entry is {g.constant_term}, expected 1)"
        )


def exp(x: TensorSequence) -> TensorSequence:
    """Sum of x^i / i! for i = 0..k; finite because the algebra is truncated."""
    space = x.parent
    if not space.field.scalar_equals(x.constant_term, 0):
        raise ConstantTermError(f"exp needs a zero constant term, got {x.constant_term}")
    x = _without_constant(x)
    result = one(space)
    term = one(space)
    for i in range(1, space.truncation_level + 1):
        term = scale(space.field.reciprocal(i), mul(term, x))
        result = add(result, term)
    return result


def log(g: TensorSequence) -> TensorSequence:
    _require_group_element(g, "logarithm")
    space = g.parent
    y = _without_constant(g)
    result = zero(space)
    term = y
    for i in range(1, space.truncation_level + 1):
        coefficient = space.field.reciprocal(i) * (1 if i % 2 == 1 else -1)
        result = add(result, scale(coefficient, term))
        term = mul(term, y)
    return result


def inverse(g: TensorSequence) -> TensorSequence:
    """Group inverse through the finite Neumann series of g - 1."""
    _require_group_element(g, "inverse")
    space = g.parent
    y = _without_constant(g)
    result = one(space)
    term = one(space)
    for i in range(1, space.truncation_level + 1):
        term = mul(term, y)
        result = add(result, term if i % 2 == 0 else neg(term))
    return result


def _validate_word(space: TensorAlgebraSpace, word: Sequence[int]) -> Tuple[int, ...]:
    if len(word) > space.truncation_level:
        raise WordError(f"Word {tuple(word)} is longer than the truncation level {space.truncation_level}")
    for letter in word:
        if isinstance(letter, bool) or not isinstance(letter, Integral) or not 1 <= letter <= space.dimension:
            raise WordError(f"Letter {letter!r} of word {tuple(word)} is outside 1..{space.dimension}")
    return tuple(int(letter) - 1 for letter in word)


def _entry(t: TensorSequence, word: Sequence[int]) -> Coefficient:
    return t.levels[len(word)][tuple(letter - 1 for letter in word)]


def get_entry(t: TensorSequence, word: Sequence[int]) -> Coefficient:
    index = _validate_word(t.parent, word)
    value = t.levels[len(index)][index]
    return value if t.parent.field.is_exact else float(value)


def flatten(t: TensorSequence) -> np.ndarray:
    """Levels 0..k concatenated, each level in lexicographic word order."""
    return np.concatenate([level.ravel() for level in t.levels])


def unflatten(space: TensorAlgebraSpace, vector: Any) -> TensorSequence:
    """Inverse of flatten()."""
    values = space.field.array(vector)
    if values.shape != (space.coordinate_count,):
        raise ShapeError(f"{space} has {space.coordinate_count} coordinates, got a vector of shape {values.shape}")
    levels = []
    offset = 0
    for level in range(space.truncation_level + 1):
        size = space.dimension ** level
        levels.append(values[offset:offset + size].reshape(space.level_shape(level)).copy())
        offset += size
    return TensorSequence(space, levels)


def approx_equal(x: TensorSequence, y: TensorSequence, rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> bool:
    space = _check_same_space(x, y, "compare")
    if space.field.is_exact:
        return x == y
    a, b = flatten(x), flatten(y)
    return bool(np.all(np.abs(a - b) <= abs_tol + rel_tol * np.maximum(np.abs(a), np.abs(b))))


def convert(t: TensorSequence, field: CoefficientField) -> TensorSequence:
    """
    Re-expresses t over another field. Rational to float rounds every entry;
    float to rational is exact (each double is a dyadic rational).
    """
    if t.parent.field is field:
        return t
    space = t.parent.with_field(field)
    if not field.is_exact:
        return TensorSequence(space, [level.astype(np.float64) for level in t.levels])
    levels = []
    for level in t.levels:
        out = np.empty(level.shape, dtype=object)
        for index, value in np.ndenumerate(level):
            if not math.isfinite(value):
                raise NonFiniteValueError(f"Cannot convert non-finite entry {value} to a rational")
            out[index] = Fraction(float(value))
        levels.append(out)
    return TensorSequence(space, levels)


def _close(field: CoefficientField, a: Coefficient, b: Coefficient, rel_tol: float, abs_tol: float) -> bool:
    if field.is_exact:
        return a == b
    return abs(a - b) <= abs_tol + rel_tol * max(abs(a), abs(b))


def is_group_like(t: TensorSequence, rel_tol: float = 1e-9, abs_tol: float = 1e-12) -> bool:
    """
    Checks membership in the free nilpotent group G_{d,k}: unit constant term
    and S_u * S_v = sum of S_w over the shuffles w of u and v, for all
    nonempty u, v with |u| + |v| <= k.
    """
    space = t.parent
    field = space.field
    if not field.scalar_equals(t.constant_term, 1):
        return False
    k = space.truncation_level
    for len_u in range(1, k // 2 + 1):
        for len_v in range(len_u, k - len_u + 1):
            for u in space.words(len_u):
                for v in space.words(len_v):
                    lhs = _entry(t, u) * _entry(t, v)
                    rhs = sum((_entry(t, w) for w in shuffles(u, v)), field.coerce(0))
                    if not _close(field, lhs, rhs, rel_tol, abs_tol):
                        return False
    return True
