"""
Signature constructors for axis, piecewise linear, polynomial and spline paths.

Piecewise linear paths have two algorithms: Chen (product of segment
exponentials) and congruence (the axis core transformed by the segment
matrix). Polynomial and spline paths always go through congruence with the
moment core.
"""
from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.pathsig.core_tensors import core_axis, core_monomial
from src.pathsig.errors import NonFiniteValueError, ShapeError, SpaceMismatchError
from src.pathsig.tensor_algebra import (
    CoefficientField,
    TensorAlgebraSpace,
    TensorSequence,
    mul,
    one,
)

Sampler = Callable[[float], Sequence[float]]


class GeometryType(Enum):
    AXIS = "axis"
    PWLN = "pwln"
    POLY = "poly"
    SPLINE = "spline"


class Algorithm(Enum):
    CHEN = "chen"
    CONGRUENCE = "congruence"


@dataclass
class PathSpec:
    """What sig() should build: the path family plus its coefficients."""
    geom_type: GeometryType
    coef: Optional[Any] = None
    composition: Optional[List[int]] = None
    regularity: int = 0
    algorithm: Algorithm = Algorithm.CHEN

    def validate(self, space: TensorAlgebraSpace) -> None:
        if self.geom_type is GeometryType.AXIS:
            if self.coef is not None:
                raise ShapeError("Axis paths take no coefficient matrix")
            return
        if self.coef is None:
            raise ShapeError(f"{self.geom_type.value} paths need a coefficient matrix")
        rows = np.shape(self.coef)[0] if np.ndim(self.coef) == 2 else None
        if rows != space.dimension:
            raise ShapeError(
                f"{self.geom_type.value} coefficient matrix must have {space.dimension} rows, got shape {np.shape(self.coef)}"
            )
        if self.geom_type is GeometryType.SPLINE:
            if self.composition is None:
                raise ShapeError("spline paths need a composition")
            _check_composition(self.composition, np.shape(self.coef)[1])
            if self.regularity < 0:
                raise ShapeError(f"regularity must be non-negative, got {self.regularity}")


def _as_matrix(space: TensorAlgebraSpace, coef: Any) -> np.ndarray:
    matrix = space.field.array(coef)
    if matrix.ndim != 2 or matrix.shape[0] != space.dimension:
        raise ShapeError(f"Coefficient matrix must be {space.dimension} x m, got shape {matrix.shape}")
    if matrix.shape[1] < 1:
        raise ShapeError("Coefficient matrix needs at least one column")
    return matrix


def _check_composition(composition: Sequence[int], columns: int) -> None:
    if len(composition) == 0 or any(int(c) < 1 for c in composition):
        raise ShapeError(f"Composition entries must be positive integers, got {list(composition)}")
    if sum(composition) != columns:
        raise ShapeError(f"Composition {list(composition)} sums to {sum(composition)}, but there are {columns} columns")


def _linear_levels(space: TensorAlgebraSpace, a: np.ndarray) -> List[Any]:
    levels: List[Any] = [space.field.array(1)]
    for level in range(1, space.truncation_level + 1):
        levels.append(np.multiply.outer(levels[-1], a * space.field.reciprocal(level)))
    return levels


def sig_linear(space: TensorAlgebraSpace, a: Any) -> TensorSequence:
    """Signature of the straight segment with increment a: level l is a^(x)l / l!."""
    vector = space.field.array(a)
    if vector.shape != (space.dimension,):
        raise ShapeError(f"Segment increment must have {space.dimension} entries, got shape {vector.shape}")
    return TensorSequence(space, _linear_levels(space, vector))


def _chen_step(space: TensorAlgebraSpace, levels: Sequence[Any], a: np.ndarray) -> List[Any]:
    # levels (x) exp(a), level by level in Horner form:
    # (((x0 a/l + x1) a/(l-1) + x2) ... ) a/1 + x_l
    scaled = [None] + [a * space.field.reciprocal(j) for j in range(1, space.truncation_level + 1)]
    result = [levels[0]]
    for level in range(1, space.truncation_level + 1):
        acc = levels[0]
        for i in range(1, level + 1):
            acc = np.multiply.outer(acc, scaled[level - i + 1]) + levels[i]
        result.append(acc)
    return result


def sig_pwln_chen(space: TensorAlgebraSpace, coef: Any) -> TensorSequence:
    """Product of exp(column) over the columns of coef, left to right."""
    matrix = _as_matrix(space, coef)
    levels: List[Any] = list(one(space).levels)
    for j in range(matrix.shape[1]):
        levels = _chen_step(space, levels, matrix[:, j])
    return TensorSequence(space, levels)


def congruence(coef: Any, core: TensorSequence, space: TensorAlgebraSpace) -> TensorSequence:
    """
    Applies the d x m matrix coef to every mode of every level of core.

    Modes are contracted one at a time: each np.tensordot consumes the
    leading letter of the core and appends a target letter at the end, so
    after l steps level l is back in (w_1, ..., w_l) order.
    """
    if core.parent.truncation_level != space.truncation_level or core.parent.field is not space.field:
        raise SpaceMismatchError(f"Core in {core.parent} cannot be transported to {space}")
    matrix = _as_matrix(space, coef)
    if matrix.shape[1] != core.parent.dimension:
        raise ShapeError(
            f"Coefficient matrix has {matrix.shape[1]} columns but the core has {core.parent.dimension} letters"
        )
    levels = [core.levels[0]]
    for level in range(1, space.truncation_level + 1):
        tensor = core.levels[level]
        for _ in range(level):
            tensor = np.tensordot(tensor, matrix, axes=([0], [1]))
        levels.append(tensor)
    return TensorSequence(space, levels)


def _core_space(space: TensorAlgebraSpace, m: int) -> TensorAlgebraSpace:
    return space.with_dimension(m)


def sig_pwln_congruence(space: TensorAlgebraSpace, coef: Any) -> TensorSequence:
    matrix = _as_matrix(space, coef)
    return congruence(matrix, core_axis(_core_space(space, matrix.shape[1])), space)


def sig_axis(space: TensorAlgebraSpace) -> TensorSequence:
    """The axis path e_1 * ... * e_d in T_{d,k}."""
    return core_axis(space)


def sig_poly(space: TensorAlgebraSpace, coef: Any) -> TensorSequence:
    """
    Signature of X(t) = sum_j coef[:, j] t^j on [0, 1], j = 1..m.

    There is no constant column; signatures do not see translations.
    """
    matrix = _as_matrix(space, coef)
    return congruence(matrix, core_monomial(_core_space(space, matrix.shape[1])), space)


def check_spline_regularity(
    space: TensorAlgebraSpace,
    coef: Any,
    composition: Sequence[int],
    regularity: int,
) -> List[Tuple[int, int]]:
    """
    Lists the (knot, derivative order) pairs where consecutive pieces do
    not match, each piece being parameterized on [0, 1].

    Order 0 always matches because pieces are chained by their increments.

    Args:
        space: Space whose field decides exact or tolerant comparison.
        coef: The d x m monomial coefficients of all pieces side by side.
        composition: Piece degrees, summing to m.
        regularity: Highest derivative order that must match.

    Returns:
        The violations, knots numbered from 1 (between piece 1 and 2).
    """
    matrix = _as_matrix(space, coef)
    _check_composition(composition, matrix.shape[1])
    blocks = _split_columns(matrix, composition)
    violations: List[Tuple[int, int]] = []
    for knot in range(1, len(blocks)):
        left, right = blocks[knot - 1], blocks[knot]
        for order in range(1, regularity + 1):
            if not _values_match(space.field, _derivative_at(left, order, 1), _derivative_at(right, order, 0)):
                violations.append((knot, order))
    return violations


def _split_columns(matrix: np.ndarray, composition: Sequence[int]) -> List[np.ndarray]:
    offsets = np.cumsum([0] + [int(c) for c in composition])
    return [matrix[:, offsets[p]:offsets[p + 1]] for p in range(len(composition))]


def _derivative_at(block: np.ndarray, order: int, t: int) -> np.ndarray:
    # column j-1 multiplies t^j; d^r/dt^r t^j = j!/(j-r)! t^(j-r)
    total = block[:, 0] * 0
    for j in range(order, block.shape[1] + 1):
        falling = 1
        for i in range(j - order + 1, j + 1):
            falling *= i
        total = total + block[:, j - 1] * (falling * t ** (j - order))
    return total


def _values_match(field: CoefficientField, a: np.ndarray, b: np.ndarray) -> bool:
    if field.is_exact:
        return bool(np.all(a == b))
    return bool(np.allclose(a.astype(np.float64), b.astype(np.float64), rtol=1e-9, atol=1e-12))


def sig_spline(space: TensorAlgebraSpace, coef: Any, composition: Sequence[int], regularity: int = 0) -> TensorSequence:
    """
    Chen product of the polynomial signatures of the pieces.

    With regularity > 0 the derivative matching at interior knots is only
    checked; violations print a warning and the coefficients are used as given.
    """
    if regularity < 0:
        raise ShapeError(f"regularity must be non-negative, got {regularity}")
    matrix = _as_matrix(space, coef)
    _check_composition(composition, matrix.shape[1])
    if regularity > 0:
        for knot, order in check_spline_regularity(space, matrix, composition, regularity):
            print(
                f"Warning: spline derivatives of order {order} do not match at knot {knot}",
                file=sys.stderr,
            )
    result = one(space)
    for block in _split_columns(matrix, composition):
        result = mul(result, sig_poly(space, block))
    return result


def sig(space: TensorAlgebraSpace, spec: PathSpec) -> TensorSequence:
    """Computes the truncated signature of the path described by spec."""
    spec.validate(space)
    if spec.geom_type is GeometryType.AXIS:
        return sig_axis(space)
    if spec.geom_type is GeometryType.PWLN:
        if spec.algorithm is Algorithm.CONGRUENCE:
            return sig_pwln_congruence(space, spec.coef)
        return sig_pwln_chen(space, spec.coef)
    if spec.geom_type is GeometryType.POLY:
        return sig_poly(space, spec.coef)
    if spec.geom_type is GeometryType.SPLINE:
        return sig_spline(space, spec.coef, spec.composition, spec.regularity)
    raise ShapeError(f"Unknown geometry type: {spec.geom_type!r}")


def sample_path(sampler: Sampler, chords: int, pure: bool = False, workers: Optional[int] = None) -> np.ndarray:
    """Evaluates sampler at chords + 1 equispaced times in [0, 1]; returns (chords + 1) x d."""
    if chords < 1:
        raise ShapeError(f"Need at least one chord, got {chords}")
    times = np.linspace(0.0, 1.0, chords + 1)
    if pure and workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(sampler, times))
    else:
        points = [sampler(t) for t in times]
    samples = np.array(points, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    if not np.all(np.isfinite(samples)):
        raise NonFiniteValueError("Sampler returned non-finite values")
    return samples


def sig_quadrature_oracle(
    space: TensorAlgebraSpace,
    sampler: Sampler,
    chords: int,
    pure: bool = False,
    workers: Optional[int] = None,
) -> TensorSequence:
    """
    Independent numerical signature: the path is replaced by the polygon
    through chords + 1 equispaced samples. Converges to the iterated
    integrals as chords grows.
    """
    if space.field.is_exact:
        raise SpaceMismatchError(f"The quadrature oracle needs a float64 space, got {space}")
    samples = sample_path(sampler, chords, pure=pure, workers=workers)
    if samples.shape[1] != space.dimension:
        raise ShapeError(f"Sampler returned points of dimension {samples.shape[1]}, expected {space.dimension}")
    return sig_pwln_chen(space, np.diff(samples, axis=0).T)
