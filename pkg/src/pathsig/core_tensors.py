"""
Core tensors: signatures of canonical paths over m letters.

Every piecewise linear path is a linear image of the axis path and every
polynomial path is a linear image of the moment path, so their signatures
are congruences of these two cores (see signatures.congruence).

Both cores are built from their closed forms, vectorized over numpy open
grids so that only the broadcast result is materialized.
"""
import math
from fractions import Fraction
from typing import List

import numpy as np

from src.pathsig.tensor_algebra import CoefficientField, TensorAlgebraSpace, TensorSequence


def _integer_dtype(bound: int) -> type:
    # object arrays hold Python ints once int64 could wrap
    return np.int64 if bound <= np.iinfo(np.int64).max else object


def _letter_grids(m: int, level: int, dtype: type = np.int64) -> List[np.ndarray]:
    # grids[j] varies along axis j only and holds the 1-based letter w_{j+1}
    return [
        np.arange(1, m + 1).astype(dtype).reshape((1,) * j + (m,) + (1,) * (level - j - 1))
        for j in range(level)
    ]


def _ratio_array(field: CoefficientField, numerator: np.ndarray, denominator: np.ndarray, shape) -> np.ndarray:
    numerator = np.broadcast_to(numerator, shape)
    denominator = np.broadcast_to(denominator, shape)
    if not field.is_exact:
        return (numerator / denominator).astype(np.float64)
    out = np.empty(shape, dtype=object)
    for index in np.ndindex(*shape):
        out[index] = Fraction(int(numerator[index]), int(denominator[index]))
    return out


def axis_core_level(m: int, level: int, field: CoefficientField) -> np.ndarray:
    """
    Level `level` of the axis path e_1 * e_2 * ... * e_m.

    The entry at w is 1 / prod(block lengths!) when w is weakly increasing,
    the blocks being the maximal runs of equal letters, and 0 otherwise.
    """
    shape = (m,) * level
    if level == 0:
        return field.array(1)
    # the denominator is a product of block factorials, at most level!
    dtype = _integer_dtype(math.factorial(level))
    grids = _letter_grids(m, level, dtype)
    increasing = np.ones((1,) * level, dtype=bool)
    run = np.ones((1,) * level, dtype=dtype)
    denominator = np.ones((1,) * level, dtype=dtype)
    for j in range(1, level):
        increasing = increasing & (grids[j] >= grids[j - 1])
        # a run of length L contributes 1 * 2 * ... * L = L!
        run = np.where(grids[j] == grids[j - 1], run + 1, 1)
        denominator = denominator * run
    numerator = np.broadcast_to(increasing, shape).astype(dtype)
    return _ratio_array(field, numerator, denominator, shape)


def monomial_core_level(m: int, level: int, field: CoefficientField) -> np.ndarray:
    """
    Level `level` of the moment path t -> (t, t^2, ..., t^m).

    The entry at w is prod_i w_i / (w_1 + ... + w_i).
    """
    shape = (m,) * level
    if level == 0:
        return field.array(1)
    # running sums are at most i * m, so the denominator is at most m^level * level!
    dtype = _integer_dtype(m ** level * math.factorial(level))
    grids = _letter_grids(m, level, dtype)
    numerator = np.ones((1,) * level, dtype=dtype)
    denominator = np.ones((1,) * level, dtype=dtype)
    running = np.zeros((1,) * level, dtype=dtype)
    for grid in grids:
        running = running + grid
        numerator = numerator * grid
        denominator = denominator * running
    return _ratio_array(field, numerator, denominator, shape)


def core_axis(space: TensorAlgebraSpace) -> TensorSequence:
    """Signature of the axis path over space.dimension letters."""
    m = space.dimension
    return TensorSequence(space, [axis_core_level(m, level, space.field) for level in range(space.truncation_level + 1)])


def core_monomial(space: TensorAlgebraSpace) -> TensorSequence:
    """Signature of the moment path over space.dimension letters."""
    m = space.dimension
    return TensorSequence(space, [monomial_core_level(m, level, space.field) for level in range(space.truncation_level + 1)])
