"""
Path recovery: find coefficients whose signature equals a target.

The forward map a -> sig(a) is polynomial of degree <= k in the m*d
coefficients. Instead of solving that system symbolically we minimize the
flattened residual with damped Gauss-Newton (Levenberg-Marquardt) steps on a
central-difference Jacobian, from several seeded starting points.
"""
from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, List, Optional, Sequence

import numpy as np

from src.pathsig.core_tensors import core_axis, core_monomial
from src.pathsig.errors import NonFiniteValueError, NotGroupElementError, ShapeError
from src.pathsig.signatures import congruence, sig_spline
from src.pathsig.tensor_algebra import (
    CoefficientField,
    TensorAlgebraSpace,
    TensorSequence,
    convert,
    flatten,
)

INITIAL_DAMPING = 1e-3
MAX_DAMPING = 1e8
DAMPING_FACTOR = 3.0
MIN_STEP_NORM = 1e-12
# Converged solutions closer than this (relative to the coefficient scale) count as one.
SOLUTION_SEPARATION = 1e-6


class CoreKind(Enum):
    AXIS = "axis"
    MONOMIAL = "monomial"
    SPLINE = "spline"


@dataclass
class RecoveryOptions:
    max_iterations: int = 200
    residual_tolerance: float = 1e-9
    restarts: int = 20
    rng_seed: int = 0
    initial_guess: Optional[np.ndarray] = None
    workers: int = 1
    verbose: bool = False

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError(f"RecoveryOptions: restarts must be at least 1, got {self.restarts}")
        if not self.residual_tolerance > 0:
            raise ValueError(f"RecoveryOptions: residual_tolerance must be positive, got {self.residual_tolerance}")
        if self.max_iterations < 0:
            raise ValueError(f"RecoveryOptions: max_iterations must be non-negative, got {self.max_iterations}")


@dataclass
class RecoveryResult:
    coef: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    restart_index: int
    seed: int = 0
    distinct_solutions: int = 0
    status: str = ""


@dataclass
class RecoveryProblem:
    """
    A target signature together with the path family to search in.

    Rational targets are converted to float64; the target must be a group
    element (level-0 entry 1).
    """
    target: TensorSequence
    segment_count: int
    core: CoreKind = CoreKind.AXIS
    options: RecoveryOptions = field(default_factory=RecoveryOptions)
    composition: Optional[List[int]] = None

    def __post_init__(self) -> None:
        if self.target.parent.field.is_exact:
            self.target = convert(self.target, CoefficientField.FLOAT64)
        if not self.target.parent.field.scalar_equals(self.target.constant_term, 1):
            raise NotGroupElementError(
                f"Target is not a group element: level-0 entry is {self.target.constant_term}, expected 1"
            )
        if self.segment_count < 1:
            raise ShapeError(f"segment_count must be at least 1, got {self.segment_count}")
        if self.core is CoreKind.SPLINE:
            if not self.composition or sum(self.composition) != self.segment_count:
                raise ShapeError(
                    f"Spline recovery needs a composition summing to {self.segment_count}, got {self.composition}"
                )

    @property
    def space(self) -> TensorAlgebraSpace:
        return self.target.parent

    @property
    def dimension(self) -> int:
        return self.space.dimension

    @property
    def residual_length(self) -> int:
        return self.space.coordinate_count

    @cached_property
    def core_tensor(self) -> Optional[TensorSequence]:
        core_space = self.space.with_dimension(self.segment_count)
        if self.core is CoreKind.AXIS:
            return core_axis(core_space)
        if self.core is CoreKind.MONOMIAL:
            return core_monomial(core_space)
        return None

    @cached_property
    def target_vector(self) -> np.ndarray:
        return flatten(self.target)

    def signature_of(self, a: np.ndarray) -> TensorSequence:
        if self.core is CoreKind.SPLINE:
            return sig_spline(self.space, a, self.composition)
        return congruence(a, self.core_tensor, self.space)


def _check_coefficients(problem: RecoveryProblem, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    expected = (problem.dimension, problem.segment_count)
    if a.shape != expected:
        raise ShapeError(f"Coefficient matrix must have shape {expected}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteValueError("Coefficient matrix has non-finite entries")
    return a


def residual(problem: RecoveryProblem, a: np.ndarray) -> np.ndarray:
    """flatten(sig(a) - S); entry 0 is identically zero."""
    a = _check_coefficients(problem, a)
    return flatten(problem.signature_of(a)) - problem.target_vector


def jacobian(problem: RecoveryProblem, a: np.ndarray) -> np.ndarray:
    """
    Central-difference Jacobian of the residual. Column c is the derivative
    with respect to a.ravel()[c], i.e. entries of a in row-major order.
    """
    a = _check_coefficients(problem, a)
    flat = a.ravel()
    columns = []
    for c in range(flat.size):
        h = max(1e-6, 1e-7 * (1.0 + abs(flat[c])))
        forward = flat.copy()
        backward = flat.copy()
        forward[c] += h
        backward[c] -= h
        r_plus = residual(problem, forward.reshape(a.shape))
        r_minus = residual(problem, backward.reshape(a.shape))
        if not (np.all(np.isfinite(r_plus)) and np.all(np.isfinite(r_minus))):
            raise NonFiniteValueError(f"Non-finite residual while probing coefficient {c}")
        columns.append((r_plus - r_minus) / (2.0 * h))
    return np.column_stack(columns)


def solve_damped_least_squares(
    problem: RecoveryProblem,
    a0: np.ndarray,
    restart_index: int = 0,
) -> RecoveryResult:
    """
    Levenberg-Marquardt on the residual starting from a0.

    Each iteration solves (J^T J + lam I) delta = -J^T r. A step is accepted
    when it lowers the residual norm (then lam /= 3); otherwise lam *= 3 and
    the step is retried, giving up once lam passes its ceiling.
    """
    options = problem.options
    a = _check_coefficients(problem, a0).copy()
    r = residual(problem, a)
    norm = float(np.linalg.norm(r))
    damping = INITIAL_DAMPING
    iterations = 0
    status = "max_iterations"

    while True:
        if norm <= options.residual_tolerance:
            status = "converged"
            break
        if iterations >= options.max_iterations:
            break
        iterations += 1
        J = jacobian(problem, a)
        gradient = J.T @ r
        normal = J.T @ J
        accepted = False
        step_norm = 0.0
        while damping <= MAX_DAMPING:
            try:
                delta = np.linalg.solve(normal + damping * np.eye(normal.shape[0]), -gradient)
            except np.linalg.LinAlgError:
                delta = None
            if delta is not None and np.all(np.isfinite(delta)):
                candidate = a + delta.reshape(a.shape)
                r_candidate = residual(problem, candidate)
                norm_candidate = float(np.linalg.norm(r_candidate))
                if np.isfinite(norm_candidate) and norm_candidate < norm:
                    a, r, norm = candidate, r_candidate, norm_candidate
                    step_norm = float(np.linalg.norm(delta))
                    damping = damping / DAMPING_FACTOR
                    accepted = True
                    break
            damping *= DAMPING_FACTOR
        if not accepted:
            status = "stalled: damping limit reached without decrease"
            break
        if step_norm <= MIN_STEP_NORM:
            status = "converged" if norm <= options.residual_tolerance else "stalled: step below minimum"
            break

    converged = norm <= options.residual_tolerance
    if converged:
        status = "converged"
    return RecoveryResult(
        coef=a,
        residual_norm=norm,
        iterations=iterations,
        converged=converged,
        restart_index=restart_index,
        seed=options.rng_seed,
        status=status,
    )


def initial_scale(target: TensorSequence) -> float:
    """
    Size of the box random starts are drawn from: |level 1|_inf, or, for
    closed paths, the largest (l! |level l|_inf)^(1/l).
    """
    scale = float(np.max(np.abs(target.levels[1])))
    if scale > 0:
        return scale
    factorial = 1.0
    for level in range(2, target.parent.truncation_level + 1):
        factorial *= level
        magnitude = float(np.max(np.abs(target.levels[level])))
        scale = max(scale, (factorial * magnitude) ** (1.0 / level))
    return scale


def _select_best(results: Sequence[RecoveryResult]) -> RecoveryResult:
    return min(results, key=lambda r: (not r.converged, r.residual_norm, r.restart_index))


def _count_distinct(results: Sequence[RecoveryResult]) -> int:
    solutions: List[np.ndarray] = []
    for result in results:
        if not result.converged:
            continue
        tolerance = SOLUTION_SEPARATION * (1.0 + float(np.max(np.abs(result.coef))))
        if all(np.max(np.abs(result.coef - other)) > tolerance for other in solutions):
            solutions.append(result.coef)
    return len(solutions)


def _run_starts(
    problem: RecoveryProblem,
    starts: Sequence[np.ndarray],
    first_index: int,
    vprint: Callable[..., None],
) -> List[RecoveryResult]:
    def run(offset: int) -> RecoveryResult:
        result = solve_damped_least_squares(problem, starts[offset], restart_index=first_index + offset)
        vprint(
            f"Restart {result.restart_index}: residual {result.residual_norm:.3e} "
            f"after {result.iterations} iterations ({result.status})"
        )
        return result

    if problem.options.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=problem.options.workers) as pool:
            # map keeps input order, so the merge is deterministic
            return list(pool.map(run, range(len(starts))))
    return [run(offset) for offset in range(len(starts))]


def recover(
    target: TensorSequence,
    segment_count: int,
    core: CoreKind = CoreKind.AXIS,
    options: Optional[RecoveryOptions] = None,
    composition: Optional[List[int]] = None,
) -> RecoveryResult:
    """
    Multi-start path recovery.

    An explicit initial guess is tried first (restart index 0) and returned
    if it converges. Otherwise `restarts` matrices with entries uniform in
    [-1, 1] times initial_scale(target) are drawn from the seeded generator
    and solved; the best result wins (converged first, then lowest residual,
    then lowest restart index).

    Returns:
        The best RecoveryResult; converged=False signals failure.
    """
    problem = RecoveryProblem(target, segment_count, core, options or RecoveryOptions(), composition)
    options = problem.options
    if options.verbose:
        vprint = lambda *args, **kwargs: print(*args, file=sys.stderr, **kwargs)
    else:
        vprint = lambda *args, **kwargs: None

    results: List[RecoveryResult] = []
    first_index = 0
    if options.initial_guess is not None:
        vprint("Trying the initial guess...")
        results.extend(_run_starts(problem, [np.asarray(options.initial_guess, dtype=np.float64)], 0, vprint))
        first_index = 1
        if results[0].converged:
            results[0].distinct_solutions = 1
            return results[0]

    rng = np.random.default_rng(options.rng_seed)
    scale = initial_scale(problem.target)
    shape = (problem.dimension, problem.segment_count)
    starts = [rng.uniform(-1.0, 1.0, size=shape) * scale for _ in range(options.restarts)]
    vprint(f"Running {len(starts)} restarts (seed {options.rng_seed}, scale {scale:.3g})...")
    results.extend(_run_starts(problem, starts, first_index, vprint))

    best = _select_best(results)
    best.distinct_solutions = _count_distinct(results)
    return best
