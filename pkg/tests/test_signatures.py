from fractions import Fraction as F
from math import comb

import numpy as np
import pytest

from src.pathsig.core_tensors import core_axis, core_monomial
from src.pathsig.errors import NonFiniteValueError, ShapeError, SpaceMismatchError
from src.pathsig.signatures import (
    Algorithm,
    GeometryType,
    PathSpec,
    check_spline_regularity,
    congruence,
    sample_path,
    sig,
    sig_axis,
    sig_linear,
    sig_poly,
    sig_pwln_chen,
    sig_pwln_congruence,
    sig_quadrature_oracle,
    sig_spline,
)
from src.pathsig.tensor_algebra import (
    CoefficientField,
    TensorAlgebraSpace,
    TensorSequence,
    approx_equal,
    exp,
    flatten,
    homogeneous,
    inverse,
    is_group_like,
    mul,
    scale,
)

RATIONAL = CoefficientField.RATIONAL
FLOAT64 = CoefficientField.FLOAT64

POLY_COEF = [[1, 2], [3, 4]]
SMOOTH_SPLINE = [[1, 1, 3, -1], [0, 1, 2, 5]]


@pytest.fixture
def t23():
    return TensorAlgebraSpace(2, 3, RATIONAL)


@pytest.fixture
def poly_levels():
    level3 = np.empty((2, 2, 2), dtype=object)
    level3[0, 0, 0] = F(9, 2)
    level3[1, 0, 0] = F(166, 15)
    level3[0, 1, 0] = F(311, 30)
    level3[1, 1, 0] = F(383, 15)
    level3[0, 0, 1] = F(151, 15)
    level3[1, 0, 1] = F(743, 30)
    level3[0, 1, 1] = F(116, 5)
    level3[1, 1, 1] = F(343, 6)
    return [1, [3, 7], [[F(9, 2), F(61, 6)], [F(65, 6), F(49, 2)]], level3]


def random_integer_matrix(rng, d, m, bound=5):
    return rng.integers(-bound, bound + 1, size=(d, m)).tolist()


def split_polynomial(coef):
    """
    Coefficients of the two halves of t -> sum_j coef[:, j] t^(j+1), each
    re-parameterized on [0, 1] and started at the origin.
    """
    a = [[F(x) for x in row] for row in coef]
    degree = len(a[0])
    first = [[row[j] / 2 ** (j + 1) for j in range(degree)] for row in a]
    second = [
        [sum(row[j - 1] * comb(j, i) / F(2 ** j) for j in range(i, degree + 1)) for i in range(1, degree + 1)]
        for row in a
    ]
    return first, second


def reverse_polynomial(coef):
    """Coefficients of s -> X(1 - s) - X(1)."""
    a = [[F(x) for x in row] for row in coef]
    degree = len(a[0])
    return [
        [sum(row[j - 1] * comb(j, i) * (-1) ** i for j in range(i, degree + 1)) for i in range(1, degree + 1)]
        for row in a
    ]


def test_axis_signature(t23):
    g = sig(t23, PathSpec(GeometryType.AXIS))
    assert g == sig_axis(t23)
    assert g.levels[1].tolist() == [1, 1]
    assert g.levels[2].tolist() == [[F(1, 2), 1], [0, F(1, 2)]]
    assert g.get_entry((1, 1, 2)) == F(1, 2)
    assert g.get_entry((1, 2, 2)) == F(1, 2)
    assert g.get_entry((2, 1, 2)) == 0


def test_poly_signature(t23, poly_levels):
    g = sig(t23, PathSpec(GeometryType.POLY, POLY_COEF))
    assert g == TensorSequence.from_levels(t23, poly_levels)


def test_linear_signature_is_exponential(t23):
    assert sig_linear(t23, [2, F(-1, 3)]) == exp(homogeneous(t23, [2, F(-1, 3)], 1))
    with pytest.raises(ShapeError):
        sig_linear(t23, [1, 2, 3])


def test_single_column_paths_agree(t23):
    column = [[F(3, 2)], [-2]]
    expected = sig_linear(t23, [F(3, 2), -2])
    assert sig_pwln_chen(t23, column) == expected
    assert sig_pwln_congruence(t23, column) == expected
    assert sig_poly(t23, column) == expected


def test_chen_with_identity_is_axis(t23):
    assert sig_pwln_chen(t23, [[1, 0], [0, 1]]) == sig_axis(t23)


def test_chen_and_congruence_agree_exactly():
    rng = np.random.default_rng(20240501)
    for _ in range(100):
        d, m = rng.integers(2, 7, size=2)
        k = int(rng.integers(1, 5))
        space = TensorAlgebraSpace(int(d), k, RATIONAL)
        coef = random_integer_matrix(rng, int(d), int(m))
        assert sig_pwln_chen(space, coef) == sig_pwln_congruence(space, coef), (d, m, k, coef)


@pytest.mark.parametrize("d, m, k", [(6, 8, 4), (3, 20, 3), (10, 3, 4)])
def test_chen_and_congruence_agree_in_float(d, m, k):
    rng = np.random.default_rng(d * 100 + m)
    space = TensorAlgebraSpace(d, k, FLOAT64)
    coef = rng.integers(-20, 21, size=(d, m)).astype(float)
    chen = flatten(sig_pwln_chen(space, coef))
    cong = flatten(sig_pwln_congruence(space, coef))
    assert np.allclose(chen, cong, rtol=1e-9, atol=1e-12 * np.max(np.abs(chen)))


def test_congruence_with_identity_returns_core(t23):
    core = core_monomial(t23)
    assert congruence([[1, 0], [0, 1]], core, t23) == core


def test_congruence_level_two_is_a_c_at():
    space = TensorAlgebraSpace(2, 2, RATIONAL)
    a = np.array([[F(1), F(2)], [F(3), F(4)]], dtype=object)
    core = core_monomial(space)
    expected = a.dot(core.levels[2]).dot(a.T)
    assert congruence(a, core, space).levels[2].tolist() == expected.tolist()


def test_congruence_rejects_mismatches(t23):
    with pytest.raises(ShapeError):
        congruence([[1, 0, 0], [0, 1, 0]], core_axis(t23), t23)
    with pytest.raises(SpaceMismatchError):
        congruence([[1, 0], [0, 1]], core_axis(TensorAlgebraSpace(2, 2, RATIONAL)), t23)
    with pytest.raises(SpaceMismatchError):
        congruence([[1, 0], [0, 1]], core_axis(t23.with_field(FLOAT64)), t23)


def test_sig_dispatches_pwln_algorithms(t23):
    coef = [[1, -2, 3], [0, 4, F(1, 2)]]
    chen = sig(t23, PathSpec(GeometryType.PWLN, coef, algorithm=Algorithm.CHEN))
    cong = sig(t23, PathSpec(GeometryType.PWLN, coef, algorithm=Algorithm.CONGRUENCE))
    assert chen == cong


@pytest.mark.parametrize("spec", [
    PathSpec(GeometryType.AXIS, [[1], [2]]),
    PathSpec(GeometryType.PWLN),
    PathSpec(GeometryType.POLY, [[1, 2, 3]]),
    PathSpec(GeometryType.SPLINE, SMOOTH_SPLINE),
    PathSpec(GeometryType.SPLINE, SMOOTH_SPLINE, [2, 1]),
    PathSpec(GeometryType.SPLINE, SMOOTH_SPLINE, [2, 2], regularity=-1),
])
def test_path_spec_validation(t23, spec):
    with pytest.raises(ShapeError):
        sig(t23, spec)


def test_rational_paths_reject_inexact_floats(t23):
    with pytest.raises(ValueError):
        sig_pwln_chen(t23, [[0.5, 1], [0, 1]])


@pytest.mark.parametrize("spec", [
    PathSpec(GeometryType.AXIS),
    PathSpec(GeometryType.PWLN, [[1, -2, 0], [3, 1, -1], [0, 2, 2]]),
    PathSpec(GeometryType.POLY, [[1, 2, -1], [0, 3, 1], [2, 0, 1]]),
    PathSpec(GeometryType.SPLINE, [[1, 1, 3, -1], [0, 1, 2, 5], [1, 0, 0, 1]], [2, 2]),
])
def test_signatures_satisfy_shuffle_identity(spec):
    space = TensorAlgebraSpace(3, 4, RATIONAL)
    assert is_group_like(sig(space, spec))


def test_chen_identity_for_segments(t23):
    coef = [[1, -2, 3, 0], [2, 1, -1, 5]]
    left = [row[:2] for row in coef]
    right = [row[2:] for row in coef]
    assert sig_pwln_congruence(t23, coef) == mul(sig_pwln_congruence(t23, left), sig_pwln_congruence(t23, right))


def test_chen_identity_for_polynomials():
    space = TensorAlgebraSpace(2, 4, RATIONAL)
    coef = [[1, 2, -1], [3, 4, 2]]
    first, second = split_polynomial(coef)
    assert sig_poly(space, coef) == mul(sig_poly(space, first), sig_poly(space, second))


def test_time_reversal_pwln(t23):
    coef = np.array([[1, -2, 3], [2, 1, -1]])
    reversed_coef = (-coef[:, ::-1]).tolist()
    assert sig_pwln_chen(t23, reversed_coef) == inverse(sig_pwln_chen(t23, coef.tolist()))


def test_time_reversal_poly(t23):
    assert sig_poly(t23, reverse_polynomial(POLY_COEF)) == inverse(sig_poly(t23, POLY_COEF))


@pytest.mark.parametrize("factor", [F(3, 2), -2])
def test_scaling_multiplies_level_l_by_factor_to_the_l(t23, factor):
    g = sig_poly(t23, POLY_COEF)
    scaled = sig_poly(t23, [[factor * x for x in row] for row in POLY_COEF])
    assert scaled.constant_term == 1
    for level in range(1, 4):
        assert scaled.levels[level].tolist() == (g.levels[level] * factor ** level).tolist()


def test_spline_with_one_piece_is_poly(t23):
    assert sig_spline(t23, POLY_COEF, [2]) == sig_poly(t23, POLY_COEF)


def test_spline_of_degree_one_pieces_is_pwln(t23):
    coef = [[1, -2, 3], [2, 1, -1]]
    assert sig_spline(t23, coef, [1, 1, 1]) == sig_pwln_chen(t23, coef)


def test_spline_matches_quadrature():
    space = TensorAlgebraSpace(2, 3, FLOAT64)
    b1 = np.array(SMOOTH_SPLINE, dtype=float)[:, :2]
    b2 = np.array(SMOOTH_SPLINE, dtype=float)[:, 2:]

    def point(t):
        if t <= 0.5:
            s = 2 * t
            return b1 @ [s, s * s]
        s = 2 * t - 1
        return b1.sum(axis=1) + b2 @ [s, s * s]

    oracle = sig_quadrature_oracle(space, point, 4096)
    exact = sig_spline(space, SMOOTH_SPLINE, [2, 2])
    assert approx_equal(exact, oracle, rel_tol=0, abs_tol=1e-4)


def test_spline_regularity_violations(t23):
    assert check_spline_regularity(t23, SMOOTH_SPLINE, [2, 2], 1) == []
    assert check_spline_regularity(t23, SMOOTH_SPLINE, [2, 2], 2) == [(1, 2)]
    kinked = [[1, 1, 3, -1], [0, 1, 1, 5]]
    assert check_spline_regularity(t23, kinked, [2, 2], 1) == [(1, 1)]
    assert check_spline_regularity(t23, [[1, 1, 1], [0, 0, 1]], [1, 1, 1], 1) == [(2, 1)]


def test_spline_warns_on_irregular_knots(t23, capsys):
    kinked = [[1, 1, 3, -1], [0, 1, 1, 5]]
    g = sig_spline(t23, kinked, [2, 2], regularity=1)
    captured = capsys.readouterr()
    assert "Warning: spline derivatives of order 1 do not match at knot 1" in captured.err
    assert captured.out == ""
    # coefficients are used as given
    assert g == sig_spline(t23, kinked, [2, 2])


def test_spline_smooth_knots_do_not_warn(t23, capsys):
    sig_spline(t23, SMOOTH_SPLINE, [2, 2], regularity=1)
    assert capsys.readouterr().err == ""


@pytest.mark.parametrize("chords", [1, 7])
def test_quadrature_is_exact_for_lines(chords):
    space = TensorAlgebraSpace(2, 4, FLOAT64)
    oracle = sig_quadrature_oracle(space, lambda t: [2.0 * t, -0.5 * t], chords)
    assert approx_equal(oracle, sig_linear(space, [2.0, -0.5]), rel_tol=1e-12, abs_tol=1e-14)


def test_quadrature_converges_to_poly():
    space = TensorAlgebraSpace(2, 3, FLOAT64)
    exact = flatten(sig_poly(space, POLY_COEF))

    def point(t):
        return [t + 2 * t * t, 3 * t + 4 * t * t]

    errors = {n: np.max(np.abs(flatten(sig_quadrature_oracle(space, point, n)) - exact)) for n in (512, 1024)}
    assert errors[1024] <= 1e-4
    assert errors[1024] < errors[512]


def test_quadrature_parallel_sampling_matches_sequential():
    space = TensorAlgebraSpace(2, 3, FLOAT64)

    def point(t):
        return [np.sin(t), np.cos(3 * t)]

    sequential = sig_quadrature_oracle(space, point, 200)
    parallel = sig_quadrature_oracle(space, point, 200, pure=True, workers=4)
    assert sequential == parallel


def test_quadrature_rejects_bad_input():
    with pytest.raises(SpaceMismatchError):
        sig_quadrature_oracle(TensorAlgebraSpace(2, 2, RATIONAL), lambda t: [t, t], 10)
    float_space = TensorAlgebraSpace(2, 2, FLOAT64)
    with pytest.raises(NonFiniteValueError):
        sig_quadrature_oracle(float_space, lambda t: [t, np.nan], 10)
    with pytest.raises(ShapeError):
        sig_quadrature_oracle(float_space, lambda t: [t, t, t], 10)
    with pytest.raises(ShapeError):
        sample_path(lambda t: [t], 0)


def test_float_scaling_by_scalar():
    space = TensorAlgebraSpace(2, 3, FLOAT64)
    g = sig_pwln_chen(space, [[1.0, 2.0], [0.5, -1.0]])
    assert approx_equal(scale(2.0, g) - g, g)
