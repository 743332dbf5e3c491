from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings as hsettings, strategies as st

from crn_core import stoichiometric_matrix
from decomposition import default_orientation, l_o_matrix
from exact_linalg import (
    DimensionError, RationalMatrix, hstack, in_column_space, kernel_basis, rank, rref,
    same_column_space, spans_direct_sum, to_rational,
)


@st.composite
def int_matrices(draw, max_rows=5, max_cols=6):
    rows = draw(st.integers(1, max_rows))
    cols = draw(st.integers(1, max_cols))
    data = draw(st.lists(st.lists(st.integers(-3, 3), min_size=cols, max_size=cols),
                         min_size=rows, max_size=rows))
    return RationalMatrix(data)


def _sympy(m: RationalMatrix) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(v.numerator, v.denominator) for v in row] for row in m.tolist()])


def _frac(x) -> Fraction:
    return Fraction(int(x.p), int(x.q))


def test_decimal_literals_are_exact():
    assert to_rational("0.36") == Fraction(9, 25)
    assert to_rational("9.4") == Fraction(47, 5)
    assert to_rational("-1/2") == Fraction(-1, 2)
    assert to_rational(3) == Fraction(3)


def test_floats_rejected():
    with pytest.raises(TypeError):
        to_rational(0.36)
    with pytest.raises(ValueError):
        to_rational("abc")


@given(int_matrices())
@hsettings(max_examples=60, deadline=None)
def test_rref_matches_sympy(m):
    r, pivots = rref(m)
    expected, expected_pivots = _sympy(m).rref()
    assert pivots == list(expected_pivots)
    assert [[_frac(x) for x in expected.row(i)] for i in range(m.rows)] == r.tolist()


@given(int_matrices())
@hsettings(max_examples=60, deadline=None)
def test_kernel_is_annihilated_and_has_right_width(m):
    k = kernel_basis(m)
    assert k.rows == m.cols
    assert k.cols == m.cols - rank(m)
    assert rank(m) == _sympy(m).rank()
    assert (m @ k).is_zero()
    assert rank(k) == k.cols


def test_empty_shapes():
    m = RationalMatrix([], row_labels=[], col_labels=["a", "b", "c"], shape=(0, 3))
    assert rank(m) == 0
    k = kernel_basis(m)
    assert k.shape == (3, 3)
    assert k.row_labels == ["a", "b", "c"]

    full = RationalMatrix([[1, 0], [0, 1]], ["x", "y"], ["a", "b"])
    assert kernel_basis(full).shape == (2, 0)


def test_spans_direct_sum():
    a = RationalMatrix([[1], [0], [0]], ["x", "y", "z"], ["a"])
    b = RationalMatrix([[0], [1], [0]], ["x", "y", "z"], ["b"])
    ab = RationalMatrix([[1], [1], [0]], ["x", "y", "z"], ["c"])
    assert spans_direct_sum([a, b])
    assert not spans_direct_sum([a, b, ab])
    assert spans_direct_sum([])


def test_blocks_in_permuted_rows_are_aligned():
    a = RationalMatrix([[1], [0]], ["x", "y"], ["a"])
    b = RationalMatrix([[1], [0]], ["y", "x"], ["b"])
    assert spans_direct_sum([a, b])


def test_mismatched_row_labels_raise():
    a = RationalMatrix([[1], [0]], ["x", "y"], ["a"])
    b = RationalMatrix([[1], [0]], ["x", "z"], ["b"])
    with pytest.raises(DimensionError) as err:
        spans_direct_sum([a, b])
    assert err.value.left == ["x", "y"]
    assert err.value.right == ["x", "z"]
    with pytest.raises(DimensionError):
        hstack([a, b])


def test_matmul_checks_inner_labels():
    a = RationalMatrix([[1, 2]], ["x"], ["p", "q"])
    b = RationalMatrix([[1], [1]], ["p", "r"], ["c"])
    with pytest.raises(DimensionError):
        a @ b


def test_column_space_helpers():
    m = RationalMatrix([[1, 0], [0, 1], [0, 0]], ["x", "y", "z"], ["a", "b"])
    assert in_column_space(m, [2, Fraction(1, 3), 0])
    assert not in_column_space(m, [0, 0, 1])
    flipped = RationalMatrix([[-1, 0], [0, 2], [0, 0]], ["x", "y", "z"], ["a", "b"])
    assert same_column_space(m, flipped)


def test_schmitz_kernel_supports(schmitz):
    o = default_orientation(schmitz)
    k = kernel_basis(l_o_matrix(schmitz, o))
    assert k.cols == 2
    supports = {frozenset(k.row_labels[i] for i in range(k.rows) if k[i, j] != 0) for j in range(k.cols)}
    assert supports == {frozenset({"R1", "R3", "R4"}), frozenset({"R5", "R6", "R7", "R8"})}
    assert rank(stoichiometric_matrix(schmitz)) == 5
