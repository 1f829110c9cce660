import itertools
from fractions import Fraction

from hypothesis import given
import hypothesis.strategies as st
from scipy.optimize import linprog

from pcsp.exact import (check_farkas, check_obstruction, column_hnf, integer_feasible, nonneg_feasible,
                        solve_rational)


def matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(len(B))) for j in range(len(B[0]))] for i in range(len(A))]


def det(M):
    if len(M) == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * det([row[:j] + row[j + 1:] for row in M[1:]]) for j in range(len(M)))


def test_simplex_examples():
    r = nonneg_feasible([[1, 1]], [1])
    assert r.feasible and sum(r.x) == 1 and min(r.x) >= 0
    r = nonneg_feasible([[1, 1]], [-1])
    assert not r.feasible and check_farkas([[1, 1]], [-1], r.farkas)
    # x + y = 1 and x + y = 2
    r = nonneg_feasible([[1, 1], [1, 1]], [1, 2])
    assert not r.feasible and check_farkas([[1, 1], [1, 1]], [1, 2], r.farkas)
    r = nonneg_feasible([[2, 0], [0, 3]], [1, 1])
    assert r.x == [Fraction(1, 2), Fraction(1, 3)]


def test_integer_examples():
    assert not integer_feasible([[2]], [1]).feasible
    r = integer_feasible([[2, 3]], [1])
    assert r.feasible and 2 * r.x[0] + 3 * r.x[1] == 1
    r = integer_feasible([[2, 4], [1, 1]], [3, 1])
    assert not r.feasible and check_obstruction([[2, 4], [1, 1]], [3, 1], r.obstruction)
    r = integer_feasible([[1, 1], [1, 1]], [0, 1])
    assert not r.feasible and check_obstruction([[1, 1], [1, 1]], [0, 1], r.obstruction)


def test_solve_rational():
    assert solve_rational([[1, 1], [2, 2]], [1, 3]) is None
    z = solve_rational([[1, 2], [3, 4]], [5, 6])
    assert z == [-4, Fraction(9, 2)]


small = st.integers(-3, 3)


def systems(max_rows=3, max_cols=4):
    return st.integers(1, max_rows).flatmap(lambda m: st.integers(1, max_cols).flatmap(lambda n: st.tuples(
        st.lists(st.lists(small, min_size=n, max_size=n), min_size=m, max_size=m),
        st.lists(small, min_size=m, max_size=m))))


@given(systems())
def test_hnf_shape(sys):
    A, _ = sys
    H, U, pivots = column_hnf(A)
    assert matmul(A, U) == H
    assert abs(det(U)) == 1
    r = len(pivots)
    for t, i in enumerate(pivots):
        assert H[i][t] > 0 and all(H[k][t] == 0 for k in range(i))
    assert all(row[j] == 0 for row in H for j in range(r, len(U)))


@given(systems())
def test_lp_matches_scipy(sys):
    A, b = sys
    res = nonneg_feasible(A, b)
    ref = linprog([0] * len(A[0]), A_eq=A, b_eq=b, bounds=[(0, None)] * len(A[0]), method="highs")
    assert res.feasible == (ref.status == 0)
    if res.feasible:
        assert all(sum(a * x for a, x in zip(row, res.x)) == bi for row, bi in zip(A, b))
    else:
        assert check_farkas(A, b, res.farkas)


@given(systems(max_rows=2, max_cols=3))
def test_integer_matches_box_search(sys):
    A, b = sys
    res = integer_feasible(A, b)
    n = len(A[0])
    found = any(all(sum(a * x for a, x in zip(row, xs)) == bi for row, bi in zip(A, b))
                for xs in itertools.product(range(-6, 7), repeat=n))
    if found:
        assert res.feasible
    if res.feasible:
        assert all(sum(a * x for a, x in zip(row, res.x)) == bi for row, bi in zip(A, b))
    else:
        assert check_obstruction(A, b, res.obstruction)
