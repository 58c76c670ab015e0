"""Exact linear algebra and simplex tests against hand-solved instances."""

from fractions import Fraction

import pytest

from efgkit import lp

F = Fraction


def test_solve_linear_unique():
    A = [[F(2), F(1)], [F(1), F(3)]]
    b = [F(5), F(10)]
    x = lp.solve_linear(A, b)
    assert x == [F(1), F(3)]


def test_solve_linear_inconsistent():
    A = [[F(1), F(1)], [F(2), F(2)]]
    assert lp.solve_linear(A, [F(1), F(3)]) is None


def test_solve_linear_underdetermined_picks_a_solution():
    A = [[F(1), F(1), F(1)]]
    b = [F(6)]
    x = lp.solve_linear(A, b)
    assert x is not None
    assert sum(x) == F(6)


def test_nullspace():
    A = [[F(1), F(2), F(3)], [F(2), F(4), F(6)]]
    basis = lp.nullspace(A)
    assert len(basis) == 2
    for v in basis:
        assert all(sum(row[j] * v[j] for j in range(3)) == 0 for row in A)
    assert lp.matrix_rank(A) == 1


def test_left_nullspace():
    A = [[F(1), F(0)], [F(2), F(0)], [F(0), F(1)]]
    basis = lp.left_nullspace(A)
    assert len(basis) == 1
    y = basis[0]
    for j in range(2):
        assert sum(y[i] * A[i][j] for i in range(3)) == 0


def test_det():
    assert lp.det([[F(1), F(2)], [F(3), F(4)]]) == F(-2)
    assert lp.det([[F(2)]]) == F(2)
    assert lp.det([[F(1), F(2)], [F(2), F(4)]]) == F(0)
    # permutation parity
    A = [[F(0), F(1), F(0)], [F(0), F(0), F(1)], [F(1), F(0), F(0)]]
    assert lp.det(A) == F(1)


def test_lp_basic_max():
    # max x + y subject to x + 2y <= 4, 3x + y <= 6, x,y >= 0
    # optimum at intersection (8/5, 6/5), value 14/5
    res = lp.lp_solve([F(1), F(1)], A_ub=[[F(1), F(2)], [F(3), F(1)]],
                      b_ub=[F(4), F(6)], maximize=True)
    assert res.ok
    assert res.x == [F(8, 5), F(6, 5)]
    assert res.fun == F(14, 5)


def test_lp_equality_and_bounds():
    # min x - y with x + y = 1, 0 <= y <= 1/3
    res = lp.lp_solve([F(1), F(-1)], A_eq=[[F(1), F(1)]], b_eq=[F(1)],
                      bounds=[(0, None), (0, F(1, 3))])
    assert res.ok
    assert res.x == [F(2, 3), F(1, 3)]
    assert res.fun == F(1, 3)


def test_lp_free_variable():
    # min x with x >= -5 expressed through a free variable and an inequality
    res = lp.lp_solve([F(1)], A_ub=[[F(-1)]], b_ub=[F(5)], bounds=[(None, None)])
    assert res.ok
    assert res.x == [F(-5)]


def test_lp_infeasible():
    res = lp.lp_solve([F(1)], A_eq=[[F(1)], [F(1)]], b_eq=[F(0), F(1)])
    assert res.status == "infeasible"
    assert not res.ok


def test_lp_unbounded():
    res = lp.lp_solve([F(1)], maximize=True, bounds=[(0, None)])
    assert res.status == "unbounded"


def test_lp_degenerate_does_not_cycle():
    # classic degenerate instance; Bland's rule must terminate
    c = [F(-3, 4), F(150), F(-1, 50), F(6)]
    A_ub = [[F(1, 4), F(-60), F(-1, 25), F(9)],
            [F(1, 2), F(-90), F(-1, 50), F(3)],
            [F(0), F(0), F(1), F(0)]]
    b_ub = [F(0), F(0), F(1)]
    res = lp.lp_solve(c, A_ub=A_ub, b_ub=b_ub)
    assert res.ok
    assert res.fun == F(-1, 20)


def test_linear_feasible():
    x = lp.linear_feasible(A_eq=[[F(1), F(1)]], b_eq=[F(1)],
                           A_ub=[[F(-1), F(0)]], b_ub=[F(-1, 4)], n_vars=2)
    assert x is not None
    assert x[0] + x[1] == 1 and x[0] >= F(1, 4) and min(x) >= 0
    assert lp.linear_feasible(A_eq=[[F(1), F(1)]], b_eq=[F(3)],
                              A_ub=[[F(1), F(0)], [F(0), F(1)]],
                              b_ub=[F(1), F(1)], n_vars=2) is None


def test_lp_exactness_on_awkward_rationals():
    # coefficients chosen so floating point would not be exact
    res = lp.lp_solve([F(1, 3), F(1, 7)], A_eq=[[F(1), F(1)]], b_eq=[F(1)])
    assert res.ok
    assert res.fun == F(1, 7)
    assert res.x == [F(0), F(1)]
