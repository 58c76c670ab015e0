"""Exact rational linear algebra and linear programming.

Everything here works over fractions.Fraction: Gaussian elimination with
full pivoting for linear systems and nullspaces, and a two-phase primal
simplex with Bland's rule for linear programs.  Problem sizes in this
package are tiny (tens of variables), so clarity wins over sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

Vec = List[Fraction]
Mat = List[List[Fraction]]


def _frac_matrix(rows) -> Mat:
    return [[Fraction(x) for x in row] for row in rows]


def solve_linear(A, b) -> Optional[Vec]:
    """One exact solution of Ax = b, or None when inconsistent."""
    A = _frac_matrix(A)
    b = [Fraction(x) for x in b]
    m = len(A)
    n = len(A[0]) if m else 0
    aug = [A[i] + [b[i]] for i in range(m)]
    pivots = []
    row = 0
    for col in range(n):
        pivot = next((r for r in range(row, m) if aug[r][col] != 0), None)
        if pivot is None:
            continue
        aug[row], aug[pivot] = aug[pivot], aug[row]
        pv = aug[row][col]
        aug[row] = [x / pv for x in aug[row]]
        for r in range(m):
            if r != row and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * p for a, p in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    for r in range(row, m):
        if aug[r][n] != 0:
            return None
    x = [Fraction(0)] * n
    for r, col in enumerate(pivots):
        x[col] = aug[r][n]
    return x


def nullspace(A) -> List[Vec]:
    """Basis of {x : Ax = 0}."""
    A = _frac_matrix(A)
    m = len(A)
    n = len(A[0]) if m else 0
    if m == 0:
        return [[Fraction(i == j) for j in range(n)] for i in range(n)]
    red = [row[:] for row in A]
    pivots = []
    row = 0
    for col in range(n):
        pivot = next((r for r in range(row, m) if red[r][col] != 0), None)
        if pivot is None:
            continue
        red[row], red[pivot] = red[pivot], red[row]
        pv = red[row][col]
        red[row] = [x / pv for x in red[row]]
        for r in range(m):
            if r != row and red[r][col] != 0:
                factor = red[r][col]
                red[r] = [a - factor * p for a, p in zip(red[r], red[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def left_nullspace(A) -> List[Vec]:
    """Basis of {y : yᵀA = 0}."""
    A = _frac_matrix(A)
    if not A:
        return []
    transpose = [list(col) for col in zip(*A)]
    return nullspace(transpose)


def matrix_rank(A) -> int:
    A = _frac_matrix(A)
    if not A or not A[0]:
        return 0
    return len(A[0]) - len(nullspace(A))


def det(A) -> Fraction:
    """Exact determinant by fraction-free-ish elimination."""
    A = _frac_matrix(A)
    n = len(A)
    if any(len(row) != n for row in A):
        raise ValueError("determinant needs a square matrix")
    sign = 1
    out = Fraction(1)
    M = [row[:] for row in A]
    for col in range(n):
        pivot = next((r for r in range(col, n) if M[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            M[col], M[pivot] = M[pivot], M[col]
            sign = -sign
        pv = M[col][col]
        out *= pv
        for r in range(col + 1, n):
            if M[r][col] != 0:
                factor = M[r][col] / pv
                M[r] = [a - factor * p for a, p in zip(M[r], M[col])]
    return out * sign


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded
    x: Optional[Vec] = None
    fun: Optional[Fraction] = None

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


def _simplex(c: Vec, A: Mat, b: Vec):
    """min cᵀx s.t. Ax = b, x ≥ 0 via two-phase simplex, Bland's rule.

    Returns (status, x, objective)."""
    m, n = len(A), len(c)
    A = [row[:] for row in A]
    b = b[:]
    for i in range(m):
        if b[i] < 0:
            A[i] = [-x for x in A[i]]
            b[i] = -b[i]

    # tableau with artificial variables n..n+m-1
    T = [A[i] + [Fraction(int(j == i)) for j in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]

    def pivot(row, col):
        pv = T[row][col]
        T[row] = [x / pv for x in T[row]]
        for r in range(m):
            if r != row and T[r][col] != 0:
                factor = T[r][col]
                T[r] = [a - factor * p for a, p in zip(T[r], T[row])]
        basis[row] = col

    dead = [False] * m  # redundant rows discovered after phase 1

    def run_phase(cost: Vec, width: int) -> Fraction:
        # width limits which columns may enter; phase 2 passes n so the
        # artificial columns can never come back
        while True:
            # reduced costs via basis cost recomputation (small problems)
            y = [Fraction(0)] * width
            obj = Fraction(0)
            for r in range(m):
                if dead[r]:
                    continue
                cb = cost[basis[r]]
                if cb != 0:
                    obj += cb * T[r][-1]
                    for j in range(width):
                        y[j] += cb * T[r][j]
            entering = next((j for j in range(width)
                             if cost[j] - y[j] < 0), None)
            if entering is None:
                return obj
            best_row, best_ratio = None, None
            for r in range(m):
                if not dead[r] and T[r][entering] > 0:
                    ratio = T[r][-1] / T[r][entering]
                    if best_ratio is None or ratio < best_ratio or \
                            (ratio == best_ratio and basis[r] < basis[best_row]):
                        best_row, best_ratio = r, ratio
            if best_row is None:
                return None  # unbounded
            pivot(best_row, entering)

    phase1_cost = [Fraction(0)] * n + [Fraction(1)] * m
    obj1 = run_phase(phase1_cost, n + m)
    if obj1 is None or obj1 > 0:
        return "infeasible", None, None
    # drive leftover artificials out of the basis; a row that offers no
    # pivot column is redundant and is retired instead
    for r in range(m):
        if basis[r] >= n:
            col = next((j for j in range(n) if T[r][j] != 0), None)
            if col is not None:
                pivot(r, col)
            else:
                dead[r] = True
    phase2_cost = list(c) + [Fraction(0)] * m
    obj2 = run_phase(phase2_cost, n)
    if obj2 is None:
        return "unbounded", None, None
    x = [Fraction(0)] * n
    for r in range(m):
        if not dead[r] and basis[r] < n:
            x[basis[r]] = T[r][-1]
    value = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return "optimal", x, value


def lp_solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             bounds=None, maximize=False) -> LPResult:
    """Exact LP: optimize cᵀx subject to A_ub x ≤ b_ub and A_eq x = b_eq.

    bounds is a per-variable list of (lo, hi) with None meaning unbounded on
    that side; the default is (0, None) for every variable, scipy-style.
    """
    c = [Fraction(x) for x in c]
    n = len(c)
    A_ub = _frac_matrix(A_ub) if A_ub else []
    b_ub = [Fraction(x) for x in (b_ub or [])]
    A_eq = _frac_matrix(A_eq) if A_eq else []
    b_eq = [Fraction(x) for x in (b_eq or [])]
    if bounds is None:
        bounds = [(Fraction(0), None)] * n
    bounds = [(None if lo is None else Fraction(lo),
               None if hi is None else Fraction(hi)) for lo, hi in bounds]
    if maximize:
        c = [-x for x in c]

    # assemble standard form: each original variable becomes a shifted
    # nonneg variable (lo finite), a reflected one (hi finite only), or a
    # split pair (free); finite double bounds add a ub row.
    col_map = []  # per variable: ("shift", col, lo) | ("neg", col, hi) | ("free", col+, col-)
    std_cols = 0
    extra_ub = []  # (var index, width) for lo and hi both finite
    for i, (lo, hi) in enumerate(bounds):
        if lo is not None:
            col_map.append(("shift", std_cols, lo))
            std_cols += 1
            if hi is not None:
                extra_ub.append((i, hi - lo))
        elif hi is not None:
            col_map.append(("neg", std_cols, hi))
            std_cols += 1
        else:
            col_map.append(("free", std_cols, std_cols + 1))
            std_cols += 2

    def expand_row(row):
        out = [Fraction(0)] * std_cols
        shift = Fraction(0)
        for i, coeff in enumerate(row):
            if coeff == 0:
                continue
            kind = col_map[i]
            if kind[0] == "shift":
                out[kind[1]] += coeff
                shift += coeff * kind[2]
            elif kind[0] == "neg":
                out[kind[1]] -= coeff
                shift += coeff * kind[2]
            else:
                out[kind[1]] += coeff
                out[kind[2]] -= coeff
        return out, shift

    rows, rhs = [], []
    slacks = len(b_ub) + len(extra_ub)
    slack_at = 0
    total = std_cols + slacks

    def add_ub(row, bval):
        nonlocal slack_at
        expanded, shift = expand_row(row)
        full = expanded + [Fraction(0)] * slacks
        full[std_cols + slack_at] = Fraction(1)
        slack_at += 1
        rows.append(full)
        rhs.append(bval - shift)

    for row, bval in zip(A_ub, b_ub):
        add_ub(row, bval)
    for var, width in extra_ub:
        row = [Fraction(0)] * n
        row[var] = Fraction(1)
        add_ub(row, bounds[var][0] + width)
    for row, bval in zip(A_eq, b_eq):
        expanded, shift = expand_row(row)
        rows.append(expanded + [Fraction(0)] * slacks)
        rhs.append(bval - shift)

    c_std, c_shift = expand_row(c)
    c_std = c_std + [Fraction(0)] * slacks
    status, x_std, value = _simplex(c_std, rows, rhs) if rows else \
        _unconstrained(c_std, total)
    if status != "optimal":
        return LPResult(status)
    x = []
    for i in range(n):
        kind = col_map[i]
        if kind[0] == "shift":
            x.append(x_std[kind[1]] + kind[2])
        elif kind[0] == "neg":
            x.append(kind[2] - x_std[kind[1]])
        else:
            x.append(x_std[kind[1]] - x_std[kind[2]])
    fun = value + c_shift
    if maximize:
        fun = -fun
    return LPResult("optimal", x, fun)


def _unconstrained(c: Vec, total: int):
    if any(x < 0 for x in c):
        return "unbounded", None, None
    return "optimal", [Fraction(0)] * total, Fraction(0)


def linear_feasible(A_eq=None, b_eq=None, A_ub=None, b_ub=None,
                    bounds=None, n_vars=None) -> Optional[Vec]:
    """A point satisfying the constraints, or None."""
    if n_vars is None:
        if A_eq:
            n_vars = len(A_eq[0])
        elif A_ub:
            n_vars = len(A_ub[0])
        else:
            raise ValueError("cannot infer dimension")
    res = lp_solve([Fraction(0)] * n_vars, A_ub, b_ub, A_eq, b_eq, bounds)
    return res.x if res.ok else None
