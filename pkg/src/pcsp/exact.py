"""Exact linear algebra: rational simplex feasibility and integer Hermite normal form.

Matrices are lists of rows of Python ints (or Fractions); nothing here
touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v) if a and b)


def _col(A, j):
    return [row[j] for row in A]


# rational feasibility: Ax = b, x >= 0

@dataclass
class LPOutcome:
    feasible: bool
    x: list | None = None         # Fractions, one per column
    farkas: list | None = None    # y with y^T A >= 0 and y^T b < 0
    pivots: int = 0


def check_farkas(A, b, y) -> bool:
    n = len(A[0]) if A else 0
    return all(_dot(y, _col(A, j)) >= 0 for j in range(n)) and _dot(y, b) < 0


def nonneg_feasible(A, b, max_pivots=None, ncols=None) -> LPOutcome:
    """Phase-one simplex with Bland's rule over Fractions.

    Returns a nonnegative solution or a Farkas vector; both are re-checked.
    ``ncols`` is needed only when A has no rows.
    """
    m = len(A)
    n = len(A[0]) if m else (ncols or 0)
    if m == 0:
        return LPOutcome(True, [Fraction(0)] * n)
    sign = [(-1 if bi < 0 else 1) for bi in b]
    # tableau rows: [A' | I | b'], artificial columns n..n+m-1
    T = [[Fraction(sign[i] * v) for v in A[i]] + [Fraction(int(i == k)) for k in range(m)]
         + [Fraction(sign[i] * b[i])] for i in range(m)]
    basis = [n + i for i in range(m)]
    width = n + m
    # phase-one objective: minimize the sum of artificials; reduced costs r_j = c_j - c_B B^-1 A_j
    cost = [Fraction(0)] * n + [Fraction(1)] * m
    pivots = 0

    def reduced(j):
        return cost[j] - sum(cost[basis[i]] * T[i][j] for i in range(m))

    while True:
        entering = next((j for j in range(width) if j not in basis and reduced(j) < 0), None)
        if entering is None:
            break
        ratios = [(T[i][-1] / T[i][entering], basis[i], i) for i in range(m) if T[i][entering] > 0]
        if not ratios:
            break  # unbounded cannot happen in phase one; defensive
        best = min(r for r, _, _ in ratios)
        row = min((bv, i) for r, bv, i in ratios if r == best)[1]
        piv = T[row][entering]
        T[row] = [v / piv for v in T[row]]
        for i in range(m):
            if i != row and T[i][entering] != 0:
                f = T[i][entering]
                T[i] = [vi - f * vr for vi, vr in zip(T[i], T[row])]
        basis[row] = entering
        pivots += 1
        if max_pivots is not None and pivots > max_pivots:
            raise RuntimeError("simplex pivot limit reached")
    value = sum(T[i][-1] for i in range(m) if basis[i] >= n)
    if value == 0:
        x = [Fraction(0)] * n
        for i in range(m):
            if basis[i] < n:
                x[basis[i]] = T[i][-1]
        assert all(_dot(A[i], x) == b[i] for i in range(m)) and all(v >= 0 for v in x)
        return LPOutcome(True, x, None, pivots)
    # duals of the phase-one problem: y_i = reduced cost correction on artificial i
    # (artificial column n+i has cost 1 and reduced cost 1 - y'_i), so y'_i = 1 - r_{n+i}
    yprime = [1 - reduced(n + i) for i in range(m)]
    y = [-sign[i] * yprime[i] for i in range(m)]
    assert check_farkas(A, b, y)
    return LPOutcome(False, None, y, pivots)


# integer solvability: Ax = b, x integral

def _egcd(a, b):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def column_hnf(A):
    """Column-style Hermite form: returns (H, U, pivot_rows) with A U = H.

    U is unimodular; the first ``len(pivot_rows)`` columns of H are in
    echelon form with positive pivots and the remaining columns are zero.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    H = [list(map(int, row)) for row in A]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(r, j, a, b, c, d):
        # (col_r, col_j) <- (a col_r + b col_j, c col_r + d col_j)
        for M in (H, U):
            for row in M:
                x, y = row[r], row[j]
                row[r], row[j] = a * x + b * y, c * x + d * y

    pivots = []
    r = 0
    for i in range(m):
        if r >= n:
            break
        for j in range(r + 1, n):
            if H[i][j] == 0:
                continue
            a, b = H[i][r], H[i][j]
            g, x, y = _egcd(a, b)
            colop(r, j, x, y, -b // g, a // g)
        if H[i][r] == 0:
            continue
        if H[i][r] < 0:
            for M in (H, U):
                for row in M:
                    row[r] = -row[r]
        # reduce earlier pivot columns modulo this pivot to keep entries small
        p = H[i][r]
        for s in range(r):
            q = H[i][s] // p
            if q:
                for M in (H, U):
                    for row in M:
                        row[s] -= q * row[r]
        pivots.append(i)
        r += 1
    return H, U, pivots


@dataclass
class IPOutcome:
    feasible: bool
    x: list | None = None            # ints
    obstruction: list | None = None  # rational u with u^T A integral and u^T b not
    rank: int = 0


def check_obstruction(A, b, u) -> bool:
    n = len(A[0]) if A else 0
    return all(Fraction(_dot(u, _col(A, j))).denominator == 1 for j in range(n)) and \
        Fraction(_dot(u, b)).denominator != 1


def solve_rational(M, rhs):
    """Some rational solution of M z = rhs, or None."""
    rows = len(M)
    cols = len(M[0]) if rows else 0
    aug = [[Fraction(v) for v in M[i]] + [Fraction(rhs[i])] for i in range(rows)]
    where = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if aug[i][c] != 0), None)
        if p is None:
            continue
        aug[r], aug[p] = aug[p], aug[r]
        pv = aug[r][c]
        aug[r] = [v / pv for v in aug[r]]
        for i in range(rows):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [vi - f * vr for vi, vr in zip(aug[i], aug[r])]
        where.append(c)
        r += 1
    if any(all(v == 0 for v in aug[i][:-1]) and aug[i][-1] != 0 for i in range(r, rows)):
        return None
    z = [Fraction(0)] * cols
    for i, c in enumerate(where):
        z[c] = aug[i][-1]
    return z


def integer_feasible(A, b, ncols=None) -> IPOutcome:
    """Decide Ax = b over the integers via the column Hermite form."""
    m = len(A)
    n = len(A[0]) if m else (ncols or 0)
    if m == 0:
        return IPOutcome(True, [0] * n)
    H, U, pivots = column_hnf(A)
    r = len(pivots)
    y = []
    consistent = True
    for t, i in enumerate(pivots):
        acc = Fraction(b[i]) - sum(H[i][s] * y[s] for s in range(t))
        y.append(acc / H[i][t])
    for i in range(m):
        if sum(H[i][s] * y[s] for s in range(r)) != b[i]:
            consistent = False
            break
    if not consistent:
        # u^T A = 0 and u^T b = 1/2
        At = [_col(A, j) for j in range(n)] + [list(b)]
        u = solve_rational(At, [0] * n + [Fraction(1, 2)])
        assert u is not None and check_obstruction(A, b, u)
        return IPOutcome(False, None, u, r)
    bad = next((t for t in range(r) if y[t].denominator != 1), None)
    if bad is not None:
        # u^T H = e_bad, so u^T A = e_bad^T U^-1 is integral while u^T b = y_bad
        Ht = [[H[i][s] for i in range(m)] for s in range(r)]
        u = solve_rational(Ht, [int(s == bad) for s in range(r)])
        assert u is not None and check_obstruction(A, b, u)
        return IPOutcome(False, None, u, r)
    yy = [int(v) for v in y] + [0] * (n - r)
    x = [sum(U[j][s] * yy[s] for s in range(n)) for j in range(n)]
    assert all(_dot(A[i], x) == b[i] for i in range(m))
    return IPOutcome(True, x, None, r)
