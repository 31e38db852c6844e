"""Small exact linear algebra over the integers and rationals.

Matrices are lists of lists of Python ints (or Fractions). Sizes here are tiny
(Hirsch rank and its square), so clarity wins over speed.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from sympy import Matrix as SymMatrix, ZZ
from sympy.matrices.normalforms import smith_normal_decomp

Matrix = list[list[int]]


def identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def transpose(a: Sequence[Sequence]) -> list[list]:
    if not a:
        return []
    return [list(col) for col in zip(*a)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    bt = transpose(b)
    if not bt:
        return [[] for _ in a]
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def matvec(a: Sequence[Sequence], v: Sequence) -> list:
    return [sum(x * y for x, y in zip(row, v)) for row in a]


def column(a: Sequence[Sequence], j: int) -> list:
    return [row[j] for row in a]


def columns_to_matrix(cols: Sequence[Sequence[int]], nrows: int) -> Matrix:
    return [[c[i] for c in cols] for i in range(nrows)]


def smith_normal_form(a: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Return ``(U, D, V)`` with ``U @ a @ V == D`` and U, V unimodular.

    D is diagonal with positive entries d_1 | d_2 | ... followed by zeros.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    if m == 0 or n == 0:
        return identity(m), [[0] * n for _ in range(m)], identity(n)
    d, u, v = smith_normal_decomp(SymMatrix(a), domain=ZZ)
    as_ints = lambda mat: [[int(x) for x in mat.row(i)] for i in range(mat.rows)]
    return as_ints(u), as_ints(d), as_ints(v)


def diagonal(d: Matrix) -> list[int]:
    return [d[i][i] for i in range(min(len(d), len(d[0]) if d else 0)) if d[i][i]]


def inverse(a: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(a)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [x / pv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def inverse_unimodular(a: Sequence[Sequence[int]]) -> Matrix:
    inv = inverse(a)
    out = []
    for row in inv:
        if any(x.denominator != 1 for x in row):
            raise ValueError("matrix is not unimodular")
        out.append([int(x) for x in row])
    return out


def determinant(a: Sequence[Sequence]) -> Fraction:
    n = len(a)
    rows = [[Fraction(x) for x in row] for row in a]
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        det *= rows[col][col]
        for r in range(col + 1, n):
            if rows[r][col] != 0:
                f = rows[r][col] / rows[col][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return det


def unimodular_completion(cols: Sequence[Sequence[int]], n: int) -> list[list[int]]:
    """Columns C with ``[C | cols]`` unimodular; ``cols`` must span a saturated sublattice.

    The lexicographically first choice of standard basis vectors is used when
    one works, otherwise a completion read off a Smith form.
    """
    from itertools import combinations

    m = n - len(cols)
    for idx in combinations(range(n), m):
        cand = [[int(i == j) for i in range(n)] for j in idx]
        if abs(determinant(columns_to_matrix(cand + [list(c) for c in cols], n))) == 1:
            return cand
    u, _, _ = smith_normal_form(columns_to_matrix(cols, n))
    u_inv = inverse_unimodular(u)
    return [column(u_inv, j) for j in range(len(cols), n)]


def rank(a: Sequence[Sequence]) -> int:
    rows = [[Fraction(x) for x in row] for row in a if any(row)]
    r = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, len(rows)):
            if rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        r += 1
    return r


def solve_columns(cols: Sequence[Sequence[int]], target: Sequence[int]) -> list[Fraction]:
    """Coordinates of ``target`` in the span of linearly independent ``cols``."""
    n = len(cols)
    m = len(target)
    aug = [[Fraction(cols[j][i]) for j in range(n)] + [Fraction(target[i])] for i in range(m)]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, m) if aug[i][col] != 0), None)
        if piv is None:
            raise ValueError("columns are linearly dependent")
        aug[r], aug[piv] = aug[piv], aug[r]
        pv = aug[r][col]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
    if any(aug[i][n] != 0 for i in range(r, m)):
        raise ValueError("target not in span")
    return [aug[i][n] for i in range(n)]


def p_valuation(x: int, p: int) -> int:
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v
