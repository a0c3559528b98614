"""Exact linear algebra over the rationals (small dense matrices)."""

from __future__ import annotations

from fractions import Fraction

import numpy as np


def to_fraction_matrix(rows) -> list:
    return [[Fraction(c) for c in row] for row in rows]


def rref(rows):
    """Reduced row echelon form. Returns (matrix, pivot column list)."""
    a = [list(r) for r in rows]
    if not a:
        return a, []
    n_rows, n_cols = len(a), len(a[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(n_rows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return a, pivots


def rank(rows) -> int:
    return len(rref(rows)[1])


def nullspace(rows) -> list:
    """Basis of {x : A x = 0}, one vector per free column, in RREF-derived form."""
    if not rows:
        return []
    n_cols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * n_cols
        vec[f] = Fraction(1)
        for i, p in enumerate(pivots):
            vec[p] = -red[i][f]
        basis.append(vec)
    return basis


def left_nullspace(rows) -> list:
    """Basis of {w : wᵀA = 0}, rows in reduced echelon form."""
    if not rows:
        return []
    t = [list(col) for col in zip(*rows)]
    basis = nullspace(t)
    if not basis:
        return []
    red, _ = rref(basis)
    return [row for row in red if any(x != 0 for x in row)]


def solve(rows, rhs) -> list:
    """Solve a square nonsingular system exactly."""
    n = len(rows)
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    red, pivots = rref(aug)
    if pivots != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [red[i][n] for i in range(n)]


def inverse(rows) -> list:
    n = len(rows)
    aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) < n:
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in red]


def numeric_rank(matrix, rel_tol: float = 1e-9) -> int:
    """Rank from singular values; those below ``rel_tol * max`` count as zero."""
    a = np.asarray(matrix, dtype=float)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s >= rel_tol * s[0]))
