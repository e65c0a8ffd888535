"""Exact rational linear algebra.

Scalars are ``gmpy2.mpq`` values, which are always kept in canonical form
(positive denominator, coprime numerator/denominator).  Vectors are tuples
of scalars and matrices are sequences of row vectors.
"""
from __future__ import annotations

import re
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from gmpy2 import gcd, mpq, mpz

Q = mpq

Vector = tuple
Matrix = Sequence[Sequence[mpq]]

_RATIONAL_RE = re.compile(r"^[-−]?\d+(/\d+)?$")


def parse_rational(text: str) -> mpq:
    """Parse ``p/q`` or ``p`` with an optional leading minus sign."""
    if not _RATIONAL_RE.match(text):
        raise ValueError(f"malformed rational {text!r}")
    text = text.replace("−", "-")
    num, _, den = text.partition("/")
    if den and int(den) == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return mpq(int(num), int(den) if den else 1)


def fmt(x) -> str:
    return str(mpq(x))


def to_q(x) -> mpq:
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, float):
        # floats are exact dyadic rationals; keep every bit
        return mpq(Fraction(x))
    return mpq(x)


def vec(xs: Iterable) -> tuple:
    return tuple(to_q(x) for x in xs)


def mat(rows: Iterable[Iterable]) -> tuple:
    return tuple(vec(r) for r in rows)


def dot(u, v) -> mpq:
    s = mpq(0)
    for a, b in zip(u, v):
        if a and b:
            s += a * b
    return s


def sub(u, v) -> tuple:
    return tuple(a - b for a, b in zip(u, v))


def add(u, v) -> tuple:
    return tuple(a + b for a, b in zip(u, v))


def scale(c, u) -> tuple:
    return tuple(c * a for a in u)


def matvec(M: Matrix, x) -> tuple:
    return tuple(dot(row, x) for row in M)


def transpose(M: Matrix) -> list:
    return [list(col) for col in zip(*M)]


def integer_row(row) -> list:
    """Scale a rational row by the lcm of its denominators."""
    den = 1
    for a in row:
        den = lcm(den, int(mpq(a).denominator))
    return [mpz(mpq(a) * den) for a in row]


def rank(M: Matrix) -> int:
    """Exact rank by fraction-free (Bareiss) elimination."""
    rows = [integer_row(r) for r in M if any(r)]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    prev = mpz(1)
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        for i in range(r + 1, len(rows)):
            f = rows[i][c]
            ri = rows[i]
            rr = rows[r]
            rows[i] = [(p * ri[j] - f * rr[j]) // prev for j in range(ncols)]
        prev = p
        r += 1
        if r == len(rows):
            break
    return r


def rref(M: Matrix) -> tuple[list[list[mpq]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    A = [[mpq(a) for a in row] for row in M]
    if not A:
        return A, []
    m, n = len(A), len(A[0])
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][c]
        if p != 1:
            A[r] = [a / p for a in A[r]]
        for i in range(m):
            if i != r and A[i][c]:
                f = A[i][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return A[:r], pivots


def kernel_basis(M: Matrix, ncols: int | None = None) -> list[tuple]:
    """Basis of the right null space of ``M``.

    ``ncols`` is needed only when ``M`` has no rows.
    """
    if not M:
        n = ncols or 0
        return [tuple(mpq(int(i == j)) for i in range(n)) for j in range(n)]
    n = len(M[0])
    R, pivots = rref(M)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [mpq(0)] * n
        v[f] = mpq(1)
        for row, p in zip(R, pivots):
            v[p] = -row[f]
        basis.append(tuple(v))
    return basis


def affine_dim(points: Sequence) -> int:
    """Dimension of the affine hull of ``points``."""
    points = list(points)
    if not points:
        raise ValueError("empty point set")
    p0 = points[0]
    return rank([sub(p, p0) for p in points[1:]])


def solve(M: Matrix, b) -> tuple | None:
    """Unique solution of the square system ``M x = b``; None if singular."""
    n = len(M)
    aug = [list(M[i]) + [b[i]] for i in range(n)]
    R, pivots = rref(aug)
    if pivots != list(range(n)):
        return None
    return tuple(R[i][n] for i in range(n))


def solve_any(M: Matrix, b, ncols: int) -> tuple | None:
    """Some solution of ``M x = b`` (free variables set to zero), or None."""
    if not M:
        return tuple(mpq(0) for _ in range(ncols))
    aug = [list(M[i]) + [b[i]] for i in range(len(M))]
    R, pivots = rref(aug)
    if pivots and pivots[-1] == ncols:
        return None
    x = [mpq(0)] * ncols
    for row, p in zip(R, pivots):
        x[p] = row[ncols]
    return tuple(x)


def primitive(row) -> tuple:
    """Positive rescaling of a rational row to coprime integers."""
    ints = integer_row(row)
    g = mpz(0)
    for a in ints:
        g = gcd(g, a)
    if g == 0:
        return tuple(mpq(0) for _ in ints)
    return tuple(mpq(a // g) for a in ints)
