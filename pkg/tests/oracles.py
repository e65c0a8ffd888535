"""Brute-force reference implementations used only by the tests.

Everything here works on ``fractions.Fraction`` and shares no code with the
package, so agreement between the two is meaningful.
"""
from fractions import Fraction as F
from itertools import combinations, product


def frac(x):
    return F(int(x.numerator), int(x.denominator)) if hasattr(x, "numerator") else F(x)


def gauss_rank(rows):
    M = [[frac(a) for a in r] for r in rows]
    rank = 0
    ncols = len(M[0]) if M else 0
    for c in range(ncols):
        piv = next((i for i in range(rank, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for i in range(len(M)):
            if i != rank and M[i][c] != 0:
                f = M[i][c] / M[rank][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[rank])]
        rank += 1
    return rank


def gauss_solve(M, b):
    """Unique solution of a square system or None."""
    n = len(M)
    A = [[frac(a) for a in row] + [frac(bi)] for row, bi in zip(M, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if A[i][c] != 0), None)
        if piv is None:
            return None
        A[c], A[piv] = A[piv], A[c]
        for i in range(n):
            if i != c and A[i][c] != 0:
                f = A[i][c] / A[c][c]
                A[i] = [a - f * b for a, b in zip(A[i], A[c])]
    return tuple(A[i][n] / A[i][i] for i in range(n))


def dotf(u, v):
    return sum(frac(a) * frac(b) for a, b in zip(u, v))


def vertices(A, b):
    """All vertices of {A x <= b}: feasible unique solutions of n tight rows."""
    n = len(A[0])
    out = set()
    for S in combinations(range(len(A)), n):
        x = gauss_solve([A[i] for i in S], [b[i] for i in S])
        if x is not None and all(dotf(r, x) <= frac(bi) for r, bi in zip(A, b)):
            out.add(x)
    return out


def lp_min(c, A, b):
    """Minimum of c.x over a bounded nonempty {A x <= b}, or None if empty."""
    V = vertices(A, b)
    if not V:
        return None
    return min(dotf(c, v) for v in V)


def support(points, c):
    return max(dotf(c, p) for p in points)


def polytope_norm(rows, x):
    return max(dotf(a, x) for a in rows)


def frechet_grid(rows, points, lo, hi, step):
    """Exact grid minimisers of sum_i ||x_i - theta||^2."""
    step = F(step)
    axes = []
    for l, h in zip(lo, hi):
        l, h = F(l), F(h)
        m = int((h - l) / step)
        axes.append([l + j * step for j in range(m + 1)])
    best, arg = None, set()
    for theta in product(*axes):
        val = sum(
            polytope_norm(rows, [frac(a) - t for a, t in zip(x, theta)]) ** 2
            for x in points
        )
        if best is None or val < best:
            best, arg = val, {theta}
        elif val == best:
            arg.add(theta)
    return best, arg
