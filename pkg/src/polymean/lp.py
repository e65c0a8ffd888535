"""Exact rational linear programming.

Problems are stated in inequality form

    minimise  c.x   subject to   A x <= b,  E x = f,   x free,

and solved through the standard-form dual ``min b.y : A^T y = -c, y >= 0``
with a two-phase tableau simplex under Bland's rule.  The tableau has one
row per primal variable, which keeps it small for the tall constraint
systems produced by Fourier-Motzkin elimination.  The primal point is read
off the final simplex multipliers and every optimal answer is checked by
strong duality before it is returned.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from gmpy2 import mpq

from .linalg import dot, primitive, rank, solve_any

_ZERO = mpq(0)


class LPError(ArithmeticError):
    """Raised for malformed problems or failed internal certificates."""


@dataclass(frozen=True)
class LinearProgram:
    objective: tuple
    A: tuple
    b: tuple
    E: tuple = ()
    f: tuple = ()

    @property
    def nvars(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class LPOutcome:
    status: str
    point: tuple | None = None
    value: mpq | None = None
    ray: tuple | None = None
    dual: tuple | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _check_dims(c, A, b):
    n = len(c)
    if len(A) != len(b) or any(len(row) != n for row in A):
        raise LPError("dimension mismatch")


class _Tableau:
    """Dense simplex tableau for ``min cost.y : M y = h, y >= 0``.

    Artificial columns ``ncols .. ncols+nrows-1`` are kept throughout so the
    simplex multipliers can be read from their reduced costs.
    """

    def __init__(self, M, h):
        self.nrows = len(M)
        self.ncols = len(M[0]) if M else 0
        self.sign = []
        self.rows = []
        width = self.ncols + self.nrows
        for i, (row, hi) in enumerate(zip(M, h)):
            s = -1 if hi < 0 else 1
            self.sign.append(s)
            r = [a if s == 1 else -a for a in row] + [_ZERO] * self.nrows
            r[self.ncols + i] = mpq(1)
            r.append(hi if s == 1 else -hi)
            self.rows.append(r)
        self.basis = [self.ncols + i for i in range(self.nrows)]
        self.width = width

    def set_cost(self, cost):
        # reduced costs r_j = cost_j - sum_i cost_B(i) T[i][j]; last entry is -z
        obj = list(cost) + [_ZERO]
        for i, bv in enumerate(self.basis):
            cb = cost[bv]
            if cb:
                row = self.rows[i]
                for j, a in enumerate(row):
                    if a:
                        obj[j] -= cb * a
        self.obj = obj

    def pivot(self, r, j):
        prow = self.rows[r]
        p = prow[j]
        if p != 1:
            prow = [a / p if a else a for a in prow]
            self.rows[r] = prow
        nz = [(idx, a) for idx, a in enumerate(prow) if a]
        for i, row in enumerate(self.rows):
            if i != r:
                f = row[j]
                if f:
                    for idx, a in nz:
                        row[idx] -= f * a
        f = self.obj[j]
        if f:
            obj = self.obj
            for idx, a in nz:
                obj[idx] -= f * a
        self.basis[r] = j

    def run(self, allowed: int) -> str:
        """Bland's rule; columns ``>= allowed`` never enter."""
        while True:
            obj = self.obj
            j = next((c for c in range(allowed) if obj[c] < 0), None)
            if j is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[j]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], j)

    def multipliers(self, cost_art) -> list:
        # reduced cost of artificial i is cost_art - pi_i (sign-flipped system)
        n = self.ncols
        return [
            (cost_art - self.obj[n + i]) * self.sign[i] for i in range(self.nrows)
        ]


def _solve_ineq(c, A, b) -> LPOutcome:
    k = len(c)
    m = len(A)
    if k == 0:
        if all(bi >= 0 for bi in b):
            return LPOutcome("optimal", (), _ZERO, dual=tuple(_ZERO for _ in b))
        return LPOutcome("infeasible")
    # dual: min b.y  s.t.  A^T y = -c,  y >= 0   (k rows, m columns)
    M = [[A[j][i] for j in range(m)] for i in range(k)]
    h = [-ci for ci in c]
    if m == 0:
        M = [[] for _ in range(k)]
    T = _Tableau(M, h)
    width = T.width
    T.set_cost([_ZERO] * m + [mpq(1)] * k)
    T.run(width)
    if T.obj[-1] != 0:
        # phase one optimum is -obj[-1] > 0: dual infeasible
        ray = tuple(T.multipliers(mpq(1)))
        feas = _solve_ineq(tuple(_ZERO for _ in c), A, b)
        if feas.status == "infeasible":
            return feas
        return LPOutcome("unbounded", ray=ray)
    # drive remaining artificials out of the basis where possible
    for i, bv in enumerate(T.basis):
        if bv >= m:
            row = T.rows[i]
            j = next((col for col in range(m) if row[col]), None)
            if j is not None:
                T.pivot(i, j)
    T.set_cost(list(b) + [_ZERO] * k)
    status = T.run(m)
    if status == "unbounded":
        return LPOutcome("infeasible")
    x = tuple(T.multipliers(_ZERO))
    y = [_ZERO] * m
    for i, bv in enumerate(T.basis):
        if bv < m:
            y[bv] = T.rows[i][-1]
    value = dot(c, x)
    # strong duality certificate
    for row, bi in zip(A, b):
        if dot(row, x) > bi:
            raise LPError("primal point violates a constraint")
    if value != -dot(b, y):
        raise LPError("duality gap is nonzero")
    for i in range(k):
        if sum((A[j][i] * y[j] for j in range(m) if y[j]), _ZERO) != -c[i]:
            raise LPError("dual multipliers are infeasible")
    return LPOutcome("optimal", x, value, dual=tuple(y))


def solve(lp: LinearProgram) -> LPOutcome:
    """Minimise ``lp.objective`` exactly.

    Equalities are folded in as pairs of opposing inequalities; the returned
    ``dual`` covers the inequality rows only.
    """
    c = tuple(mpq(x) for x in lp.objective)
    _check_dims(c, lp.A, lp.b)
    if lp.E:
        _check_dims(c, lp.E, lp.f)
    A = [tuple(row) for row in lp.A]
    b = [mpq(x) for x in lp.b]
    m = len(A)
    for row, fi in zip(lp.E, lp.f):
        A.append(tuple(row))
        b.append(mpq(fi))
        A.append(tuple(-a for a in row))
        b.append(-mpq(fi))
    out = _solve_ineq(c, A, b)
    if out.dual is not None:
        out = LPOutcome(out.status, out.point, out.value, dual=out.dual[:m])
    return out


def minimize(c, A, b, E=(), f=()) -> LPOutcome:
    return solve(LinearProgram(tuple(c), tuple(A), tuple(b), tuple(E), tuple(f)))


def feasible_point(A, b, E=(), f=()) -> tuple | None:
    n = len(A[0]) if A else len(E[0]) if E else 0
    out = minimize([_ZERO] * n, A, b, E, f)
    return out.point if out.optimal else None


def _groups(A, b):
    """Group rows by primitive normal; yields (normal, [(scaled rhs, idx)])."""
    groups: dict[tuple, list] = {}
    zero_rows = []
    for i, (row, bi) in enumerate(zip(A, b)):
        prim = primitive(row)
        if not any(prim):
            zero_rows.append(i)
            continue
        j = next(t for t, a in enumerate(row) if a)
        factor = prim[j] / row[j]
        groups.setdefault(prim, []).append((bi * factor, i))
    return groups, zero_rows


def implicit_equalities(A: Sequence, b: Sequence) -> set[int]:
    """Indices of inequalities that hold with equality on all of ``{A x <= b}``.

    Each candidate row ``i`` is decided by minimising ``a_i . x``.
    """
    x0 = feasible_point(A, b)
    if x0 is None:
        raise LPError("empty polyhedron")
    groups, zero_rows = _groups(A, b)
    found = {i for i in zero_rows if b[i] == 0}
    strict = set()

    def mark(x):
        for i, (row, bi) in enumerate(zip(A, b)):
            if dot(row, x) < bi:
                strict.add(i)

    mark(x0)
    for normal, members in groups.items():
        members.sort()
        rhs0 = members[0][0]
        tight = [i for r, i in members if r == rhs0]
        if any(i in strict for i in tight):
            continue
        i = tight[0]
        out = minimize(A[i], A, b)
        if out.optimal and out.value == b[i]:
            found.update(tight)
        elif out.optimal:
            mark(out.point)
        # unbounded below: not implicit
    return found


def max_slack_point(A: Sequence, b: Sequence, eq=None) -> tuple[tuple, mpq]:
    """A relative-interior point of ``{A x <= b}`` and its slack.

    Maximises ``t`` with ``a_i . x + t <= b_i`` on the rows that are not
    implicit equalities, holding the implicit ones as equalities.  If the
    slack is unbounded it is capped at 1.  ``eq`` may pass precomputed
    implicit equalities.
    """
    n = len(A[0])
    if eq is None:
        eq = implicit_equalities(A, b)
    E = [tuple(A[i]) + (_ZERO,) for i in sorted(eq)]
    f = [b[i] for i in sorted(eq)]
    rows = [tuple(A[i]) + (mpq(1),) for i in range(len(A)) if i not in eq]
    rhs = [b[i] for i in range(len(A)) if i not in eq]
    if not rows:
        x = solve_any([r[:n] for r in E], f, n)
        slack = _ZERO if rank([r[:n] for r in E]) == n else mpq(1)
        return x, slack
    c = [_ZERO] * n + [mpq(-1)]
    out = minimize(c, rows, rhs, E, f)
    if out.status == "unbounded":
        cap = tuple(_ZERO for _ in range(n)) + (mpq(1),)
        out = minimize(c, rows + [cap], rhs + [mpq(1)], E, f)
    if not out.optimal:
        raise LPError("empty polyhedron")
    return out.point[:n], out.point[n]


def remove_redundant(A: Sequence, b: Sequence) -> tuple[list, list]:
    """Drop duplicate and LP-redundant inequalities.

    A row is kept iff relaxing it by one unit enlarges the polyhedron.  Rows
    are returned in primitive integer form.
    """
    if not A:
        return [], []
    groups, zero_rows = _groups(A, b)
    n = len(A[0])
    if any(b[i] < 0 for i in zero_rows):
        return [tuple(_ZERO for _ in range(n))], [mpq(-1)]
    rows = []
    rhs = []
    for normal, members in groups.items():
        rows.append(normal)
        rhs.append(min(r for r, _ in members))
    if feasible_point(rows, rhs) is None:
        return [tuple(_ZERO for _ in range(n))], [mpq(-1)]
    keep = list(range(len(rows)))
    i = 0
    while i < len(keep):
        idx = keep[i]
        others = [rows[j] for j in keep if j != idx]
        orhs = [rhs[j] for j in keep if j != idx]
        out = minimize(
            [-a for a in rows[idx]], others + [rows[idx]], orhs + [rhs[idx] + 1]
        )
        if out.optimal and -out.value <= rhs[idx]:
            keep.pop(i)
        else:
            i += 1
    return [rows[j] for j in keep], [rhs[j] for j in keep]
