"""Exact Fréchet mean sets under polytope norms.

The pipeline lifts the problem to ``(theta, d)`` space, projects out
``theta`` by Fourier-Motzkin elimination, finds the minimum-norm distance
vector by Frank-Wolfe and reads the mean set back as an H-polyhedron.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from gmpy2 import mpq

from . import lp
from .linalg import add, dot, rank, scale, solve, sub, vec
from .polytope import (
    HPolyhedron,
    PolarFace,
    PolytopeNorm,
    active_constraints,
    format_matrix_text,
    fourier_motzkin,
    norm_eval,
    parse_matrix_text,
    vertices,
)

log = logging.getLogger(__name__)

_ZERO = mpq(0)
_ONE = mpq(1)


class SolverError(RuntimeError):
    """The exact pipeline reached a state it cannot certify."""


class FaceTypeUndefined(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    points: tuple

    def __post_init__(self):
        pts = tuple(vec(p) for p in self.points)
        if not pts:
            raise ValueError("sample needs at least one point")
        if len({len(p) for p in pts}) != 1 or not pts[0]:
            raise ValueError("sample points must share a positive dimension")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def k(self) -> int:
        return len(self.points[0])

    def to_text(self) -> str:
        return format_matrix_text(self.points)


def parse_sample(text: str, what: str = "sample") -> Sample:
    return Sample(parse_matrix_text(text, what))


def load_sample(path) -> Sample:
    path = Path(path)
    return parse_sample(path.read_text(), f"sample file {path}")


@dataclass
class FMSetResult:
    distances: tuple
    fm_hrep: HPolyhedron
    fm_dim: int
    unique: bool
    witness: tuple
    face_type: tuple | None = None
    implicit: frozenset = frozenset()
    stats: dict = field(default_factory=dict)


def build_lifted_polyhedron(norm: PolytopeNorm, sample: Sample) -> HPolyhedron:
    """``Q`` over ``(theta_1..theta_k, d_1..d_n)``: ``a.x_i - a.theta - d_i <= 0``."""
    if sample.k != norm.k:
        raise ValueError("dimension mismatch")
    k, n = norm.k, sample.n
    rows, rhs = [], []
    for i, x in enumerate(sample.points):
        for a in norm.A:
            d = [_ZERO] * n
            d[i] = -_ONE
            rows.append(tuple(-ai for ai in a) + tuple(d))
            rhs.append(-dot(a, x))
    return HPolyhedron(tuple(rows), tuple(rhs))


def fm_hrep_from_distances(norm: PolytopeNorm, sample: Sample, d) -> HPolyhedron:
    """``{theta : a.theta >= a.x_i - d_i}`` written as ``-a.theta <= d_i - a.x_i``."""
    rows, rhs = [], []
    for x, di in zip(sample.points, d):
        for a in norm.A:
            rows.append(tuple(-ai for ai in a))
            rhs.append(di - dot(a, x))
    return HPolyhedron(tuple(rows), tuple(rhs))


# --------------------------------------------------------------------------
# minimum-norm point


def _affine_minimizer(S):
    """Weights of the min-norm point of aff(S), summing to one."""
    m = len(S)
    M = [[dot(S[i], S[j]) for j in range(m)] + [_ONE] for i in range(m)]
    M.append([_ONE] * m + [_ZERO])
    sol = solve(M, [_ZERO] * m + [_ONE])
    if sol is None:
        raise SolverError("corral lost affine independence")
    return sol[:m]


def _combine(S, lam):
    x = tuple(_ZERO for _ in S[0])
    for p, l in zip(S, lam):
        if l:
            x = add(x, scale(l, p))
    return x


def wolfe_min_norm(oracle, start, max_major: int = 10_000):
    """Wolfe's minimum-norm-point algorithm with exact arithmetic.

    ``oracle(c)`` must return a point of the polytope minimising ``c.s``.
    """
    S = [tuple(start)]
    lam = [_ONE]
    x = S[0]
    for _ in range(max_major):
        q = oracle(x)
        if dot(x, q) >= dot(x, x):
            return x
        if q in S:
            raise SolverError("oracle repeated a corral point")
        S.append(q)
        lam.append(_ZERO)
        while True:
            alpha = _affine_minimizer(S)
            if all(a > 0 for a in alpha):
                lam = list(alpha)
                x = _combine(S, lam)
                break
            theta = min(
                (l / (l - a) if l - a else _ZERO)
                for l, a in zip(lam, alpha)
                if a <= 0
            )
            lam = [theta * a + (1 - theta) * l for l, a in zip(lam, alpha)]
            keep = [i for i, l in enumerate(lam) if l > 0]
            S = [S[i] for i in keep]
            lam = [lam[i] for i in keep]
            x = _combine(S, lam)
    raise SolverError("minimum-norm point did not converge")


def _bits(v) -> int:
    return max(
        (int(x.numerator).bit_length() + int(x.denominator).bit_length() for x in v),
        default=0,
    )


def min_norm_point(
    Qp: HPolyhedron,
    cap: int | None = None,
    stats: dict | None = None,
    oracle_lp=None,
    bit_budget: int = 4096,
):
    """Exact ``argmin ||d||_2`` over ``Qp`` (a polyhedron in the nonnegative orthant).

    Runs Frank-Wolfe with exact line search from ``argmin 1.d``.  After
    ``cap`` steps (default ``4n``) optimality is checked exactly; if the
    check fails, Wolfe's minimum-norm-point method finishes the job, seeded
    with the shortest oracle vertex seen so far.  Exact line steps grow the
    iterate's bit length geometrically, so the loop also hands over once an
    entry exceeds ``bit_budget`` bits.

    The oracle minimises over ``Qp`` intersected with ``[0, 2D]^n`` where
    ``D = 1.d_0``, a box that contains the minimiser.  ``oracle_lp(c, rows,
    rhs)`` may replace the LP over ``Qp``; it must return an ``LPOutcome``
    for ``min c.d`` over ``Qp`` cut by the extra rows.
    """
    n = Qp.dim
    stats = {} if stats is None else stats
    cap = 4 * n if cap is None else cap

    if oracle_lp is None:

        def oracle_lp(c, rows, rhs):
            return lp.minimize(c, list(Qp.A) + rows, list(Qp.b) + rhs)

    out = oracle_lp([_ONE] * n, [], [])
    if out.status == "infeasible":
        raise SolverError("infeasible")
    if not out.optimal:
        raise SolverError("polyhedron is not inside the nonnegative orthant")
    d = tuple(out.point)
    D = out.value
    box_rows, box_rhs = [], []
    for i in range(n):
        e = [_ZERO] * n
        e[i] = _ONE
        box_rows.append(tuple(e))
        box_rhs.append(2 * D)
        box_rows.append(tuple(-a for a in e))
        box_rhs.append(_ZERO)

    calls = [0]

    def oracle(c):
        calls[0] += 1
        res = oracle_lp(list(c), box_rows, box_rhs)
        if not res.optimal:
            raise SolverError("vertex oracle failed")
        return tuple(res.point)

    seen = [d]
    fw_steps = 0
    certified = False
    while True:
        s = oracle(d)
        if dot(s, d) >= dot(d, d):
            certified = True
            break
        seen.append(s)
        if fw_steps >= cap or _bits(d) > bit_budget:
            break
        diff = sub(s, d)
        eta = -dot(diff, d) / dot(diff, diff)
        eta = min(max(eta, _ZERO), _ONE)
        d = add(d, scale(eta, diff))
        fw_steps += 1
    stats["fw_steps"] = fw_steps
    stats["fallback"] = not certified
    if not certified:
        log.info("Frank-Wolfe uncertified after %d steps; switching to Wolfe's method", fw_steps)
        start = min(seen, key=lambda v: (dot(v, v), v))
        d = wolfe_min_norm(oracle, start)
        if dot(oracle(d), d) < dot(d, d):
            raise SolverError("minimum-norm point failed its certificate")
    stats["oracle_calls"] = calls[0]
    return d


# --------------------------------------------------------------------------
# the full pipeline


def fm_set(
    norm: PolytopeNorm,
    sample: Sample,
    projection: str = "fourier-motzkin",
    cap: int | None = None,
) -> FMSetResult:
    """Fréchet mean set of ``sample`` under ``norm``.

    ``projection="fourier-motzkin"`` computes ``Q'`` explicitly.  With
    ``projection="lifted"`` the vertex oracle instead solves its LPs over the
    lifted polyhedron ``Q`` directly, which gives the same optimum.
    """
    if sample.k != norm.k:
        raise ValueError("dimension mismatch")
    k, n = norm.k, sample.n
    stats: dict = {}
    Q = build_lifted_polyhedron(norm, sample)
    if projection == "fourier-motzkin":
        Qp = fourier_motzkin(Q, range(k))
        stats["qp_rows"] = len(Qp)
        d = min_norm_point(Qp, cap=cap, stats=stats)
    elif projection == "lifted":
        Qa, Qb = list(Q.A), list(Q.b)
        zeros = (_ZERO,) * k

        def oracle_lp(c, rows, rhs):
            out = lp.minimize(
                [_ZERO] * k + list(c),
                Qa + [zeros + tuple(r) for r in rows],
                Qb + list(rhs),
            )
            if out.optimal:
                return lp.LPOutcome(out.status, out.point[k:], out.value)
            return out

        Qp = HPolyhedron(((_ZERO,) * n,), (_ZERO,))
        d = min_norm_point(Qp, cap=cap, stats=stats, oracle_lp=oracle_lp)
    else:
        raise ValueError(f"unknown projection {projection!r}")

    P = fm_hrep_from_distances(norm, sample, d)
    eq = lp.implicit_equalities(P.A, P.b)
    fm_dim = k - rank([P.A[i] for i in sorted(eq)])
    witness, _ = lp.max_slack_point(P.A, P.b, eq=eq)
    for x, di in zip(sample.points, d):
        if norm_eval(norm, sub(x, witness)) != di:
            raise SolverError("witness distances disagree with the minimiser")
    result = FMSetResult(
        distances=tuple(d),
        fm_hrep=P,
        fm_dim=fm_dim,
        unique=fm_dim == 0,
        witness=tuple(witness),
        implicit=frozenset(eq),
        stats=stats,
    )
    if all(di > 0 for di in d):
        result.face_type = face_type_of_sample(norm, sample, result)
    return result


def face_type_of_sample(
    norm: PolytopeNorm, sample: Sample, result: FMSetResult
) -> tuple[PolarFace, ...]:
    """Polar faces ``G_i``: the active rows of ``witness - x_i``.

    ``conv(G_i)`` is then the subdifferential of ``||. - x_i||`` at the
    witness, so ``0`` lies in ``sum d_i conv(G_i)``.
    """
    if any(di <= 0 for di in result.distances):
        raise FaceTypeUndefined("face type undefined: data point is a Fréchet mean")
    return tuple(
        norm.face(active_constraints(norm, sub(result.witness, x)))
        for x in sample.points
    )


# --------------------------------------------------------------------------
# certificates and oracles


def frechet_value(norm: PolytopeNorm, sample: Sample, theta) -> mpq:
    """Sum of squared distances (the Fréchet function times n)."""
    return sum((norm_eval(norm, sub(x, theta)) ** 2 for x in sample.points), _ZERO)


def subgradient_certificate(
    norm: PolytopeNorm, distances: Sequence, faces: Sequence[PolarFace]
) -> bool:
    """Exact LP check of ``0 in sum_i d_i conv(G_i)``."""
    cols = []
    owners = []
    for i, (di, F) in enumerate(zip(distances, faces)):
        for v in F.vertices(norm):
            cols.append(scale(di, v))
            owners.append(i)
    m = len(cols)
    E = [tuple(col[r] for col in cols) for r in range(norm.k)]
    f = [_ZERO] * norm.k
    for i in range(len(faces)):
        E.append(tuple(_ONE if o == i else _ZERO for o in owners))
        f.append(_ONE)
    A = [tuple(-_ONE if j == t else _ZERO for j in range(m)) for t in range(m)]
    b = [_ZERO] * m
    return lp.minimize([_ZERO] * m, A, b, E, f).optimal


def fm_vertices(result: FMSetResult) -> list[tuple]:
    return vertices(result.fm_hrep)


def brute_force_fm_oracle(
    norm: PolytopeNorm, sample: Sample, box, step, limit: int = 2_000_000
) -> set:
    """Grid points in ``box = (lo, hi)`` minimising the Fréchet function."""
    lo, hi = vec(box[0]), vec(box[1])
    step = mpq(step)
    if step <= 0:
        raise ValueError("step must be positive")
    counts = [int((h - l) / step) + 1 for l, h in zip(lo, hi)]
    total = 1
    for c in counts:
        total *= c
    if total > limit:
        raise ValueError(f"grid of {total} points exceeds the limit {limit}")
    best = None
    found: set = set()
    for idx in itertools.product(*(range(c) for c in counts)):
        theta = tuple(l + step * j for l, j in zip(lo, idx))
        val = frechet_value(norm, sample, theta)
        if best is None or val < best:
            best, found = val, {theta}
        elif val == best:
            found.add(theta)
    return found


def oracle_check(
    norm: PolytopeNorm,
    sample: Sample,
    step,
    box=None,
    result: FMSetResult | None = None,
) -> list[str]:
    """Cross-check ``fm_set`` against the grid oracle; returns violated invariants."""
    if result is None:
        result = fm_set(norm, sample)
    if box is None:
        lo = tuple(min(x[j] for x in sample.points) for j in range(sample.k))
        hi = tuple(max(x[j] for x in sample.points) for j in range(sample.k))
        box = (lo, hi)
    problems = []
    grid = brute_force_fm_oracle(norm, sample, box, step)
    for theta in sorted(grid):
        if not result.fm_hrep.contains(theta):
            problems.append(f"containment: grid minimiser {tuple(map(str, theta))} outside FM set")
            break
    exact = sum((di * di for di in result.distances), _ZERO)
    grid_best = frechet_value(norm, sample, next(iter(grid)))
    if grid_best < exact:
        problems.append("optimality: grid value below the exact optimum")
    if not result.fm_hrep.contains(result.witness):
        problems.append("witness: witness outside FM set")
    verts = fm_vertices(result)
    if not verts:
        problems.append("equidistance: FM set has no vertices")
    for v in verts:
        for x, di in zip(sample.points, result.distances):
            if norm_eval(norm, sub(x, v)) != di:
                problems.append(f"equidistance: vertex {tuple(map(str, v))} is off the distance sphere")
                break
        else:
            continue
        break
    return problems
