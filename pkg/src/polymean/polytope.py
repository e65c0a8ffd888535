"""Polytope norms, polar faces, H-polyhedra and Fourier-Motzkin elimination.

A norm is stored as the H-representation ``B = {x : A x <= 1}`` of its unit
ball; the rows of ``A`` are the vertices of the polar polytope.  Faces of
the ball are only ever handled through their polar faces, i.e. the sets of
rows that are active on them.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from gmpy2 import mpq

from . import lp
from .linalg import (
    affine_dim,
    dot,
    mat,
    parse_rational,
    primitive,
    rank,
    solve,
    sub,
    vec,
)

log = logging.getLogger(__name__)

_ZERO = mpq(0)
FACE_LIMIT = 24


class NormError(ValueError):
    pass


@dataclass(frozen=True)
class HPolyhedron:
    """``{x : A x <= b}``."""

    A: tuple
    b: tuple

    def __post_init__(self):
        if len(self.A) != len(self.b):
            raise ValueError("dimension mismatch")

    @classmethod
    def from_rows(cls, A, b) -> "HPolyhedron":
        return cls(mat(A), vec(b))

    @property
    def dim(self) -> int:
        return len(self.A[0]) if self.A else 0

    def __len__(self) -> int:
        return len(self.A)

    def contains(self, x) -> bool:
        return all(dot(row, x) <= bi for row, bi in zip(self.A, self.b))

    def slacks(self, x) -> tuple:
        return tuple(bi - dot(row, x) for row, bi in zip(self.A, self.b))

    def is_empty(self) -> bool:
        return lp.feasible_point(self.A, self.b) is None


@dataclass(frozen=True, order=True)
class PolarFace:
    """A face of the polar polytope, given by the rows of ``A`` it contains."""

    dim: int
    vertex_indices: tuple

    def __len__(self) -> int:
        return len(self.vertex_indices)

    def vertices(self, norm: "PolytopeNorm") -> list:
        return [norm.A[i] for i in self.vertex_indices]

    def label(self, norm: "PolytopeNorm") -> str:
        return "conv{" + ", ".join(
            "(" + ",".join(str(a) for a in norm.A[i]) + ")"
            for i in self.vertex_indices
        ) + "}"


@dataclass(frozen=True)
class PolytopeNorm:
    """Norm whose unit ball is ``{x : A x <= 1}``."""

    A: tuple
    name: str = ""
    _faces: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        A = mat(self.A)
        object.__setattr__(self, "A", A)
        if not A:
            raise NormError("norm needs at least one row")
        k = len(A[0])
        if any(len(row) != k for row in A):
            raise NormError("rows have different lengths")
        rows = set(A)
        if len(rows) != len(A):
            raise NormError("duplicate rows")
        if any(tuple(-a for a in row) not in rows for row in A):
            raise NormError("rows are not centrally symmetric")
        if rank(A) != k:
            raise NormError("unit ball is unbounded (rows do not span)")

    @property
    def k(self) -> int:
        return len(self.A[0])

    @property
    def r(self) -> int:
        return len(self.A)

    def face(self, indices: Iterable[int]) -> PolarFace:
        idx = tuple(sorted(set(indices)))
        return PolarFace(affine_dim([self.A[i] for i in idx]), idx)

    def face_of(self, rows: Iterable) -> PolarFace:
        """PolarFace from explicit polar vertices."""
        lookup = {row: i for i, row in enumerate(self.A)}
        try:
            return self.face(lookup[vec(r)] for r in rows)
        except KeyError as exc:
            raise NormError(f"{exc.args[0]} is not a row of the norm") from None

    def validate_vertices(self) -> None:
        """Check every row is a vertex of the polar (i.e. no row is redundant)."""
        for j in range(self.r):
            if not is_polar_face(self, [j]):
                raise NormError(f"row {j} is not a vertex of the polar polytope")


def linf(k: int) -> PolytopeNorm:
    """The l-infinity norm; rows e_1, -e_1, e_2, -e_2, ..."""
    rows = []
    for i in range(k):
        for s in (1, -1):
            rows.append([s if j == i else 0 for j in range(k)])
    return PolytopeNorm(mat(rows), name=f"linf:{k}")


def l1(k: int) -> PolytopeNorm:
    """The l1 norm; sign vectors in binary-reflected Gray code order."""
    rows = []
    for i in range(2**k):
        g = i ^ (i >> 1)
        rows.append([-1 if (g >> j) & 1 else 1 for j in range(k)])
    return PolytopeNorm(mat(rows), name=f"l1:{k}")


def _data_lines(text: str) -> list[list[str]]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line.split(" "))
    return out


def parse_matrix_text(text: str, what: str) -> tuple:
    lines = _data_lines(text)
    if not lines or len(lines[0]) != 2:
        raise ValueError(f"{what}: first line must be '<rows> <cols>'")
    try:
        nrows, ncols = (int(t) for t in lines[0])
    except ValueError:
        raise ValueError(f"{what}: first line must be '<rows> <cols>'") from None
    body = lines[1:]
    if len(body) != nrows:
        raise ValueError(f"{what}: expected {nrows} rows, found {len(body)}")
    rows = []
    for lineno, toks in enumerate(body, start=2):
        if len(toks) != ncols:
            raise ValueError(f"{what}: row {lineno} has {len(toks)} entries, expected {ncols}")
        rows.append(tuple(parse_rational(t) for t in toks))
    return tuple(rows)


def format_matrix_text(rows: Sequence) -> str:
    ncols = len(rows[0]) if rows else 0
    lines = [f"{len(rows)} {ncols}"]
    lines += [" ".join(str(a) for a in row) for row in rows]
    return "\n".join(lines) + "\n"


def parse_norm(name: str) -> PolytopeNorm:
    """``linf:<k>``, ``l1:<k>`` or a path to a norm file."""
    kind, sep, arg = name.partition(":")
    if sep and kind in ("linf", "l1") and arg.isdigit():
        k = int(arg)
        if k < 1:
            raise NormError("dimension must be positive")
        return linf(k) if kind == "linf" else l1(k)
    path = Path(name)
    A = parse_matrix_text(path.read_text(), f"norm file {path}")
    norm = PolytopeNorm(A, name=path.stem)
    norm.validate_vertices()
    return norm


# --------------------------------------------------------------------------
# evaluation and faces


def norm_eval(norm: PolytopeNorm, x) -> mpq:
    if len(x) != norm.k:
        raise ValueError("dimension mismatch")
    return max(dot(a, x) for a in norm.A)


def active_constraints(norm: PolytopeNorm, x) -> tuple:
    """Indices of rows attaining the maximum in ``norm_eval``."""
    if len(x) != norm.k:
        raise ValueError("dimension mismatch")
    if not any(x):
        raise ValueError("active set undefined at origin")
    vals = [dot(a, x) for a in norm.A]
    top = max(vals)
    return tuple(i for i, v in enumerate(vals) if v == top)


def is_polar_face(norm: PolytopeNorm, indices: Iterable[int]) -> bool:
    """Whether the given rows are exactly the vertex set of a proper polar face.

    Looks for (c, c0) with c.v = c0 on the chosen rows and c.w < c0 on the
    rest, maximising the smallest gap ``t`` (capped at 1).
    """
    S = sorted(set(indices))
    if not S or any(not 0 <= i < norm.r for i in S):
        raise ValueError("face index set must be nonempty and in range")
    rest = [j for j in range(norm.r) if j not in set(S)]
    if not rest:
        return False
    k = norm.k
    # variables (c_1..c_k, c0, t); minimise -t
    E = [tuple(norm.A[i]) + (mpq(-1), _ZERO) for i in S]
    f = [_ZERO] * len(S)
    A = [tuple(norm.A[j]) + (mpq(-1), mpq(1)) for j in rest]
    b = [_ZERO] * len(rest)
    A.append(tuple([_ZERO] * (k + 1)) + (mpq(1),))
    b.append(mpq(1))
    out = lp.minimize([_ZERO] * (k + 1) + [mpq(-1)], A, b, E, f)
    return out.optimal and -out.value > 0


def polar_facets(norm: PolytopeNorm) -> list[tuple]:
    """Vertex sets of the facets of the polar, via hyperplanes through k rows."""
    A, k = norm.A, norm.k
    ones = [mpq(1)] * k
    found = set()
    for S in itertools.combinations(range(norm.r), k):
        c = solve([A[i] for i in S], ones)
        if c is None:
            continue
        vals = [dot(c, a) for a in A]
        if any(v > 1 for v in vals):
            continue
        found.add(tuple(i for i, v in enumerate(vals) if v == 1))
    return sorted(found)


def enumerate_polar_faces(
    norm: PolytopeNorm, max_dim: int | None = None, force: bool = False
) -> list[PolarFace]:
    """All nonempty proper faces of the polar polytope, sorted by (dim, indices)."""
    if norm.r > FACE_LIMIT and not force:
        raise NormError("face enumeration too large")
    key = ("faces",)
    if key not in norm._faces:
        facets = [frozenset(F) for F in polar_facets(norm)]
        faces = set(facets)
        frontier = set(facets)
        while frontier:
            new = set()
            for F in frontier:
                for G in facets:
                    H = F & G
                    if H and H not in faces:
                        new.add(H)
            faces |= new
            frontier = new
        out = []
        for F in faces:
            idx = tuple(sorted(F))
            if not is_polar_face(norm, idx):
                raise NormError(f"face certification failed for {idx}")
            out.append(norm.face(idx))
        norm._faces[key] = sorted(out)
    faces = norm._faces[key]
    if max_dim is not None:
        faces = [F for F in faces if F.dim <= max_dim]
    return list(faces)


def minkowski_dim_of_affine_sum(faces: Sequence[PolarFace], norm: PolytopeNorm) -> int:
    """Dimension of the Minkowski sum of the faces' affine hulls."""
    if not faces:
        raise ValueError("faces must be nonempty")
    rows = []
    for F in faces:
        verts = F.vertices(norm)
        rows += [sub(v, verts[0]) for v in verts[1:]]
    return rank(rows)


# --------------------------------------------------------------------------
# redundancy removal and Fourier-Motzkin


def _interior_point(A, b):
    """A point satisfying every row strictly, or None."""
    n = len(A[0])
    rows = [tuple(row) + (mpq(1),) for row in A]
    rows.append(tuple([_ZERO] * n) + (mpq(1),))
    out = lp.minimize([_ZERO] * n + [mpq(-1)], rows, list(b) + [mpq(1)])
    if out.optimal and out.point[n] > 0:
        return out.point[:n]
    return None


def irredundant(A: Sequence, b: Sequence) -> tuple[list, list]:
    """Minimal H-representation of ``{A x <= b}``.

    Rows are normalised to primitive integer normals and deduplicated.  For a
    full-dimensional polyhedron, Clarkson's method is used: each candidate is
    tested by an LP over the rows already known to be irredundant, and ray
    shooting from an interior point identifies the next irredundant row.
    Otherwise every row is tested against all others.
    """
    if not A:
        return [], []
    n = len(A[0])
    groups, zero_rows = lp._groups(A, b)
    if any(b[i] < 0 for i in zero_rows):
        return [tuple([_ZERO] * n)], [mpq(-1)]
    rows, rhs = [], []
    for normal, members in groups.items():
        rows.append(normal)
        rhs.append(min(r for r, _ in members))
    if not rows:
        return [], []
    z = _interior_point(rows, rhs)
    if z is None:
        return lp.remove_redundant(rows, rhs)
    zslack = [bi - dot(row, z) for row, bi in zip(rows, rhs)]
    known: list[int] = []
    status = [None] * len(rows)
    for j in range(len(rows)):
        while status[j] is None:
            Ak = [rows[i] for i in known] + [rows[j]]
            bk = [rhs[i] for i in known] + [rhs[j] + 1]
            out = lp.minimize([-a for a in rows[j]], Ak, bk)
            if out.optimal and -out.value <= rhs[j]:
                status[j] = False
                break
            # a point of the relaxation violating row j: shoot a ray to it
            d = out.ray if out.status == "unbounded" else sub(out.point, z)
            hits = [
                (zslack[i] / dot(rows[i], d), i)
                for i in range(len(rows))
                if status[i] is not True and dot(rows[i], d) > 0
            ]
            hits.sort()
            if status[hits[0][1]] is None and (
                len(hits) == 1 or hits[0][0] < hits[1][0]
            ):
                i = hits[0][1]
                status[i] = True
                known.append(i)
                continue
            # tie on the ray: decide row j against every undecided row
            others = [i for i in range(len(rows)) if i != j and status[i] is not False]
            Ak = [rows[i] for i in others] + [rows[j]]
            bk = [rhs[i] for i in others] + [rhs[j] + 1]
            out = lp.minimize([-a for a in rows[j]], Ak, bk)
            redundant = out.optimal and -out.value <= rhs[j]
            status[j] = not redundant
            if status[j]:
                known.append(j)
    keep = [i for i in range(len(rows)) if status[i]]
    return [rows[i] for i in keep], [rhs[i] for i in keep]


def fourier_motzkin(
    P: HPolyhedron, eliminate: Iterable[int], order: Sequence[int] | None = None
) -> HPolyhedron:
    """Project ``P`` onto the coordinates not in ``eliminate``.

    Variables are eliminated one at a time (ascending index unless ``order``
    is given); after each step the system is reduced to an irredundant one.
    """
    elim = sorted(set(eliminate)) if order is None else list(order)
    d = P.dim
    if any(not 0 <= j < d for j in elim) or len(set(elim)) >= d:
        raise ValueError("invalid elimination set")
    A = [list(row) for row in P.A]
    b = list(P.b)
    for var in elim:
        pos = [i for i, row in enumerate(A) if row[var] > 0]
        neg = [i for i, row in enumerate(A) if row[var] < 0]
        newA = [A[i] for i in range(len(A)) if A[i][var] == 0]
        newb = [b[i] for i in range(len(A)) if A[i][var] == 0]
        for p in pos:
            cp = A[p][var]
            for q in neg:
                cq = -A[q][var]
                row = [cq * x + cp * y for x, y in zip(A[p], A[q])]
                newA.append(row)
                newb.append(cq * b[p] + cp * b[q])
        log.debug("eliminate x%d: %d+ %d- -> %d rows", var, len(pos), len(neg), len(newA))
        if newA:
            A, b = irredundant(newA, newb)
            A = [list(row) for row in A]
        else:
            A, b = [], []
    keep = [j for j in range(d) if j not in set(elim)]
    return HPolyhedron(
        tuple(tuple(mpq(row[j]) for j in keep) for row in A), tuple(mpq(x) for x in b)
    )


def vertices(P: HPolyhedron) -> list[tuple]:
    """Vertices of a bounded polyhedron by brute force over row subsets.

    Only meant for small instances (test oracles and invariant checks).
    """
    if not P.A:
        return []
    A, b = irredundant(P.A, P.b)
    n = P.dim
    found = set()
    for S in itertools.combinations(range(len(A)), n):
        x = solve([A[i] for i in S], [b[i] for i in S])
        if x is None:
            continue
        if all(dot(row, x) <= bi for row, bi in zip(A, b)):
            found.add(x)
    return sorted(found)
