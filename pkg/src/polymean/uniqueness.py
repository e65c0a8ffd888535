"""Combinatorial conditions for a unique Fréchet mean and the sample threshold.

A face type is a tuple of proper polar faces ``G_1..G_n``.  It occurs with
positive probability iff

* possible: ``0`` lies in the relative interior of ``conv(G_1 u ... u G_n)``,
* positive_probability: ``sum dim G_i = dim sum aff G_i``,

and the Fréchet mean is then a single point iff additionally

* unique: ``conv(G_1 u ... u G_n)`` is full-dimensional.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

from gmpy2 import mpq

from . import lp
from .linalg import affine_dim, rank, rref, sub
from .polytope import PolarFace, PolytopeNorm, enumerate_polar_faces, format_matrix_text

_ZERO = mpq(0)
_ONE = mpq(1)


class ThresholdNotFound(RuntimeError):
    def __init__(self, message, refutations):
        super().__init__(message)
        self.refutations = refutations


@dataclass(frozen=True)
class ConditionReport:
    possible: bool
    positive_probability: bool
    unique: bool
    predicted_fm_dim: int

    @property
    def occurs(self) -> bool:
        return self.possible and self.positive_probability

    @property
    def all_hold(self) -> bool:
        return self.possible and self.positive_probability and self.unique


def _union(faces: Sequence[PolarFace]) -> list[int]:
    if not faces:
        raise ValueError("faces must be nonempty")
    return sorted({i for F in faces for i in F.vertex_indices})


def _zero_in_relint(points: Sequence) -> bool:
    """Exact LP: max t with sum x_j p_j = 0, sum x_j = 1, x_j >= t."""
    m = len(points)
    k = len(points[0])
    # variables (x_1..x_m, t); minimise -t
    c = [_ZERO] * m + [-_ONE]
    A, b = [], []
    for j in range(m):
        row = [_ZERO] * (m + 1)
        row[j] = -_ONE
        row[m] = _ONE
        A.append(row)
        b.append(_ZERO)
    E = [[p[r] for p in points] + [_ZERO] for r in range(k)]
    f = [_ZERO] * k
    E.append([_ONE] * m + [_ZERO])
    f.append(_ONE)
    out = lp.minimize(c, A, b, E, f)
    return out.optimal and -out.value > 0


def check_possible(norm: PolytopeNorm, faces: Sequence[PolarFace]) -> bool:
    return _zero_in_relint([norm.A[i] for i in _union(faces)])


def _directions(norm: PolytopeNorm, F: PolarFace) -> list:
    verts = F.vertices(norm)
    return [sub(v, verts[0]) for v in verts[1:]]


def check_positive_probability(norm: PolytopeNorm, faces: Sequence[PolarFace]) -> bool:
    if not faces:
        raise ValueError("faces must be nonempty")
    rows = [d for F in faces for d in _directions(norm, F)]
    return sum(F.dim for F in faces) == rank(rows)


def check_unique(norm: PolytopeNorm, faces: Sequence[PolarFace]) -> bool:
    return affine_dim([norm.A[i] for i in _union(faces)]) == norm.k


def predicted_fm_dim(norm: PolytopeNorm, faces: Sequence[PolarFace]) -> int:
    return norm.k - affine_dim([norm.A[i] for i in _union(faces)])


def condition_report(norm: PolytopeNorm, faces: Sequence[PolarFace]) -> ConditionReport:
    faces = list(faces)
    return ConditionReport(
        possible=check_possible(norm, faces),
        positive_probability=check_positive_probability(norm, faces),
        unique=check_unique(norm, faces),
        predicted_fm_dim=predicted_fm_dim(norm, faces),
    )


def check_inductive_extension(
    norm: PolytopeNorm, faces: Sequence[PolarFace], new_facet: PolarFace
) -> bool:
    """Does appending ``new_facet`` keep a passing tuple passing?

    ``new_facet`` must be a single polar vertex taken from ``faces[0]``.
    Failing tuples satisfy the implication vacuously.
    """
    faces = list(faces)
    if (
        not faces
        or len(new_facet.vertex_indices) != 1
        or new_facet.vertex_indices[0] not in faces[0].vertex_indices
    ):
        raise ValueError("not a facet extension")
    if not condition_report(norm, faces).all_hold:
        return True
    return condition_report(norm, faces + [new_facet]).all_hold


# --------------------------------------------------------------------------
# threshold search


@dataclass
class ThresholdCertificate:
    norm_name: str
    norm_hash: str
    N: int
    witness_faces: tuple
    # n -> (canonical multisets, leaves tested after pruning); all failed
    refutations: dict = field(default_factory=dict)

    def to_text(self, norm: PolytopeNorm | None = None) -> str:
        lines = [
            f"norm {self.norm_name}",
            f"hash {self.norm_hash}",
            f"N {self.N}",
        ]
        for F in self.witness_faces:
            lines.append("witness " + " ".join(str(i) for i in F.vertex_indices))
        for n in sorted(self.refutations):
            total, leaves = self.refutations[n]
            lines.append(f"refuted n={n} multisets={total} tested={leaves}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, norm: PolytopeNorm) -> "ThresholdCertificate":
        name = digest = None
        N = None
        witness = []
        refutations = {}
        for line in text.splitlines():
            key, _, rest = line.partition(" ")
            if key == "norm":
                name = rest
            elif key == "hash":
                digest = rest
            elif key == "N":
                N = int(rest)
            elif key == "witness":
                witness.append(norm.face(int(t) for t in rest.split()))
            elif key == "refuted":
                parts = dict(p.split("=") for p in rest.split())
                refutations[int(parts["n"])] = (int(parts["multisets"]), int(parts["tested"]))
            elif line.strip():
                raise ValueError(f"unrecognised certificate line {line!r}")
        if N is None or digest is None:
            raise ValueError("incomplete certificate")
        return cls(name or "", digest, N, tuple(witness), refutations)


def norm_hash(norm: PolytopeNorm) -> str:
    return hashlib.sha256(format_matrix_text(norm.A).encode()).hexdigest()[:16]


class _Echelon:
    """Incremental row echelon form used to test linear independence."""

    __slots__ = ("rows",)

    def __init__(self, rows=()):
        self.rows = list(rows)  # (pivot column, row) with row[pivot] == 1

    def extend(self, vectors) -> "_Echelon | None":
        """New echelon with ``vectors`` appended, or None if they are dependent."""
        rows = list(self.rows)
        for v in vectors:
            v = list(v)
            for p, r in rows:
                if v[p]:
                    f = v[p]
                    v = [a - f * b for a, b in zip(v, r)]
            p = next((j for j, a in enumerate(v) if a), None)
            if p is None:
                return None
            piv = v[p]
            rows.append((p, [a / piv for a in v]))
        return _Echelon(rows)


class _Search:
    def __init__(self, norm: PolytopeNorm, faces: Sequence[PolarFace]):
        self.norm = norm
        self.k = norm.k
        self.faces = sorted(faces, key=lambda F: F.vertex_indices)
        self.masks = [sum(1 << i for i in F.vertex_indices) for F in self.faces]
        # a basis of each face's direction space (faces need not be simplices)
        self.dirs = [rref(_directions(norm, F))[0] for F in self.faces]
        self.dims = [F.dim for F in self.faces]
        self._leaf_cache: dict[int, bool] = {}

    def leaf_ok(self, mask: int) -> bool:
        hit = self._leaf_cache.get(mask)
        if hit is None:
            pts = [self.norm.A[i] for i in range(self.norm.r) if mask >> i & 1]
            hit = affine_dim(pts) == self.k and _zero_in_relint(pts)
            self._leaf_cache[mask] = hit
        return hit

    def run(self, n: int, first_only: bool = True):
        """DFS over non-decreasing index tuples; yields passing tuples.

        Prefix pruning: the direction vectors of the chosen faces must stay
        independent (otherwise the dimension condition fails for every
        extension), and the union must still be able to reach ``k + 1``
        points.
        """
        k = self.k
        m = len(self.faces)
        self.leaves = 0
        stack = [(0, 0, 0, 0, _Echelon(), ())]
        while stack:
            start, depth, sdim, mask, ech, chosen = stack.pop()
            if depth == n:
                self.leaves += 1
                if self.leaf_ok(mask):
                    yield chosen
                    if first_only:
                        return
                continue
            remaining = n - depth
            children = []
            for j in range(start, m):
                nd = sdim + self.dims[j]
                if nd > k:
                    continue
                nmask = mask | self.masks[j]
                # at most one new point per face plus one per extra dimension
                if bin(nmask).count("1") + (k - nd) + (remaining - 1) < k + 1:
                    continue
                nech = ech.extend(self.dirs[j]) if self.dims[j] else ech
                if nech is None:
                    continue
                children.append((j, depth + 1, nd, nmask, nech, chosen + (j,)))
            stack.extend(reversed(children))


def proper_faces(norm: PolytopeNorm, force: bool = False) -> list[PolarFace]:
    return [F for F in enumerate_polar_faces(norm, force=force) if F.dim <= norm.k - 1]


def passing_tuples(norm: PolytopeNorm, n: int, force: bool = False):
    """All canonical face multisets of size ``n`` passing the three conditions."""
    s = _Search(norm, proper_faces(norm, force))
    for idx in s.run(n, first_only=False):
        yield tuple(s.faces[j] for j in idx)


def threshold_search(
    norm: PolytopeNorm, n_max: int | None = None, force: bool = False
) -> ThresholdCertificate:
    """Smallest ``n`` for which some face multiset passes all three conditions.

    Multisets are explored in canonical order (faces sorted by vertex-index
    tuple, indices non-decreasing); the first passing one is the witness.
    """
    n_max = norm.k + 1 if n_max is None else n_max
    faces = proper_faces(norm, force)
    s = _Search(norm, faces)
    refutations = {}
    for n in range(2, n_max + 1):
        hit = next(s.run(n), None)
        if hit is not None:
            return ThresholdCertificate(
                norm_name=norm.name or "",
                norm_hash=norm_hash(norm),
                N=n,
                witness_faces=tuple(s.faces[j] for j in hit),
                refutations=refutations,
            )
        refutations[n] = (comb(len(faces) + n - 1, n), s.leaves)
    raise ThresholdNotFound(f"no passing face type up to n={n_max}", refutations)


def refute_all(norm: PolytopeNorm, n: int, force: bool = False) -> int:
    """Brute-force count of size-``n`` multisets passing all three conditions.

    No pruning beyond canonical ordering; meant as an oracle for small cases.
    """
    from itertools import combinations_with_replacement

    faces = proper_faces(norm, force)
    return sum(
        condition_report(norm, list(t)).all_hold
        for t in combinations_with_replacement(faces, n)
    )


def verify_certificate(norm: PolytopeNorm, cert: ThresholdCertificate) -> bool:
    """Check the witness and the norm fingerprint; refutations are recomputed."""
    if cert.norm_hash != norm_hash(norm) or len(cert.witness_faces) != cert.N:
        return False
    if not condition_report(norm, cert.witness_faces).all_hold:
        return False
    again = threshold_search(norm, cert.N)
    return again.N == cert.N and again.refutations == cert.refutations
