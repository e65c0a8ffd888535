import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from polymean.linalg import (
    affine_dim,
    dot,
    kernel_basis,
    mat,
    matvec,
    parse_rational,
    primitive,
    rank,
    solve,
    solve_any,
    to_q,
)

from . import oracles

small = st.integers(min_value=-6, max_value=6)
rationals = st.builds(lambda p, q: mpq(p, q), st.integers(-20, 20), st.integers(1, 9))


def matrices(max_rows=5, max_cols=5):
    return st.integers(1, max_cols).flatmap(
        lambda c: st.lists(st.lists(rationals, min_size=c, max_size=c), min_size=1, max_size=max_rows)
    )


@pytest.mark.parametrize(
    "text,value",
    [("3/4", mpq(3, 4)), ("-2", mpq(-2)), ("−5/3", mpq(-5, 3)), ("6/4", mpq(3, 2)), ("0", mpq(0))],
)
def test_parse_rational(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("text", ["1/0", "1.5", " 2", "2/", "", "--1", "1/-2"])
def test_parse_rational_rejects(text):
    with pytest.raises(ValueError):
        parse_rational(text)


def test_float_conversion_is_exact():
    assert to_q(0.1) == mpq(3602879701896397, 36028797018963968)


def test_rank_examples():
    assert rank(mat([[1, 0], [0, 1]])) == 2
    assert rank(mat([[0] * 3] * 3)) == 0
    rows = mat([[1, 1, 0], [0, 1, 1], [1, 0, 3]])
    # determinant is 1*3 - 1*(0 - 1) = 4, so full rank
    assert oracles.gauss_rank(rows) == 3
    assert rank(rows) == 3


@given(matrices())
def test_rank_matches_oracle(M):
    assert rank(M) == oracles.gauss_rank(M)


@given(matrices())
def test_rank_of_transpose(M):
    assert rank(M) == rank([list(c) for c in zip(*M)])


@given(matrices())
def test_kernel_basis_annihilates(M):
    V = kernel_basis(M)
    ncols = len(M[0])
    assert rank(M) + len(V) == ncols
    for v in V:
        assert all(x == 0 for x in matvec(M, v))
    if V:
        assert rank(V) == len(V)


def test_kernel_examples():
    assert kernel_basis(mat([[1, 0], [0, 1]])) == []
    (v,) = kernel_basis(mat([[1, -1]]))
    assert v[0] == v[1] != 0
    # (-1,0,0) + (1,1,1) + (0,-1,-1) = 0: a positive kernel element of the columns
    cols = mat([[-1, 1, 0], [0, 1, -1], [0, 1, -1]])
    V = kernel_basis(cols)
    assert len(V) == 1
    v = V[0]
    assert all(x > 0 for x in v) or all(x < 0 for x in v)


def test_affine_dim_examples():
    assert affine_dim([(mpq(1), mpq(2))]) == 0
    assert affine_dim(mat([[0, 0], [1, 0], [2, 0]])) == 1
    cube = mat([[a, b, c] for a in (0, 1) for b in (0, 1) for c in (0, 1)])
    assert affine_dim(cube) == 3
    with pytest.raises(ValueError, match="empty point set"):
        affine_dim([])


@given(st.lists(st.lists(small, min_size=3, max_size=3), min_size=1, max_size=6), st.lists(small, min_size=3, max_size=3))
def test_affine_dim_translation_invariant(points, t):
    P = mat(points)
    shifted = [tuple(a + mpq(b) for a, b in zip(p, t)) for p in P]
    assert affine_dim(P) == affine_dim(shifted)


@given(st.integers(-50, 50), st.integers(1, 50), st.integers(1, 20))
def test_canonical_form(a, b, k):
    assert mpq(a, b) == mpq(k * a, k * b)
    assert str(mpq(a, b)) == str(mpq(k * a, k * b))


@given(st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.lists(small, min_size=n, max_size=n), min_size=n, max_size=n),
    st.lists(small, min_size=n, max_size=n))))
def test_solve_square(system):
    M, b = mat(system[0]), [mpq(x) for x in system[1]]
    x = solve(M, b)
    if oracles.gauss_rank(M) < len(M):
        assert x is None
    else:
        assert list(matvec(M, x)) == b
        assert tuple(map(oracles.frac, x)) == oracles.gauss_solve(M, b)


def test_solve_any():
    M = mat([[1, 1, 0]])
    x = solve_any(M, [mpq(2)], 3)
    assert dot(M[0], x) == 2
    assert solve_any(mat([[1, 1], [1, 1]]), [mpq(1), mpq(2)], 2) is None


def test_primitive():
    assert primitive((mpq(2, 3), mpq(-4, 3))) == (1, -2)
    assert primitive((mpq(0), mpq(0))) == (0, 0)
