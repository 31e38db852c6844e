import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from nilzeta.errors import ClassHypothesisViolation, JacobiViolation, LatticeError, NotNilpotent
from nilzeta.lattice import (
    adapt_basis,
    commutator_level_bound,
    direct_sum_abelian,
    exclusion_index,
    generic_ranks,
    rescale,
    validate,
)

from conftest import corpus

CORPUS = ["heisenberg", "heisenberg_plus_abelian", "free_class2_3gen", "class3_example"]
PRIMES = [2, 3, 5, 7]


def test_heisenberg_validates(heis):
    assert (heis.h, heis.c) == (3, 2)
    assert heis.lcs_ranks[0] == 3


def test_sl2_like_bracket_is_rejected():
    with pytest.raises((JacobiViolation, NotNilpotent)):
        validate({"rank": 3, "brackets": [[1, 2, [0, 0, 1]], [1, 3, [0, 1, 0]]]})


def test_abelian_is_rejected():
    with pytest.raises(ClassHypothesisViolation):
        validate({"rank": 3, "brackets": []})


def test_jacobi_witness_is_one_based():
    raw = {"rank": 4, "brackets": [[1, 2, [0, 0, 1, 0]], [2, 3, [0, 0, 0, 1]], [1, 4, [0, 0, 0, 1]]]}
    with pytest.raises(JacobiViolation) as info:
        validate(raw)
    assert info.value.details["witness"] == [1, 2, 3]


def test_malformed_input():
    with pytest.raises(LatticeError):
        validate({"brackets": []})
    with pytest.raises(LatticeError):
        validate({"rank": 0})


def test_class3_needs_factorial_divisibility():
    with pytest.raises(ClassHypothesisViolation):
        validate({"rank": 4, "brackets": [[1, 2, [0, 0, 1, 0]], [1, 3, [0, 0, 0, 1]]]})
    assert corpus("class3_example").c == 3


def test_heisenberg_adapted_basis(heis):
    basis = adapt_basis(heis, 3)
    assert (basis.d, basis.k, basis.r, basis.b) == (1, 0, 2, (0,))
    assert basis.R_pretty() == [["0", "Y1"], ["-Y1", "0"]]


def test_heisenberg_plus_z_matches_heisenberg(heis, heis_z):
    a, b = adapt_basis(heis, 3), adapt_basis(heis_z, 3)
    assert (a.d, a.k, a.r) == (b.d, b.k, b.r)
    assert a.R_pretty() == b.R_pretty()


def test_class3_invariants(class3):
    basis = adapt_basis(class3, 5)
    assert (basis.d, basis.k, basis.r) == (2, 1, 3)
    assert basis.b == (0, 0)
    assert adapt_basis(class3, 3).b == (1, 1)
    assert exclusion_index(class3) == 36


@pytest.mark.parametrize("name", CORPUS)
def test_ranks_are_prime_independent(name):
    lat = corpus(name)
    shapes = {(b.d, b.k, b.r) for b in (adapt_basis(lat, p) for p in PRIMES)}
    assert len(shapes) == 1
    # r is the corank of the centre, computed independently over Q
    unit = [[int(i == j) for j in range(lat.h)] for i in range(lat.h)]
    ad = sympy.Matrix([[x for v in unit for x in lat.bracket(u, v)] for u in unit]).T
    assert adapt_basis(lat, 3).r == lat.h - len(ad.nullspace())


@pytest.mark.parametrize("name", CORPUS)
def test_f_basis_lies_in_span_of_last_e_vectors(name):
    basis = adapt_basis(corpus(name), 5)
    lo = basis.r - basis.k
    for coords in basis.f_in_e_coordinates():
        assert all(x.denominator == 1 for x in coords)
        assert all(x == 0 for i, x in enumerate(coords) if not lo <= i < lo + basis.d)


def test_rescale_examples(heis):
    r = rescale(heis, 1, 2)
    assert r.brackets == ((0, 1, (0, 0, 2)),)
    assert rescale(heis, 0, 2) is heis
    assert rescale(rescale(heis, 1, 3), 1, 3).brackets == rescale(heis, 2, 3).brackets


@given(st.sampled_from(CORPUS), st.sampled_from(PRIMES), st.integers(0, 2))
def test_rescale_shifts_b_vector(name, p, m):
    lat = corpus(name)
    before = adapt_basis(lat, p).b
    after = adapt_basis(rescale(lat, m, p), p).b
    assert after == tuple(x + m for x in before)


def _symbolic_rank(mat, d):
    ys = sympy.symbols(f"Y1:{d + 1}")
    if not mat or not mat[0]:
        return 0
    return sympy.Matrix([[sum(c * y for c, y in zip(v, ys)) for v in row] for row in mat]).rank()


@pytest.mark.parametrize(
    "name,expected",
    [("heisenberg", (2, 0)), ("heisenberg_plus_abelian", (2, 0)), ("free_class2_3gen", (2, 0))],
)
def test_generic_ranks_examples(name, expected):
    assert generic_ranks(adapt_basis(corpus(name), 3)) == expected


@pytest.mark.parametrize("name", CORPUS)
def test_generic_ranks_agree_with_symbolic_rank(name):
    basis = adapt_basis(corpus(name), 5)
    assert generic_ranks(basis) == (
        _symbolic_rank(basis.R_symbolic(), basis.d),
        _symbolic_rank(basis.S_symbolic(), basis.d),
    )


@pytest.mark.parametrize("name", CORPUS)
def test_generic_ranks_invariant_under_rescale(name):
    lat = corpus(name)
    assert generic_ranks(adapt_basis(lat, 3)) == generic_ranks(adapt_basis(rescale(lat, 1, 2), 3))


def test_direct_sum_builder(heis):
    s = direct_sum_abelian(heis, 2)
    assert s.h == 5 and s.c == 2
    assert (adapt_basis(s, 3).d, adapt_basis(s, 3).r) == (1, 2)


def test_level_bound(heis, class3):
    assert commutator_level_bound(adapt_basis(heis, 3)) == 0
    # the f-basis spans the derived lattice, so rescaling moves into b instead
    scaled = adapt_basis(rescale(heis, 2, 3), 3)
    assert commutator_level_bound(scaled) == 0 and scaled.b == (2,)
    assert commutator_level_bound(adapt_basis(class3, 5)) == 0
