import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nilzeta import intlinalg as il
from nilzeta.errors import InvalidDefiningPolynomial, PairingViolation
from nilzeta.localring import LocalRingSpec, TypeVector, check_spec, make_quotient

INERT_3 = LocalRingSpec(3, 1, 2, 2, (1, 0, 1))  # x^2 + 1 over Z_3
RAMIFIED_2 = LocalRingSpec(2, 2, 1, 2, (-2, 0, 1))  # x^2 - 2
RAMIFIED_3 = LocalRingSpec(3, 2, 1, 3, (-3, 0, 1))
INERT_2 = LocalRingSpec(2, 1, 2, 1, (1, 1, 1))

SMALL_SPECS = [
    LocalRingSpec(2, 1, 1, 3),
    LocalRingSpec(3, 1, 1, 2),
    LocalRingSpec(5, 1, 1, 1),
    INERT_2,
    INERT_3,
    RAMIFIED_2,
    RAMIFIED_3,
]


def test_integer_quotient_basics():
    ring = make_quotient(LocalRingSpec(3, 1, 1, 3))
    assert len(ring.elements()) == 27
    assert ring.pi_power(1) == 3
    assert ring.val(9) == 2 and ring.val(0) == 3


def test_galois_ring_of_order_81():
    ring = make_quotient(INERT_3)
    assert ring.q == 9
    assert len(list(ring.elements())) == 81
    for x in ring.units():
        assert ring.val(ring.mul(ring.from_int(3), x)) == 1


def test_ramified_uniformiser_squares_to_zero_at_level_two():
    ring = make_quotient(RAMIFIED_2)
    pi = ring.pi_power(1)
    assert ring.val(pi) == 1
    assert ring.is_zero(ring.mul(pi, pi))
    assert ring.val(ring.from_int(2)) == 2


@pytest.mark.parametrize(
    "spec,d,expected",
    [(LocalRingSpec(3, 1, 1, 1), 2, 8), (LocalRingSpec(3, 1, 1, 2), 1, 6), (INERT_2, 1, 3)],
)
def test_primitive_vector_counts(spec, d, expected):
    ring = make_quotient(spec)
    assert ring.count_W(d) == expected
    assert sum(1 for _ in ring.enumerate_W(d)) == expected


@pytest.mark.parametrize("spec", SMALL_SPECS)
def test_unit_orbits_partition_primitive_vectors(spec):
    ring = make_quotient(spec)
    d = 2
    full = set(ring.enumerate_W(d))
    seen = set()
    for rep in ring.unit_representatives(d):
        orbit = {tuple(ring.mul(u, t) for t in rep) for u in ring.units()}
        assert len(orbit) == ring.unit_count()
        assert not orbit & seen
        seen |= orbit
    assert seen == full


@pytest.mark.parametrize("spec", SMALL_SPECS)
def test_ring_axioms_and_valuation(spec):
    ring = make_quotient(spec)
    elems = list(ring.elements())
    rng = random.Random(1)
    for _ in range(300):
        x, y, z = (rng.choice(elems) for _ in range(3))
        assert ring.mul(ring.mul(x, y), z) == ring.mul(x, ring.mul(y, z))
        assert ring.mul(x, ring.add(y, z)) == ring.add(ring.mul(x, y), ring.mul(x, z))
        assert ring.val(ring.mul(x, y)) == min(ring.val(x) + ring.val(y), ring.N)
        if ring.is_unit(x):
            assert ring.mul(x, ring.inverse(x)) == ring.one
        if not ring.is_zero(x) and ring.val(y) >= ring.val(x):
            assert ring.mul(ring.divide(y, x), x) == y


def test_elementary_divisor_examples():
    z9 = make_quotient(LocalRingSpec(3, 1, 1, 2))
    assert z9.elementary_divisor_type([[1, 0], [0, 3]]) == (0, 1)
    assert z9.elementary_divisor_type([[3, 3], [3, 3]]) == (1, 2)
    assert z9.elementary_divisor_type([[0, 0, 0], [0, 0, 0]]) == (2, 2)
    assert z9.antisymmetric_type([[0, 1], [8, 0]]) == (0,)
    assert z9.antisymmetric_type([[0, 1, 0], [8, 0, 0], [0, 0, 0]]) == (0,)
    z27 = make_quotient(LocalRingSpec(3, 1, 1, 3))
    assert z27.antisymmetric_type([[0, 3], [24, 0]]) == (1,)


def test_pairing_violation():
    z9 = make_quotient(LocalRingSpec(3, 1, 1, 2))
    with pytest.raises(PairingViolation):
        z9.antisymmetric_type([[1, 0], [0, 3]])


def test_type_vector_orders_lexicographically():
    assert TypeVector((0,), ()) < TypeVector((1,), ())


def _random_invertible(ring, n, rng):
    """Permutation times unit-diagonal lower times upper triangular."""
    elems = list(ring.elements())
    units = list(ring.units())
    lower = [[ring.one if i == j else (rng.choice(elems) if j < i else ring.zero) for j in range(n)] for i in range(n)]
    upper = [[rng.choice(units) if i == j else (rng.choice(elems) if j > i else ring.zero) for j in range(n)] for i in range(n)]
    perm = list(range(n))
    rng.shuffle(perm)
    prod = _matmul(ring, lower, upper)
    return [prod[i] for i in perm]


def _matmul(ring, a, b):
    out = []
    for row in a:
        new = []
        for j in range(len(b[0])):
            acc = ring.zero
            for t, x in enumerate(row):
                acc = ring.add(acc, ring.mul(x, b[t][j]))
            new.append(acc)
        out.append(new)
    return out


@given(
    st.sampled_from(SMALL_SPECS),
    st.integers(1, 3),
    st.integers(1, 3),
    st.integers(0, 10**6),
)
def test_type_invariant_under_invertible_transforms(spec, rows, cols, seed):
    ring = make_quotient(spec)
    rng = random.Random(seed)
    elems = list(ring.elements())
    m = [[rng.choice(elems) for _ in range(cols)] for _ in range(rows)]
    base = ring.elementary_divisor_type(m)
    for _ in range(100):
        u = _random_invertible(ring, rows, rng)
        v = _random_invertible(ring, cols, rng)
        assert ring.elementary_divisor_type(_matmul(ring, _matmul(ring, u, m), v)) == base


@given(
    st.sampled_from([(2, 3), (3, 2), (5, 2), (7, 1)]),
    st.lists(st.lists(st.integers(-50, 50), min_size=3, max_size=3), min_size=2, max_size=3),
)
def test_type_matches_integer_smith_form(pn, m):
    p, N = pn
    ring = make_quotient(LocalRingSpec(p, 1, 1, N))
    reduced = [[x % p**N for x in row] for row in m]
    _, D, _ = il.smith_normal_form(m)
    divs = il.diagonal(D)
    divs += [0] * (min(len(m), 3) - len(divs))
    expected = tuple(sorted(min(il.p_valuation(x, p), N) if x else N for x in divs))
    assert ring.elementary_divisor_type(reduced) == expected


def test_spec_validation():
    with pytest.raises(InvalidDefiningPolynomial):
        check_spec(LocalRingSpec(3, 1, 2, 1, (-1, 0, 1)))  # x^2 - 1 splits
    with pytest.raises(InvalidDefiningPolynomial):
        check_spec(LocalRingSpec(3, 2, 1, 1, (-9, 0, 1)))  # not Eisenstein
    with pytest.raises(InvalidDefiningPolynomial):
        check_spec(LocalRingSpec(4, 1, 1, 1))
    with pytest.raises(InvalidDefiningPolynomial):
        LocalRingSpec.from_dict({"p": 3, "f": 2})
    spec = LocalRingSpec.from_dict({"p": 3, "f": 2, "N": 2, "g": [1, 0, 1]})
    assert LocalRingSpec.from_dict(spec.to_dict()) == spec
