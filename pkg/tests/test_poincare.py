import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from nilzeta.errors import ExcludedPrime, KirillovInapplicable, TruncationUnstable
from nilzeta.lattice import adapt_basis, direct_sum_abelian, rescale
from nilzeta.localring import LocalRingSpec, TypeVector, make_quotient
from nilzeta.poincare import count_types, local_zeta, stabilization_check

from conftest import corpus

t = sympy.Symbol("t")


def series(expr, n):
    """Taylor coefficients of ``expr`` in t up to t^n, via sympy."""
    poly = sympy.series(expr, t, 0, n + 1).removeO()
    return [int(poly.coeff(t, k)) for k in range(n + 1)]


def heisenberg_expected(q, n):
    return series((1 - t) / (1 - q * t), n)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_heisenberg_local_factor(heis, p):
    assert local_zeta(heis, LocalRingSpec(p), 4).coeffs == heisenberg_expected(p, 4)


def test_heisenberg_q3_values(heis):
    s = local_zeta(heis, LocalRingSpec(3), 3)
    assert s.coeffs == [1, 2, 6, 18]
    assert s.levels == {0: 0, 1: 1, 2: 2, 3: 3}


def test_heisenberg_inert_and_ramified(heis):
    inert = local_zeta(heis, LocalRingSpec(3, 1, 2, 1, (1, 0, 1)), 2)
    assert (inert.q, inert.coeffs) == (9, [1, 8, 72])
    ram = local_zeta(heis, LocalRingSpec(2, 2, 1, 1, (-2, 0, 1)), 2)
    assert (ram.q, ram.coeffs) == (2, [1, 1, 2])


def test_type_tables(heis, heis_z):
    for N, count in ((1, 2), (2, 6)):
        ring = make_quotient(LocalRingSpec(3, 1, 1, N))
        table = count_types(adapt_basis(heis, 3), ring)
        assert table.counts == {TypeVector((0,), ()): count}
        assert count_types(adapt_basis(heis_z, 3), ring).counts == table.counts


def test_free_class2_three_generators(free3):
    assert local_zeta(free3, LocalRingSpec(3), 2).coeffs == [1, 26, 702]


def test_class3_example_at_good_prime(class3):
    s = local_zeta(class3, LocalRingSpec(5), 3)
    assert s.coeffs == series((1 - t) ** 2 / (1 - 5 * t) ** 2, 3)


def test_kirillov_rule_at_two(class3):
    with pytest.raises(KirillovInapplicable):
        local_zeta(class3, LocalRingSpec(2), 1)
    s = local_zeta(class3, LocalRingSpec(2), 1, commensurable=True)
    assert s.abscissa_only and s.rescaled_by == 1


def test_excluded_prime(class3):
    with pytest.raises(ExcludedPrime) as info:
        local_zeta(class3, LocalRingSpec(3), 1)
    assert info.value.details["exclusion_index"] == "36"
    s = local_zeta(class3, LocalRingSpec(3), 2, commensurable=True)
    assert s.abscissa_only and s.coeffs[0] == 1


def test_stabilization(heis):
    report = stabilization_check(heis, LocalRingSpec(3), 3, 3)
    assert report["stable"]
    with pytest.raises(TruncationUnstable):
        stabilization_check(heis, LocalRingSpec(3), 3, 2)
    with pytest.raises(TruncationUnstable):
        local_zeta(heis, LocalRingSpec(3), 3, N_max=2)


@pytest.mark.parametrize("name", ["heisenberg", "heisenberg_plus_abelian"])
def test_single_centre_coordinate_contributes_at_level_n(name):
    s = local_zeta(corpus(name), LocalRingSpec(5), 3)
    assert s.levels == {n: n for n in range(4)}


GOOD = [
    ("heisenberg", 2, 4),
    ("heisenberg", 7, 2),
    ("heisenberg_plus_abelian", 3, 3),
    ("free_class2_3gen", 2, 2),
    ("class3_example", 5, 2),
    ("class3_example", 7, 2),
]


@pytest.mark.parametrize("name,p,n", GOOD)
def test_coefficients_are_nonnegative_integers(name, p, n):
    s = local_zeta(corpus(name), LocalRingSpec(p), n)
    assert s.coeffs[0] == 1
    assert all(isinstance(c, int) and c >= 0 for c in s.coeffs)


SMALL = [
    ("heisenberg", LocalRingSpec(3, 1, 1, 2)),
    ("heisenberg", LocalRingSpec(3, 1, 2, 1, (1, 0, 1))),
    ("heisenberg", LocalRingSpec(2, 2, 1, 2, (-2, 0, 1))),
    ("heisenberg_plus_abelian", LocalRingSpec(2, 1, 1, 2)),
    ("free_class2_3gen", LocalRingSpec(2, 1, 1, 1)),
    ("class3_example", LocalRingSpec(5, 1, 1, 1)),
    ("class3_example", LocalRingSpec(7, 1, 1, 1)),
]


@pytest.mark.parametrize("name,spec", SMALL)
def test_unit_orbit_reduction_equals_full_enumeration(name, spec):
    basis = adapt_basis(corpus(name), spec.p)
    ring = make_quotient(spec)
    assert count_types(basis, ring).counts == count_types(basis, ring, full=True).counts


@given(st.sampled_from(["heisenberg", "free_class2_3gen"]), st.sampled_from([2, 3, 5]), st.integers(1, 2))
def test_direct_sum_stability(name, p, m):
    lat = corpus(name)
    n = 2 if name == "heisenberg" else 1
    assert local_zeta(direct_sum_abelian(lat, m), LocalRingSpec(p), n).coeffs == local_zeta(lat, LocalRingSpec(p), n).coeffs


@pytest.mark.parametrize("q", [2, 3])
def test_commensurability_inequality(heis, q):
    a = heis.h  # residue degree 1
    g = local_zeta(heis, LocalRingSpec(q), a + 2).coeffs
    h = local_zeta(rescale(heis, 1, q), LocalRingSpec(q), 2, commensurable=True).coeffs
    for n in range(3):
        assert sum(h[: n + 1]) <= q**a * sum(g[: a + n + 1])


def test_worker_count_does_not_change_results(free3, class3):
    for lat, p, n in ((free3, 3, 1), (class3, 5, 2)):
        one = local_zeta(lat, LocalRingSpec(p), n, workers=1)
        eight = local_zeta(lat, LocalRingSpec(p), n, workers=8)
        assert one.to_dict() == eight.to_dict()
        ring = make_quotient(LocalRingSpec(p, 1, 1, 1))
        basis = adapt_basis(lat, p)
        assert list(count_types(basis, ring, workers=1).counts.items()) == list(
            count_types(basis, ring, workers=8).counts.items()
        )


def test_workers_from_environment(heis, monkeypatch):
    monkeypatch.setenv("NILZETA_WORKERS", "2")
    assert local_zeta(heis, LocalRingSpec(3), 2).coeffs == [1, 2, 6]
