import math
from fractions import Fraction

import pytest
import sympy

from nilzeta.arith import (
    GlobalCoefficients,
    NumberField,
    Ray,
    RayData,
    asymptotics,
    check_multiplicativity,
    coarse_factor,
    dedekind_residue,
    dedekind_zeta_2,
    dirichlet_l_2,
    estimate_abscissa_empirical,
    euler_product,
    global_abscissa,
    local_pole_set,
    pole_order,
    rays_from_fit,
    riemann_zeta_2,
    ring_specs,
    split_prime,
    vp_approximation,
)
from nilzeta.errors import EmptyRayData, InsufficientData, MissingLocalFactor
from nilzeta.zetafit import BivariateRational

HEIS_W = BivariateRational.from_terms({(0, 0): 1, (0, 1): -1}, [(1, 1)])
QI = NumberField(-1)
CATALAN = 0.915965594177219015


def gaussian_heisenberg(bound):
    """Coefficients of zeta_K(s-1)/zeta_K(s) for K = Q(i) by Dirichlet convolution."""

    def chi(n):
        return 0 if n % 2 == 0 else (1 if n % 4 == 1 else -1)

    ideals = [0] * (bound + 1)
    for d in range(1, bound + 1):
        if chi(d):
            for m in range(d, bound + 1, d):
                ideals[m] += chi(d)
    inverse = [0] * (bound + 1)
    inverse[1] = 1
    for n in range(2, bound + 1):
        inverse[n] = -sum(ideals[d] * inverse[n // d] for d in range(2, n + 1) if n % d == 0)
    shifted = [n * ideals[n] for n in range(bound + 1)]
    out = [0] * (bound + 1)
    for a in range(1, bound + 1):
        for b in range(1, bound // a + 1):
            out[a * b] += shifted[a] * inverse[b]
    return out


def test_splitting_in_gaussian_field():
    assert split_prime(QI, 5).factors == ((1, 1), (1, 1))
    assert split_prime(QI, 3).factors == ((1, 2),)
    assert split_prime(QI, 2).factors == ((2, 1),)
    assert [(s.e, s.f) for s in ring_specs(QI, 2)] == [(2, 1)]


def test_field_parsing():
    assert NumberField.parse("Q(i)") == QI
    assert NumberField.parse("Q(sqrt(-3))").discriminant == -3
    assert NumberField.parse(None).degree == 1
    with pytest.raises(ValueError):
        NumberField(-4)


def test_heisenberg_over_q_is_totient(heis):
    g = euler_product(heis, NumberField(1), N_bound=10)
    assert g.coeffs[1:] == [int(sympy.totient(n)) for n in range(1, 11)]


def test_heisenberg_over_gaussian_field(heis):
    g = euler_product(heis, QI, N_bound=200)
    assert g.coeffs[1] == 1 and g.coeffs[5] == 8
    assert g.coeffs[1:] == gaussian_heisenberg(200)[1:]


def test_fitted_factor_reproduces_enumeration(heis):
    a = euler_product(heis, QI, N_bound=300)
    b = euler_product(heis, QI, N_bound=300, local_factor=HEIS_W)
    assert a.coeffs == b.coeffs


def test_multiplicativity_and_coarse_grouping(heis):
    g = euler_product(heis, QI, N_bound=2000)
    assert check_multiplicativity(g) == []
    for p in sympy.primerange(2, 30):
        n = int(math.log(2000, p))
        assert coarse_factor(heis, QI, p, n) == [g.coeffs[p**k] for k in range(n + 1)]


def test_missing_local_factor(class3):
    with pytest.raises(MissingLocalFactor):
        euler_product(class3, NumberField(1), N_bound=20)
    g = euler_product(class3, NumberField(1), N_bound=20, allow_missing=True)
    assert g.skipped == [2, 3]


def test_pole_sets():
    assert local_pole_set(HEIS_W) == {Fraction(1)}
    assert local_pole_set(BivariateRational.from_terms({(0, 0): 1}, [])) == set()
    two = BivariateRational.from_terms({(0, 0): 1, (0, 1): -1}, [(1, 1), (2, 3)])
    assert local_pole_set(two) == {Fraction(1), Fraction(3, 2)}
    # a cancelled factor contributes no pole
    cancelled = BivariateRational.from_terms({(0, 0): 1, (1, 1): -1}, [(1, 1)])
    assert local_pole_set(cancelled) == set()


def test_global_abscissa_examples():
    assert global_abscissa(RayData.parse([[1, -1]]))[0] == 2
    assert global_abscissa(RayData.parse([[1, -1], [2, -1]]))[0] == 2
    assert global_abscissa(RayData.parse([[2, -1]]))[0] == 1
    with pytest.raises(EmptyRayData):
        global_abscissa(RayData([]))
    with pytest.raises(AssertionError):
        global_abscissa(RayData.parse([[2, -1]]), poles={Fraction(1)})


def test_pole_order_examples():
    assert pole_order(RayData.parse([[1, -1]])) == 1
    assert pole_order(RayData([Ray(Fraction(1), Fraction(-1)), Ray(Fraction(2), Fraction(-3))])) == 2
    assert pole_order(RayData.parse([[1, -1, 3]])) == 3


def test_rays_from_heisenberg_fit():
    rays = rays_from_fit(HEIS_W)
    assert (rays.rays[0].A, rays.rays[0].B, rays.rays[0].l) == (1, -1, 1)
    a, _ = global_abscissa(rays, local_pole_set(HEIS_W))
    assert a == 2 and pole_order(rays) == 1


def test_vp_compensated_product_converges():
    primes = list(sympy.primerange(2, 1001))
    rays = RayData.parse([[1, -1]])
    out = vp_approximation(rays, HEIS_W, primes, [2.5, 2.0])
    conv, div = out["table"]
    assert conv["digits"] > 6
    raw = [abs(row["euler"]) for row in div["partials"]]
    assert all(b > a for a, b in zip(raw, raw[1:]))
    assert raw[-1] > 5 * raw[0]
    empty = vp_approximation(rays, HEIS_W, [], [2.5])["table"][0]
    assert empty["euler"] == 1 and empty["compensated"] == 1


def test_zeta_values():
    assert abs(riemann_zeta_2() - math.pi**2 / 6) < 1e-12
    assert abs(dirichlet_l_2(-4) - CATALAN) < 1e-9
    assert abs(dedekind_zeta_2(QI) - math.pi**2 / 6 * CATALAN) < 1e-8
    assert abs(dedekind_residue(QI) - math.pi / 4) < 1e-15
    assert abs(dedekind_residue(NumberField(-3)) - math.pi / (3 * math.sqrt(3))) < 1e-15


def test_asymptotics_needs_data(heis):
    small = euler_product(heis, NumberField(1), N_bound=100)
    with pytest.raises(InsufficientData):
        asymptotics(small, 2)
    flat = GlobalCoefficients(2000, [0, 1] + [0] * 1999)
    with pytest.raises(InsufficientData):
        asymptotics(flat, 2)
    assert estimate_abscissa_empirical(flat)["degenerate"]


def test_empirical_abscissa(heis_global_q):
    lo, hi = 1.95, 2.05
    assert lo <= estimate_abscissa_empirical(heis_global_q)["slope"] <= hi
    ones = GlobalCoefficients(10**4, [0] + [1] * 10**4)
    assert 0.95 <= estimate_abscissa_empirical(ones)["slope"] <= 1.05


def test_tauberian_constant_over_q(heis_global_q):
    c = asymptotics(heis_global_q, 2, 1)["c_estimate"]
    assert abs(c - 3 / math.pi**2) / (3 / math.pi**2) < 0.01


def test_tauberian_constant_over_gaussian_field_with_residue(heis_global_qi):
    # the leading constant carries the residue of the Dedekind zeta function
    target = dedekind_residue(QI) / (2 * dedekind_zeta_2(QI))
    c = asymptotics(heis_global_qi, 2, 1)["c_estimate"]
    assert abs(c - target) / target < 0.01
