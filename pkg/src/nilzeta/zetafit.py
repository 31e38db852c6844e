"""Exact rational-function fits for truncated local zeta series.

Denominators are products of Denef-type factors ``1 - q^b t^a``. A fit is
accepted only when the numerator it implies has at most ``deg_max`` terms
and at least one certified coefficient is left over as a check.
Everything here is exact: ints, Fractions and sympy rationals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Any, Iterable, Sequence

import sympy

from .errors import AmbiguousFitWarning, NoFitFound, NoUniformFit, NonIntegralCoefficient
from .poincare import LocalZetaSeries

Factor = tuple[int, int]  # (a, b) meaning 1 - X^b Y^a

X, Y = sympy.symbols("X Y")


@dataclass(frozen=True)
class FitBounds:
    a_max: int = 4
    b_max: int = 6
    max_factors: int = 4
    deg_max: int = 8
    xdeg_max: int = 8


def _coeffs(series: LocalZetaSeries | Sequence[int]) -> list[int]:
    return list(series.coeffs) if isinstance(series, LocalZetaSeries) else list(series)


def _poly_mul(a: Sequence, b: Sequence, n: int) -> list:
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[: n - i]):
                out[i + j] += x * y
    return out


def _den_poly(factors: Iterable[Factor], q, n: int) -> list:
    poly = [1] + [0] * (n - 1)
    for a, b in factors:
        if a < n:
            fac = [0] * n
            fac[0] = 1
            fac[a] = -(q**b)
            poly = _poly_mul(poly, fac, n)
    return poly


def _times_den(coeffs: Sequence, factors: Iterable[Factor], q) -> list:
    """Truncated product of a series with prod(1 - q^b t^a), one factor at a time."""
    out = list(coeffs)
    for a, b in factors:
        s = q**b
        for i in range(len(out) - 1, a - 1, -1):
            out[i] -= s * out[i - a]
    return out


def _series_div(num: Sequence, den: Sequence, n: int) -> list:
    """Power series num/den to n terms; den[0] == 1."""
    out = []
    for i in range(n):
        s = num[i] if i < len(num) else 0
        for j in range(1, min(i, len(den) - 1) + 1):
            s -= den[j] * out[i - j]
        out.append(s)
    return out


def _degree(poly: Sequence) -> int:
    for i in range(len(poly) - 1, -1, -1):
        if poly[i]:
            return i
    return -1


@lru_cache(maxsize=16)
def _candidates(a_max: int, b_max: int, max_factors: int) -> tuple[tuple[Factor, ...], ...]:
    pairs = [(a, b) for a in range(1, a_max + 1) for b in range(0, b_max + 1)]
    out: list[tuple[Factor, ...]] = []
    for size in range(max_factors + 1):
        out.extend(combinations_with_replacement(pairs, size))
    return tuple(out)


# --- univariate ------------------------------------------------------------


@dataclass(frozen=True)
class UnivariateRational:
    q: int
    num: tuple[Fraction, ...]
    den: tuple[Factor, ...]

    def expand(self, n: int) -> list[Fraction]:
        return _series_div(list(self.num) + [0] * n, _den_poly(self.den, self.q, n), n)

    def to_sympy(self, t: sympy.Symbol | None = None):
        t = t or sympy.Symbol("t")
        num = sum(sympy.Rational(c.numerator, c.denominator) * t**i for i, c in enumerate(self.num))
        den = sympy.Mul(*[1 - self.q**b * t**a for a, b in self.den])
        return num / den

    def to_dict(self) -> dict[str, Any]:
        return {"q": self.q, "num": [str(c) for c in self.num], "den": [list(f) for f in self.den]}


def _accepts(num_deg: int, n_factors: int, n_coeffs: int, deg_max: int) -> bool:
    return num_deg <= deg_max and n_coeffs >= (num_deg + 1) + n_factors + 1


def fit_univariate(
    series: LocalZetaSeries | Sequence[int],
    q: int | None = None,
    bounds: FitBounds = FitBounds(),
) -> UnivariateRational:
    """Minimal Denef-type rational function reproducing every coefficient.

    Candidates are ordered by number of denominator factors, then numerator
    degree, then the sorted factor list.
    """
    coeffs = _coeffs(series)
    if q is None:
        q = series.q  # type: ignore[union-attr]
    n = len(coeffs)
    best = None
    for factors in _candidates(bounds.a_max, bounds.b_max, bounds.max_factors):
        if best is not None and len(factors) > len(best[1]):
            break
        num = _times_den(coeffs, factors, q)
        deg = _degree(num)
        if not _accepts(deg, len(factors), n, bounds.deg_max):
            continue
        cand = (deg, factors, num[: deg + 1])
        if best is None:
            best = cand
            rivals = []
        elif deg < best[0]:
            rivals.append(best)
            best = cand
        else:
            rivals.append(cand)
    if best is None:
        raise NoFitFound(
            "no Denef-type fit within bounds",
            q=q,
            n_coeffs=n,
            bounds=vars(bounds),
        )
    deg, factors, num = best
    fit = UnivariateRational(q, tuple(Fraction(c) for c in num), tuple(factors))
    for _, other_f, other_num in rivals:
        other = UnivariateRational(q, tuple(Fraction(c) for c in other_num), tuple(other_f))
        if sympy.simplify(fit.to_sympy() - other.to_sympy()) != 0:
            warnings.warn(
                AmbiguousFitWarning(
                    f"fits {list(factors)} and {list(other_f)} agree to order {n - 1} but differ beyond"
                ),
                stacklevel=2,
            )
            break
    return fit


# --- bivariate -------------------------------------------------------------


@dataclass(frozen=True)
class BivariateRational:
    """``W(X, Y) = num / prod(1 - X^b Y^a)``; ``num[(i, j)]`` is the X^i Y^j coefficient."""

    num: tuple[tuple[tuple[int, int], Fraction], ...]
    den: tuple[Factor, ...]

    @classmethod
    def from_terms(cls, terms: dict[tuple[int, int], Fraction], den: Iterable[Factor]) -> "BivariateRational":
        clean = tuple(sorted((k, Fraction(v)) for k, v in terms.items() if v))
        return cls(clean, tuple(sorted(den)))

    @property
    def terms(self) -> dict[tuple[int, int], Fraction]:
        return dict(self.num)

    def numerator_sympy(self):
        return sum(
            (sympy.Rational(c.numerator, c.denominator) * X**i * Y**j for (i, j), c in self.num),
            sympy.Integer(0),
        )

    def denominator_sympy(self):
        return sympy.Mul(*[1 - X**b * Y**a for a, b in self.den])

    def to_sympy(self):
        return self.numerator_sympy() / self.denominator_sympy()

    def numerator_in_t(self, q) -> list:
        """Numerator coefficients in Y after X = q (exact)."""
        deg = max((j for (_, j), _ in self.num), default=0)
        out = [Fraction(0)] * (deg + 1)
        for (i, j), c in self.num:
            out[j] += c * Fraction(q) ** i
        return out

    def specialize(self, q: int) -> UnivariateRational:
        return UnivariateRational(q, tuple(self.numerator_in_t(q)), self.den)

    def expand(self, q, n: int) -> list[Fraction]:
        num = self.numerator_in_t(q)
        return _series_div(num + [0] * n, _den_poly(self.den, Fraction(q), n), n)

    def to_dict(self) -> dict[str, Any]:
        return {
            "num": [[i, j, _rat(c)] for (i, j), c in self.num],
            "den": [[a, b] for a, b in self.den],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "BivariateRational":
        terms = {(int(i), int(j)): Fraction(c) for i, j, c in data["num"]}
        return cls.from_terms(terms, [(int(a), int(b)) for a, b in data.get("den", [])])


def _rat(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _interpolate(points: Sequence[tuple[int, Fraction]]) -> list[Fraction]:
    """Coefficients (low to high) of the unique polynomial through ``points``."""
    n = len(points)
    coeffs = [Fraction(0)] * n
    for i, (xi, yi) in enumerate(points):
        if not yi:
            continue
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            basis = [Fraction(0)] + basis
            for k in range(len(basis) - 1):
                basis[k] -= xj * basis[k + 1]
            denom *= xi - xj
        for k in range(n):
            coeffs[k] += yi * basis[k] / denom
    return coeffs


def _try_uniform(data, n, factors, bounds):
    nums = []
    for q, coeffs in data:
        num = _times_den(coeffs, factors, q)
        deg = _degree(num)
        if not _accepts(deg, len(factors), n, bounds.deg_max):
            return None
        nums.append(num)
    deg = max(_degree(num) for num in nums)
    xdeg_cap = min(bounds.xdeg_max, len(data) - 2)
    terms: dict[tuple[int, int], Fraction] = {}
    for j in range(deg + 1):
        poly = _interpolate([(q, Fraction(num[j])) for (q, _), num in zip(data, nums)])
        if _degree(poly) > xdeg_cap:
            return None
        for i, c in enumerate(poly):
            if c:
                terms[(i, j)] = c
    return deg, terms


def fit_uniform(
    data: Sequence[tuple[int, LocalZetaSeries | Sequence[int]]],
    bounds: FitBounds = FitBounds(),
) -> BivariateRational:
    """One W(X, Y) whose specialization at X = q reproduces every series.

    Numerator coefficients are interpolated in X through all supplied q; a
    polynomial is accepted only if its degree leaves at least one q as a check.
    """
    prepared = [(int(q), _coeffs(s)) for q, s in data]
    qs = [q for q, _ in prepared]
    if len(set(qs)) < 3 or len(set(qs)) != len(qs):
        raise NoUniformFit("need at least three distinct residue cardinalities", qs=qs)
    n = min(len(c) for _, c in prepared)
    prepared = [(q, c[:n]) for q, c in prepared]
    best = None
    for factors in _candidates(bounds.a_max, bounds.b_max, bounds.max_factors):
        if best is not None and len(factors) > len(best[1]):
            break
        found = _try_uniform(prepared, n, factors, bounds)
        if found is None:
            continue
        deg, terms = found
        if best is None or deg < best[0]:
            best = (deg, factors, terms)
    if best is None:
        raise NoUniformFit("no uniform fit within bounds", qs=qs, n_coeffs=n, **_pinpoint(prepared, bounds))
    _, factors, terms = best
    return BivariateRational.from_terms(terms, factors)


def _pinpoint(prepared, bounds) -> dict[str, Any]:
    if len(prepared) < 4:
        return {}
    for drop in range(len(prepared)):
        rest = prepared[:drop] + prepared[drop + 1 :]
        try:
            w = fit_uniform(rest, bounds)
        except NoUniformFit:
            continue
        q, coeffs = prepared[drop]
        predicted = w.expand(q, len(coeffs))
        for n, (got, want) in enumerate(zip(coeffs, predicted)):
            if got != want:
                return {"inconsistent_q": q, "first_bad_n": n, "observed": str(got), "expected": str(want)}
    return {}


def predict(w: BivariateRational, q: int, n_max: int) -> LocalZetaSeries:
    coeffs = w.expand(q, n_max + 1)
    out = []
    for n, c in enumerate(coeffs):
        if c.denominator != 1 or c < 0:
            raise NonIntegralCoefficient("prediction is not a nonnegative integer", q=q, n=n, value=str(c))
        out.append(int(c))
    return LocalZetaSeries(q=q, coeffs=out, n_max=n_max, N_max=0)


# --- functional equation ---------------------------------------------------


@dataclass(frozen=True)
class FunctionalEquation:
    sign: int
    x_exp: int
    y_exp: int

    def to_dict(self) -> dict[str, int]:
        return {"sign": self.sign, "a": self.x_exp, "b": self.y_exp}


def check_functional_equation(w: BivariateRational) -> FunctionalEquation | None:
    """Certificate (eps, a, b) with W(1/X, 1/Y) = eps X^a Y^b W(X, Y), if one exists."""
    expr = w.to_sympy()
    if expr == 0:
        return None
    ratio = sympy.cancel(sympy.together(expr.subs({X: 1 / X, Y: 1 / Y}, simultaneous=True) / expr))
    num, den = sympy.fraction(ratio)
    num_p = sympy.Poly(num, X, Y)
    den_p = sympy.Poly(den, X, Y)
    if len(num_p.terms()) != 1 or len(den_p.terms()) != 1:
        return None
    (ne, nc), = num_p.terms()
    (de, dc), = den_p.terms()
    c = sympy.Rational(nc) / sympy.Rational(dc)
    if c not in (1, -1):
        return None
    cert = FunctionalEquation(int(c), ne[0] - de[0], ne[1] - de[1])
    if not verify_functional_equation(w, cert):
        return None
    return cert


def _laurent_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (i1, j1), c1 in a.items():
        for (i2, j2), c2 in b.items():
            key = (i1 + i2, j1 + j2)
            out[key] = out.get(key, 0) + c1 * c2
    return {k: v for k, v in out.items() if v}


def verify_functional_equation(w: BivariateRational, cert: FunctionalEquation) -> bool:
    """Cross-multiplied identity checked on Laurent polynomials, without sympy."""
    num = {k: v for k, v in w.num}
    num_inv = {(-i, -j): v for (i, j), v in w.num}
    den = {(0, 0): Fraction(1)}
    den_inv = {(0, 0): Fraction(1)}
    for a, b in w.den:
        den = _laurent_mul(den, {(0, 0): 1, (b, a): -1})
        den_inv = _laurent_mul(den_inv, {(0, 0): 1, (-b, -a): -1})
    lhs = _laurent_mul(num_inv, den)
    rhs = _laurent_mul(_laurent_mul(num, den_inv), {(cert.x_exp, cert.y_exp): cert.sign})
    return lhs == rhs
