"""Truncated local rings o/p^N for o = Z_p or a quadratic extension of Z_p.

Elements are plain Python values so inner loops stay cheap: an ``int`` for
Z/p^N and a pair ``(a, b)`` standing for ``a + b*x`` when ``e*f = 2``.
Valuations are always measured in the uniformizer (``p`` if unramified,
the image of ``x`` if ramified) and capped at N.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Any, Iterator, NamedTuple, Sequence

from .errors import InvalidDefiningPolynomial, PairingViolation


@dataclass(frozen=True)
class LocalRingSpec:
    p: int
    e: int = 1
    f: int = 1
    N: int = 1
    g: tuple[int, ...] = (0, 1)

    @property
    def q(self) -> int:
        return self.p**self.f

    def at_level(self, N: int) -> "LocalRingSpec":
        return LocalRingSpec(self.p, self.e, self.f, N, self.g)

    def to_dict(self) -> dict[str, Any]:
        return {"p": self.p, "e": self.e, "f": self.f, "N": self.N, "g": list(self.g)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LocalRingSpec":
        e, f = int(data.get("e", 1)), int(data.get("f", 1))
        default = (0, 1) if e * f == 1 else None
        g = data.get("g", default)
        if g is None:
            raise InvalidDefiningPolynomial("quadratic completions need a defining polynomial 'g'")
        return cls(int(data["p"]), e, f, int(data.get("N", 1)), tuple(int(x) for x in g))


class TypeVector(NamedTuple):
    """Elementary-divisor data of (R(y), S(y) diag(pi^b)), both nondecreasing."""

    a: tuple[int, ...]
    c: tuple[int, ...]


def _has_root_mod_p(g: Sequence[int], p: int) -> bool:
    return any(sum(c * pow(t, i, p) for i, c in enumerate(g)) % p == 0 for t in range(p))


def check_spec(spec: LocalRingSpec) -> None:
    p, e, f, g = spec.p, spec.e, spec.f, spec.g
    if p < 2 or any(p % t == 0 for t in range(2, int(p**0.5) + 1)):
        raise InvalidDefiningPolynomial("p must be prime", p=p)
    if (e, f) not in {(1, 1), (1, 2), (2, 1)}:
        raise InvalidDefiningPolynomial("only e*f <= 2 is supported", e=e, f=f)
    if spec.N < 0:
        raise InvalidDefiningPolynomial("level must be nonnegative", N=spec.N)
    if e * f == 1:
        return
    if len(g) != 3 or g[2] != 1:
        raise InvalidDefiningPolynomial("g must be monic of degree 2", g=list(g))
    if f == 2 and _has_root_mod_p(g, p):
        raise InvalidDefiningPolynomial("g is not irreducible mod p", g=list(g), p=p)
    if e == 2 and not (g[1] % p == 0 and g[0] % p == 0 and g[0] % (p * p) != 0):
        raise InvalidDefiningPolynomial("g is not Eisenstein at p", g=list(g), p=p)


class _RingBase:
    spec: LocalRingSpec
    N: int
    p: int
    q: int

    def val(self, x) -> int:  # pragma: no cover - overridden
        raise NotImplementedError

    def is_unit(self, x) -> bool:
        return self.N > 0 and self.val(x) == 0

    def is_zero(self, x) -> bool:
        return self.val(x) >= self.N

    # enumeration ---------------------------------------------------------

    def enumerate_W(self, d: int) -> Iterator[tuple]:
        """Each primitive d-tuple over o/p^N exactly once, lexicographically."""
        if self.N == 0:
            yield (self.zero,) * d
            return
        elems = list(self.elements())
        for y in itertools.product(elems, repeat=d):
            if any(self.val(t) == 0 for t in y):
                yield y

    def count_W(self, d: int) -> int:
        if self.N == 0:
            return 1
        return self.q ** (d * self.N) - self.q ** (d * (self.N - 1))

    def unit_count(self) -> int:
        return self.q ** (self.N - 1) * (self.q - 1) if self.N else 1

    def representative_tasks(self, d: int) -> list[tuple[int, tuple]]:
        """Disjoint work units covering primitive vectors up to unit scaling.

        A representative has its first unit coordinate equal to 1. Each task
        fixes that position and, when there is a later coordinate, the value
        of the next one; tasks can be consumed independently.
        """
        tasks = []
        for pos in range(d):
            if pos + 1 < d:
                tasks.extend((pos, (v,)) for v in self.elements())
            else:
                tasks.append((pos, ()))
        return tasks

    def iter_task(self, d: int, task: tuple[int, tuple]) -> Iterator[tuple]:
        pos, fixed = task
        head = list(self.nonunits()) if pos else []
        tail_len = d - pos - 1 - len(fixed)
        elems = list(self.elements()) if tail_len else []
        for pre in itertools.product(head, repeat=pos):
            for tail in itertools.product(elems, repeat=tail_len):
                yield pre + (self.one,) + fixed + tail

    def unit_representatives(self, d: int) -> Iterator[tuple]:
        """Representatives of W_N modulo units; each orbit has unit_count() elements."""
        if self.N == 0:
            yield (self.zero,) * d
            return
        for task in self.representative_tasks(d):
            yield from self.iter_task(d, task)

    # matrices ------------------------------------------------------------

    def elementary_divisor_type(self, matrix: Sequence[Sequence]) -> tuple[int, ...]:
        """Capped elementary-divisor exponents, nondecreasing, of length min(rows, cols)."""
        rows = [list(row) for row in matrix]
        if not rows or not rows[0]:
            return ()
        nrows, ncols = len(rows), len(rows[0])
        size = min(nrows, ncols)
        N = self.N
        out: list[int] = []
        active_rows = list(range(nrows))
        active_cols = list(range(ncols))
        val, sub, mul, divide = self.val, self.sub, self.mul, self.divide
        while len(out) < size:
            best = N
            pr = pc = -1
            for i in active_rows:
                row = rows[i]
                for j in active_cols:
                    v = val(row[j])
                    if v < best:
                        best, pr, pc = v, i, j
                        if v == 0:
                            break
                if best == 0:
                    break
            if best >= N:
                out.extend([N] * (size - len(out)))
                break
            out.append(best)
            pivot = rows[pr][pc]
            active_rows.remove(pr)
            active_cols.remove(pc)
            prow = rows[pr]
            for i in active_rows:
                w = rows[i][pc]
                if val(w) >= N:
                    continue
                t = divide(w, pivot)
                row = rows[i]
                for j in active_cols:
                    if val(prow[j]) < N:
                        row[j] = sub(row[j], mul(t, prow[j]))
        return tuple(out)

    def antisymmetric_type(self, matrix: Sequence[Sequence]) -> tuple[int, ...]:
        """Halved type of an antisymmetric matrix; checks the paired shape."""
        r = len(matrix)
        full = self.elementary_divisor_type(matrix)
        half = []
        for i in range(r // 2):
            if full[2 * i] != full[2 * i + 1]:
                raise PairingViolation("elementary divisors are not paired", type=list(full))
            half.append(full[2 * i])
        if r % 2 and full[-1] != self.N:
            raise PairingViolation("odd size matrix has a finite last divisor", type=list(full))
        return tuple(half)


class IntegerQuotient(_RingBase):
    """Z/p^N with elements stored as ints in ``range(p**N)``."""

    def __init__(self, spec: LocalRingSpec) -> None:
        self.spec = spec
        self.p = spec.p
        self.N = spec.N
        self.q = spec.p
        self.e = 1
        self.modulus = spec.p**spec.N
        self.zero = 0
        self.one = 1 % self.modulus if self.modulus > 1 else 0
        # a lookup table pays off only for small moduli
        self._val = [self._compute_val(x) for x in range(self.modulus)] if self.modulus <= 4096 else None

    def _compute_val(self, x: int) -> int:
        v = 0
        while v < self.N and x % self.p == 0:
            x //= self.p
            v += 1
        return v

    def elements(self) -> range:
        return range(self.modulus)

    def units(self) -> tuple[int, ...]:
        return tuple(x for x in self.elements() if x % self.p)

    def nonunits(self) -> range:
        return range(0, self.modulus, self.p)

    def reduce(self, x) -> int:
        return int(x) % self.modulus

    def from_int(self, n: int) -> int:
        return n % self.modulus

    def add(self, x: int, y: int) -> int:
        return (x + y) % self.modulus

    def sub(self, x: int, y: int) -> int:
        return (x - y) % self.modulus

    def neg(self, x: int) -> int:
        return -x % self.modulus

    def mul(self, x: int, y: int) -> int:
        return x * y % self.modulus

    def val(self, x: int) -> int:
        if self._val is not None:
            return self._val[x]
        return self._compute_val(x)

    def residue(self, x: int) -> int:
        return x % self.p

    def inverse(self, x: int) -> int:
        return pow(x, -1, self.modulus)

    def pi_power(self, k: int) -> int:
        return self.p**k % self.modulus

    def divide(self, w: int, pivot: int) -> int:
        """Some t with ``t * pivot == w``; requires val(w) >= val(pivot)."""
        s = self.p ** self.val(pivot)
        return (w // s) * pow(pivot // s, -1, self.modulus) % self.modulus


class QuadraticQuotient(_RingBase):
    """o/p^N for a quadratic o = Z_p[x]/(g), elements ``(a, b) = a + b*x``."""

    def __init__(self, spec: LocalRingSpec) -> None:
        self.spec = spec
        p, e, N = spec.p, spec.e, spec.N
        self.p, self.e, self.N = p, e, N
        self.q = spec.q
        self.g0, self.g1 = spec.g[0], spec.g[1]
        if e == 1:
            self.mod_a = self.mod_b = p**N
        else:
            self.mod_a = p ** ((N + 1) // 2)
            self.mod_b = p ** (N // 2)
        # working modulus: p^{ceil(N/e)} kills pi^N o
        self.work = p ** (-(-N // e)) if N else 1
        self.zero = (0, 0)
        self.one = self.reduce((1, 0))
        self._val: dict = {}
        if e == 2:
            self._g0_unit_inv = pow(self.g0 // p, -1, self.work) if N else 0

    def _vp(self, n: int, cap: int) -> int:
        v = 0
        while v < cap and n % self.p == 0:
            n //= self.p
            v += 1
        return v

    def _compute_val(self, x: tuple[int, int]) -> int:
        a, b = x
        N = self.N
        if self.e == 1:
            return min(self._vp(a, N), self._vp(b, N))
        return min(2 * self._vp(a, N) if a else N, 2 * self._vp(b, N) + 1 if b else N, N)

    def elements(self) -> list:
        return list(itertools.product(range(self.mod_a), range(self.mod_b)))

    def units(self) -> list:
        return [x for x in self.elements() if self.val(x) == 0]

    def nonunits(self) -> list:
        return [x for x in self.elements() if self.val(x) > 0]

    def reduce(self, x) -> tuple[int, int]:
        if isinstance(x, int):
            x = (x, 0)
        return (x[0] % self.mod_a, x[1] % self.mod_b)

    def from_int(self, n: int) -> tuple[int, int]:
        return self.reduce((n, 0))

    def add(self, x, y):
        return ((x[0] + y[0]) % self.mod_a, (x[1] + y[1]) % self.mod_b)

    def sub(self, x, y):
        return ((x[0] - y[0]) % self.mod_a, (x[1] - y[1]) % self.mod_b)

    def neg(self, x):
        return (-x[0] % self.mod_a, -x[1] % self.mod_b)

    def mul(self, x, y):
        a, b = x
        c, d = y
        bd = b * d
        # x^2 = -g1 x - g0
        return ((a * c - bd * self.g0) % self.mod_a, (a * d + b * c - bd * self.g1) % self.mod_b)

    def val(self, x) -> int:
        v = self._val.get(x)
        if v is None:
            v = self._val[x] = self._compute_val(x)
        return v

    def residue(self, x):
        if self.e == 1:
            return (x[0] % self.p, x[1] % self.p)
        return x[0] % self.p

    def inverse(self, x):
        a, b = x
        norm = a * a - a * b * self.g1 + b * b * self.g0
        ninv = pow(norm, -1, self.work)
        return self.reduce(((a - b * self.g1) * ninv, -b * ninv))

    def pi_power(self, k: int):
        if self.e == 1:
            return self.reduce((self.p**k, 0))
        out = self.one
        for _ in range(k):
            out = self.mul(out, (0, 1))
        return out

    def _div_pi(self, x):
        a, b = x
        if self.e == 1:
            return (a // self.p, b // self.p)
        # 1/x = -(x + g1)/g0 and p | a
        s = (a // self.p) * self._g0_unit_inv
        return self.reduce((b - s * self.g1, -s))

    def divide(self, w, pivot):
        k = self.val(pivot)
        u, w2 = pivot, w
        for _ in range(k):
            u = self._div_pi(u)
            w2 = self._div_pi(w2)
        return self.mul(w2, self.inverse(u))


def make_quotient(spec: LocalRingSpec | dict) -> IntegerQuotient | QuadraticQuotient:
    if isinstance(spec, dict):
        spec = LocalRingSpec.from_dict(spec)
    check_spec(spec)
    if spec.e * spec.f == 1:
        return IntegerQuotient(spec)
    return QuadraticQuotient(spec)


def load_ring_spec(path: str) -> LocalRingSpec:
    with open(path, encoding="utf-8") as fh:
        return LocalRingSpec.from_dict(json.load(fh))
