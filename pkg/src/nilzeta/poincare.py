"""Truncated local representation zeta functions by type counting.

For each level N the primitive vectors y in (o/p^N)^d are sorted by the
elementary-divisor types of R(y) and S(y) diag(pi^b); a type (a, c) with
count m contributes ``m * q^(-sum(N - c_i))`` to the number of twist classes
of dimension ``q^(sum(N - a_i))``.
"""

from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .errors import ExcludedPrime, KirillovInapplicable, NonIntegralCoefficient, TruncationUnstable
from .lattice import AdaptedBasis, LieLattice, adapt_basis, commutator_level_bound, rescale
from .localring import LocalRingSpec, TypeVector, make_quotient


@dataclass
class OrbitCountTable:
    N: int
    counts: dict[TypeVector, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def sorted_items(self) -> list[tuple[TypeVector, int]]:
        return sorted(self.counts.items())


@dataclass
class LocalZetaSeries:
    """Coefficients ``coeffs[n]`` = number of twist classes of dimension q^n."""

    q: int
    coeffs: list[int]
    n_max: int
    N_max: int
    levels: dict[int, int] = field(default_factory=dict)
    spec: LocalRingSpec | None = None
    abscissa_only: bool = False
    rescaled_by: int = 0

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "q": self.q,
            "coeffs": [[n, str(c)] for n, c in enumerate(self.coeffs)],
            "n_max": self.n_max,
            "N_max": self.N_max,
            "levels": {str(n): lvl for n, lvl in sorted(self.levels.items())},
        }
        if self.abscissa_only:
            out["abscissa_only"] = True
            out["rescaled_by"] = self.rescaled_by
        return out


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("NILZETA_WORKERS", "1") or 1)
    return max(1, int(workers))


# --- counting --------------------------------------------------------------


def _linear_forms(basis: AdaptedBasis) -> list[list[list[tuple[int, int]]]]:
    return [
        [[(l, c) for l, c in enumerate(basis.lam[i][j]) if c] for j in range(basis.r)]
        for i in range(basis.r)
    ]


def _type_of(y: Sequence, ring, forms, col_scale, r: int, k: int) -> TypeVector:
    mul, add, zero, from_int = ring.mul, ring.add, ring.zero, ring.from_int
    R = []
    for i in range(r):
        row = []
        for j in range(r):
            acc = zero
            for l, c in forms[i][j]:
                acc = add(acc, mul(from_int(c), y[l]))
            row.append(acc)
        R.append(row)
    a = ring.antisymmetric_type(R)
    if k:
        S = [[mul(R[i][r - k + j], col_scale[j]) for j in range(k)] for i in range(r)]
        c = ring.elementary_divisor_type(S)
    else:
        c = ()
    return TypeVector(a, c)


def _count_tasks(basis: AdaptedBasis, spec: LocalRingSpec, tasks: list) -> Counter:
    ring = make_quotient(spec)
    forms = _linear_forms(basis)
    col_scale = [ring.pi_power(spec.e * b) for b in basis.b[: basis.k]]
    out: Counter = Counter()
    for task in tasks:
        for y in ring.iter_task(basis.d, task):
            out[_type_of(y, ring, forms, col_scale, basis.r, basis.k)] += 1
    return out


def count_types(
    basis: AdaptedBasis,
    ring,
    N: int | None = None,
    workers: int | None = None,
    full: bool = False,
) -> OrbitCountTable:
    """Tally the types of all y in W_N.

    By default one representative per unit-scaling orbit is visited and
    weighted by the orbit size; ``full=True`` walks every primitive vector.
    """
    spec = ring.spec
    if N is not None and N != spec.N:
        raise ValueError("ring level does not match N")
    if spec.p != basis.p:
        raise ValueError("adapted basis is for a different prime")
    N = spec.N
    d, r, k = basis.d, basis.r, basis.k
    if N == 0:
        return OrbitCountTable(0, {TypeVector((0,) * (r // 2), (0,) * k): 1})

    if full:
        forms = _linear_forms(basis)
        col_scale = [ring.pi_power(spec.e * b) for b in basis.b[:k]]
        counts: Counter = Counter()
        for y in ring.enumerate_W(d):
            counts[_type_of(y, ring, forms, col_scale, r, k)] += 1
        return OrbitCountTable(N, dict(sorted(counts.items())))

    tasks = ring.representative_tasks(d)
    workers = min(resolve_workers(workers), len(tasks))
    if workers <= 1:
        partial = [_count_tasks(basis, spec, tasks)]
    else:
        chunks = [tasks[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(_count_tasks, [basis] * workers, [spec] * workers, chunks))
    merged: Counter = Counter()
    for part in partial:
        merged.update(part)
    weight = ring.unit_count()
    return OrbitCountTable(N, {t: m * weight for t, m in sorted(merged.items())})


# --- series assembly -------------------------------------------------------


def _is_powerful_for_two(lattice: LieLattice) -> bool:
    return all(x % 4 == 0 for _, _, vec in lattice.brackets for x in vec)


def prepare(
    lattice: LieLattice, p: int, commensurable: bool = False
) -> tuple[LieLattice, int, bool]:
    """Return the lattice to enumerate, the rescaling used and the abscissa-only flag."""
    m = 0
    flagged = False
    if lattice.c == 3 and p == 2 and not _is_powerful_for_two(lattice):
        if not commensurable:
            raise KirillovInapplicable(
                "class 3 at p = 2 needs the rescaled lattice 2*Lambda",
                p=p,
                nilpotency_class=lattice.c,
                hint="pass rescale(lattice, 1, 2)",
            )
        m, flagged = 1, True
    basis = adapt_basis(lattice, p)
    if basis.exclusion_index % p == 0:
        if not commensurable:
            raise ExcludedPrime(
                "p divides the exclusion index",
                p=p,
                exclusion_index=str(basis.exclusion_index),
            )
        flagged = True
    return (rescale(lattice, m, p) if m else lattice), m, flagged


def level_bound(basis: AdaptedBasis, e: int = 1) -> int:
    """Levels above ``n + bound`` cannot contribute to dimension exponent n."""
    return e * commutator_level_bound(basis)


def _accumulate(basis, spec, N_max, n_max, workers, full=False):
    q = spec.q
    acc = [Fraction(0)] * (n_max + 1)
    acc[0] = Fraction(1)
    levels: dict[int, int] = {0: 0}
    per_level = []
    for N in range(1, N_max + 1):
        ring = make_quotient(spec.at_level(N))
        table = count_types(basis, ring, workers=workers, full=full)
        per_level.append(table)
        for t, m in table.counts.items():
            n = sum(N - a for a in t.a)
            if n > n_max:
                continue
            acc[n] += Fraction(m, q ** sum(N - c for c in t.c))
            levels.setdefault(n, N)
    return acc, levels, per_level


def _to_integers(acc: list[Fraction]) -> list[int]:
    out = []
    for n, x in enumerate(acc):
        if x.denominator != 1 or x < 0:
            raise NonIntegralCoefficient(
                "coefficient is not a nonnegative integer", n=n, value=str(x)
            )
        out.append(int(x))
    return out


def local_zeta(
    lattice: LieLattice,
    spec: LocalRingSpec,
    n_max: int,
    N_max: int | None = None,
    workers: int | None = None,
    commensurable: bool = False,
    full: bool = False,
) -> LocalZetaSeries:
    """Truncated local zeta series ``r_0..r_{n_max}`` over o_p described by ``spec``.

    The level of ``spec`` is ignored. Without ``N_max`` the enumeration depth
    is the proven bound ``n_max + level_bound``. An explicit ``N_max`` is
    certified by also running level ``N_max + 1``.
    """
    target, m, flagged = prepare(lattice, spec.p, commensurable)
    basis = adapt_basis(target, spec.p)
    proven = n_max + level_bound(basis, spec.e)
    if N_max is None:
        depth = proven
        acc, levels, _ = _accumulate(basis, spec, depth, n_max, workers, full)
    else:
        depth = N_max
        report = stabilization_check(target, spec, n_max, N_max, workers=workers, _basis=basis)
        acc, levels = report["acc"], report["levels"]
    return LocalZetaSeries(
        q=spec.q,
        coeffs=_to_integers(acc),
        n_max=n_max,
        N_max=depth,
        levels=levels,
        spec=spec,
        abscissa_only=flagged,
        rescaled_by=m,
    )


def stabilization_check(
    lattice: LieLattice,
    spec: LocalRingSpec,
    n_max: int,
    N_max: int,
    workers: int | None = None,
    _basis: AdaptedBasis | None = None,
) -> dict[str, Any]:
    """Compare depths N_max and N_max + 1 on coefficients n <= n_max."""
    basis = _basis or adapt_basis(lattice, spec.p)
    acc, levels, tables = _accumulate(basis, spec, N_max + 1, n_max, workers)
    before = [Fraction(0)] * (n_max + 1)
    before[0] = Fraction(1)
    for N, table in enumerate(tables[:N_max], start=1):
        for t, m in table.counts.items():
            n = sum(N - a for a in t.a)
            if n <= n_max:
                before[n] += Fraction(m, spec.q ** sum(N - c for c in t.c))
    for n in range(n_max + 1):
        if before[n] != acc[n]:
            raise TruncationUnstable(
                "coefficient changes between depths N_max and N_max + 1",
                n=n,
                N_max=N_max,
                at_N_max=str(before[n]),
                at_N_max_plus_1=str(acc[n]),
            )
    return {
        "stable": True,
        "N_max": N_max,
        "n_max": n_max,
        "acc": before,
        "levels": {n: lvl for n, lvl in levels.items() if lvl <= N_max},
        "proven_depth": n_max + level_bound(basis, spec.e),
    }
