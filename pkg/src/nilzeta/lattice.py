"""Nilpotent Lie lattices over Z and their adapted bases at a prime.

A lattice is stored by its nonzero brackets ``[e_i, e_j] = sum_l c_l e_l`` for
``i < j`` (0-based internally, 1-based in JSON). :func:`adapt_basis` produces
the commutator matrix data consumed by the enumeration engine.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import intlinalg as il
from .errors import ClassHypothesisViolation, JacobiViolation, LatticeError, NotNilpotent

Vector = tuple[int, ...]


@dataclass(frozen=True)
class LieLattice:
    """A validated nilpotent Z-Lie lattice. Build it with :func:`validate`."""

    rank: int
    brackets: tuple[tuple[int, int, Vector], ...]
    nilpotency_class: int
    name: str = ""
    lcs_ranks: tuple[int, ...] = field(default=(), compare=False)

    @property
    def h(self) -> int:
        return self.rank

    @property
    def c(self) -> int:
        return self.nilpotency_class

    def bracket_table(self) -> dict[tuple[int, int], Vector]:
        table: dict[tuple[int, int], Vector] = {}
        for i, j, vec in self.brackets:
            table[(i, j)] = vec
            table[(j, i)] = tuple(-x for x in vec)
        return table

    def bracket(self, x: Sequence[int], y: Sequence[int]) -> list[int]:
        out = [0] * self.rank
        for i, j, vec in self.brackets:
            coeff = x[i] * y[j] - x[j] * y[i]
            if coeff:
                for l, c in enumerate(vec):
                    out[l] += coeff * c
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "rank": self.rank,
            "brackets": [[i + 1, j + 1, list(vec)] for i, j, vec in self.brackets],
        }


def _basis_vector(h: int, i: int) -> list[int]:
    v = [0] * h
    v[i] = 1
    return v


def _normalise_brackets(rank: int, raw: Iterable) -> dict[tuple[int, int], list[int]]:
    table: dict[tuple[int, int], list[int]] = {}
    for entry in raw:
        try:
            i, j, vec = entry
        except (TypeError, ValueError):
            raise LatticeError("bracket entries must be [i, j, [c_1..c_h]]", entry=repr(entry))
        i, j = int(i), int(j)
        vec = [int(x) for x in vec]
        if not (1 <= i <= rank and 1 <= j <= rank):
            raise LatticeError("bracket index out of range", i=i, j=j, rank=rank)
        if len(vec) != rank:
            raise LatticeError("bracket vector has wrong length", i=i, j=j, length=len(vec))
        if i == j:
            if any(vec):
                raise LatticeError("[e_i, e_i] must vanish", i=i)
            continue
        if i > j:
            i, j, vec = j, i, [-x for x in vec]
        key = (i - 1, j - 1)
        if key in table:
            raise LatticeError("duplicate bracket", i=i, j=j)
        table[key] = vec
    return table


def _lower_central_ranks(rank: int, table: dict[tuple[int, int], list[int]]) -> tuple[list[int], bool]:
    """Ranks of gamma_1 = L, gamma_2, ... and whether the series reaches 0."""

    def br(x: Sequence[int], y: Sequence[int]) -> list[int]:
        out = [0] * rank
        for (i, j), vec in table.items():
            coeff = x[i] * y[j] - x[j] * y[i]
            if coeff:
                for l, c in enumerate(vec):
                    out[l] += coeff * c
        return out

    ranks = [rank]
    current = [_basis_vector(rank, i) for i in range(rank)]
    while True:
        gens = [br(_basis_vector(rank, a), v) for a in range(rank) for v in current]
        gens = [g for g in gens if any(g)]
        rk = il.rank(gens) if gens else 0
        if rk == 0:
            ranks.append(0)
            return ranks, True
        if rk >= ranks[-1]:
            ranks.append(rk)
            return ranks, False
        ranks.append(rk)
        # keep an independent spanning set of gamma_{i+1}
        basis: list[list[int]] = []
        for g in gens:
            if il.rank(basis + [g]) > len(basis):
                basis.append(g)
        current = basis


def validate(raw: dict | LieLattice) -> LieLattice:
    """Check Jacobi, nilpotency and the class hypotheses; return a lattice.

    ``raw`` is the JSON form ``{"name", "rank", "brackets": [[i, j, vec]]}``
    with 1-based indices.
    """
    if isinstance(raw, LieLattice):
        raw = raw.to_dict()
    try:
        rank = int(raw["rank"])
    except (KeyError, TypeError, ValueError):
        raise LatticeError("lattice needs an integer 'rank'")
    if rank < 1:
        raise LatticeError("rank must be positive", rank=rank)
    table = _normalise_brackets(rank, raw.get("brackets", []))
    table = {k: v for k, v in table.items() if any(v)}

    def br_basis(i: int, v: Sequence[int]) -> list[int]:
        out = [0] * rank
        for (a, b), vec in table.items():
            coeff = (i == a) * v[b] - (i == b) * v[a]
            if coeff:
                for l, c in enumerate(vec):
                    out[l] += coeff * c
        return out

    def vec_of(i: int, j: int) -> list[int]:
        if i < j:
            return list(table.get((i, j), [0] * rank))
        return [-x for x in table.get((j, i), [0] * rank)]

    for i, j, k in combinations(range(rank), 3):
        total = [0] * rank
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            term = br_basis(a, vec_of(b, c))
            total = [x + y for x, y in zip(total, term)]
        if any(total):
            raise JacobiViolation(
                "Jacobi identity fails", witness=[i + 1, j + 1, k + 1], residual=total
            )

    ranks, terminates = _lower_central_ranks(rank, table)
    if not terminates:
        raise NotNilpotent("lower central series does not terminate", lcs_ranks=ranks)
    c = len(ranks) - 1
    if c < 2:
        raise ClassHypothesisViolation("nilpotency class must be at least 2", nilpotency_class=c)
    if c >= rank:
        raise ClassHypothesisViolation("nilpotency class must be below the rank", nilpotency_class=c)
    if c > 2:
        fac = math.factorial(c)
        for (i, j), vec in table.items():
            if any(x % fac for x in vec):
                raise ClassHypothesisViolation(
                    f"class {c} requires brackets divisible by {fac}",
                    nilpotency_class=c,
                    witness=[i + 1, j + 1, vec],
                )
    brackets = tuple((i, j, tuple(v)) for (i, j), v in sorted(table.items()))
    return LieLattice(
        rank=rank,
        brackets=brackets,
        nilpotency_class=c,
        name=str(raw.get("name", "")),
        lcs_ranks=tuple(ranks),
    )


def load_lattice(path: str | Path) -> LieLattice:
    with open(path, encoding="utf-8") as fh:
        return validate(json.load(fh))


def rescale(lattice: LieLattice, m: int, p: int) -> LieLattice:
    """Lattice spanned by ``p^m e``: structure constants times ``p^m``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if m == 0:
        return lattice
    s = p**m
    raw = lattice.to_dict()
    raw["brackets"] = [[i, j, [s * x for x in vec]] for i, j, vec in raw["brackets"]]
    if lattice.name:
        raw["name"] = f"{lattice.name}*{p}^{m}"
    return validate(raw)


def direct_sum_abelian(lattice: LieLattice, m: int) -> LieLattice:
    """``lattice (+) Z^m`` with the new basis vectors central."""
    raw = lattice.to_dict()
    raw["rank"] = lattice.rank + m
    raw["brackets"] = [[i, j, list(vec) + [0] * m] for i, j, vec in raw["brackets"]]
    raw["name"] = f"{lattice.name}+Z^{m}" if lattice.name else ""
    return validate(raw)


# --- adapted bases -----------------------------------------------------------


@dataclass(frozen=True)
class _GlobalFrame:
    """p-independent part of the adapted basis, all over Z."""

    h: int
    r: int
    d: int
    k: int
    lift: tuple[Vector, ...]  # r columns: lifts of a basis of Lambda/z
    quotient_rows: tuple[Vector, ...]  # r rows: coordinates on Lambda/z
    centre_basis: tuple[Vector, ...]  # h-r columns
    centre_rows: tuple[Vector, ...]  # h-r rows: coordinates on z
    wbar: tuple[Vector, ...]  # r columns of a unimodular basis of Lambda/z; last k span iota(gbar')
    eps: tuple[int, ...]  # gbar' = sum eps_i * wbar_{r-k+i}
    u: tuple[Vector, ...]  # h-r columns of a unimodular basis of z; first d-k span iota(g' cap z)
    delta: tuple[int, ...]  # g' cap z = sum delta_i * u_i
    f_quot: tuple[Vector, ...]  # k elements of g' with image eps_i * wbar_{r-k+i}
    exclusion_index: int


def _leading_sign(v: Sequence[int]) -> int:
    return next((1 if x > 0 else -1 for x in v if x), 0)


def _saturated_kernel(rows: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """Z-basis (as columns) of {x : rows @ x = 0}; always saturated."""
    if not rows:
        return [_basis_vector(ncols, i) for i in range(ncols)]
    u, d, v = il.smith_normal_form(rows)
    rk = len(il.diagonal(d))
    return [il.column(v, j) for j in range(rk, ncols)]


@lru_cache(maxsize=256)
def _global_frame(lattice: LieLattice) -> _GlobalFrame:
    h = lattice.rank
    table = lattice.bracket_table()

    # centre: x with [x, e_j] = 0 for all j
    ad_rows = []
    for j in range(h):
        for l in range(h):
            ad_rows.append([table.get((i, j), (0,) * h)[l] for i in range(h)])
    ad_rows = [row for row in ad_rows if any(row)]
    zb = _saturated_kernel(ad_rows, h)
    r = h - len(zb)

    # complete the centre basis to a unimodular basis [Q | Zb]
    comp = il.unimodular_completion(zb, h)
    full = il.columns_to_matrix(comp + zb, h)
    t = il.inverse_unimodular(full)
    q_rows = [t[i] for i in range(r)]
    z_rows = [t[i] for i in range(r, h)]

    # derived lattice g'
    gens = [list(vec) for _, _, vec in lattice.brackets]
    gmat = il.columns_to_matrix(gens, h)
    ug, dg, vg = il.smith_normal_form(gmat)
    dvals = il.diagonal(dg)
    d = len(dvals)
    ug_inv = il.inverse_unimodular(ug)
    gp_basis = [[x * dvals[i] for x in il.column(ug_inv, i)] for i in range(d)]
    exclusion_index = math.prod(dvals)

    # image of g' in Lambda/z
    qg = il.matmul(q_rows, il.columns_to_matrix(gp_basis, h))  # r x d
    uq, dq, vq = il.smith_normal_form(qg)
    eps = il.diagonal(dq)
    k = len(eps)
    uq_inv = il.inverse_unimodular(uq)
    wbar_iso = [il.column(uq_inv, i) for i in range(k)]
    gp_cols = il.columns_to_matrix(gp_basis, h)
    f_quot = [il.matvec(gp_cols, il.column(vq, i)) for i in range(k)]
    gz_basis = [il.matvec(gp_cols, il.column(vq, i)) for i in range(k, d)]
    for i in range(k):
        if _leading_sign(f_quot[i]) < 0:
            f_quot[i] = [-x for x in f_quot[i]]
            wbar_iso[i] = [-x for x in wbar_iso[i]]
    wbar_comp = il.unimodular_completion(wbar_iso, r)

    # g' cap z inside z
    if gz_basis:
        zc = il.matmul(z_rows, il.columns_to_matrix(gz_basis, h))  # (h-r) x (d-k)
        uc, dc, vc = il.smith_normal_form(zc)
        delta = il.diagonal(dc)
        uc_inv = il.inverse_unimodular(uc)
        u_cols = [il.column(uc_inv, i) for i in range(len(delta))]
        u_cols += il.unimodular_completion(u_cols, h - r)
        zb_mat = il.columns_to_matrix(zb, h)
        for i in range(len(delta)):
            if _leading_sign(il.matvec(zb_mat, u_cols[i])) < 0:
                u_cols[i] = [-x for x in u_cols[i]]
    else:
        delta = []
        u_cols = [_basis_vector(h - r, i) for i in range(h - r)]
    if len(delta) != d - k:
        raise LatticeError("rank bookkeeping failed for g' cap z")

    lift = [il.column(il.columns_to_matrix(comp, h), j) for j in range(r)]
    return _GlobalFrame(
        h=h,
        r=r,
        d=d,
        k=k,
        lift=tuple(tuple(c) for c in lift),
        quotient_rows=tuple(tuple(row) for row in q_rows),
        centre_basis=tuple(tuple(c) for c in zb),
        centre_rows=tuple(tuple(row) for row in z_rows),
        wbar=tuple(tuple(c) for c in wbar_comp + wbar_iso),
        eps=tuple(eps),
        u=tuple(tuple(c) for c in u_cols),
        delta=tuple(delta),
        f_quot=tuple(tuple(c) for c in f_quot),
        exclusion_index=exclusion_index,
    )


@dataclass(frozen=True)
class AdaptedBasis:
    """Adapted bases e, f at a prime p and the commutator matrix R(Y).

    ``lam[i][j][l]`` are the structure constants ``[e_i, e_j] = sum_l lam f_l``
    for ``i, j < r``; ``R(Y)_{ij} = sum_l lam[i][j][l] Y_l``. ``b`` holds p-adic
    valuations; over a ramified completion multiply by the ramification index.
    """

    p: int
    h: int
    d: int
    k: int
    r: int
    b: tuple[int, ...]
    e_basis: tuple[Vector, ...]  # h vectors in ambient coordinates
    f_basis: tuple[Vector, ...]  # d vectors in ambient coordinates
    lam: tuple[tuple[Vector, ...], ...]
    exclusion_index: int
    nilpotency_class: int

    def R_symbolic(self) -> list[list[Vector]]:
        """Entries of R(Y) as coefficient vectors of linear forms in Y_1..Y_d."""
        return [[self.lam[i][j] for j in range(self.r)] for i in range(self.r)]

    def S_symbolic(self) -> list[list[Vector]]:
        return [[self.lam[i][j] for j in range(self.r - self.k, self.r)] for i in range(self.r)]

    def R_at(self, y: Sequence[int]) -> list[list[int]]:
        return [[sum(c * t for c, t in zip(self.lam[i][j], y)) for j in range(self.r)] for i in range(self.r)]

    def R_pretty(self) -> list[list[str]]:
        def form(vec: Vector) -> str:
            terms = []
            for l, c in enumerate(vec):
                if c:
                    mono = f"Y{l + 1}"
                    terms.append(mono if c == 1 else f"-{mono}" if c == -1 else f"{c}*{mono}")
            return " + ".join(terms).replace("+ -", "- ") or "0"

        return [[form(v) for v in row] for row in self.R_symbolic()]

    def f_in_e_coordinates(self) -> list[list[Fraction]]:
        cols = [list(v) for v in self.e_basis]
        return [il.solve_columns(cols, list(f)) for f in self.f_basis]

    def to_dict(self) -> dict[str, Any]:
        return {
            "p": self.p,
            "h": self.h,
            "d": self.d,
            "k": self.k,
            "r": self.r,
            "b": list(self.b),
            "R": self.R_pretty(),
            "exclusion_index": str(self.exclusion_index),
        }


def _split_p(x: int, p: int) -> tuple[int, int]:
    """``x = p^v * m`` with ``p`` not dividing ``m``."""
    v = il.p_valuation(x, p)
    return v, x // p**v


def adapt_basis(lattice: LieLattice, p: int) -> AdaptedBasis:
    """Adapted e- and f-bases over Z_(p) and the commutator matrix R(Y).

    Isolators come from integer Smith forms (p-independent); at ``p`` the
    elementary divisors are split as ``p^b * unit`` and the unit is absorbed
    into the e-basis, so all change-of-basis matrices are integral with
    p-unit determinant.
    """
    fr = _global_frame(lattice)
    h, r, d, k = fr.h, fr.r, fr.d, fr.k
    lift_mat = il.columns_to_matrix(fr.lift, h)

    def lift(vbar: Sequence[int]) -> list[int]:
        return il.matvec(lift_mat, vbar)

    zb_mat = il.columns_to_matrix(fr.centre_basis, h) if fr.centre_basis else None

    def embed_centre(zc: Sequence[int]) -> list[int]:
        return il.matvec(zb_mat, zc) if zb_mat is not None else [0] * h

    b_quot, units_quot = zip(*[_split_p(x, p) for x in fr.eps]) if k else ((), ())
    b_cent, units_cent = zip(*[_split_p(x, p) for x in fr.delta]) if d > k else ((), ())

    e: list[list[int]] = []
    for j in range(r - k):
        e.append(lift(fr.wbar[j]))
    for i in range(k):
        e.append(lift([units_quot[i] * x for x in fr.wbar[r - k + i]]))
    for i in range(d - k):
        e.append(embed_centre([units_cent[i] * x for x in fr.u[i]]))
    for i in range(d - k, h - r):
        e.append(embed_centre(fr.u[i]))

    f: list[list[int]] = [list(v) for v in fr.f_quot]
    for i in range(d - k):
        f.append(embed_centre([fr.delta[i] * x for x in fr.u[i]]))

    lam = []
    for i in range(r):
        row = []
        for j in range(r):
            if i == j:
                row.append((0,) * d)
                continue
            coords = il.solve_columns(f, lattice.bracket(e[i], e[j]))
            if any(c.denominator != 1 for c in coords):
                raise LatticeError("non-integral structure constants in adapted basis", i=i, j=j)
            row.append(tuple(int(c) for c in coords))
        lam.append(tuple(row))

    return AdaptedBasis(
        p=p,
        h=h,
        d=d,
        k=k,
        r=r,
        b=tuple(b_quot) + tuple(b_cent),
        e_basis=tuple(tuple(v) for v in e),
        f_basis=tuple(tuple(v) for v in f),
        lam=tuple(lam),
        exclusion_index=fr.exclusion_index,
        nilpotency_class=lattice.nilpotency_class,
    )


def exclusion_index(lattice: LieLattice) -> int:
    """``|Lambda : M| * |iota(Lambda') : Lambda'|``; here M = Lambda."""
    return _global_frame(lattice).exclusion_index


def commutator_level_bound(basis: AdaptedBasis) -> int:
    """Largest p-adic elementary divisor of the linear map ``y -> R(y)``.

    For primitive y some entry of R(y) has valuation at most this bound, so a
    level-N vector contributes only to dimension exponents ``>= N - bound``.
    """
    rows = []
    for l in range(basis.d):
        rows.append([basis.lam[i][j][l] for i in range(basis.r) for j in range(i + 1, basis.r)])
    _, dm, _ = il.smith_normal_form(rows)
    divs = il.diagonal(dm)
    if len(divs) < basis.d:
        raise LatticeError("commutator map is not injective")
    return max(il.p_valuation(x, basis.p) for x in divs)


def generic_ranks(basis: AdaptedBasis) -> tuple[int, int]:
    """``(2u, v)``: ranks of R(Y) and S(Y) over the field Q(Y_1..Y_d).

    Exact fraction-free elimination over Z[Y]; random integer evaluations are
    used only as a lower-bound shortcut when they already reach full rank.
    """
    import random

    import sympy

    ys = sympy.symbols(f"Y1:{basis.d + 1}")

    def poly_matrix(mat: list[list[Vector]]) -> list[list[sympy.Poly]]:
        return [[sympy.Poly(sum(c * y for c, y in zip(v, ys)), *ys, domain="ZZ") for v in row] for row in mat]

    def numeric_rank(mat: list[list[Vector]], rng: random.Random) -> int:
        y = [rng.randint(-97, 97) for _ in range(basis.d)]
        return il.rank([[sum(c * t for c, t in zip(v, y)) for v in row] for row in mat])

    def exact_rank(mat: list[list[Vector]]) -> int:
        if not mat or not mat[0]:
            return 0
        rng = random.Random(0)
        full = min(len(mat), len(mat[0]))
        if numeric_rank(mat, rng) == full:
            return full
        a = poly_matrix(mat)
        rows, cols = len(a), len(a[0])
        prev = sympy.Poly(1, *ys, domain="ZZ")
        rk = 0
        for col in range(cols):
            piv = next((i for i in range(rk, rows) if not a[i][col].is_zero), None)
            if piv is None:
                continue
            a[rk], a[piv] = a[piv], a[rk]
            for i in range(rk + 1, rows):
                for j in range(col + 1, cols):
                    a[i][j] = (a[rk][col] * a[i][j] - a[i][col] * a[rk][j]).exquo(prev)
                a[i][col] = sympy.Poly(0, *ys, domain="ZZ")
            prev = a[rk][col]
            rk += 1
            if rk == rows:
                break
        return rk

    two_u = exact_rank(basis.R_symbolic())
    v = exact_rank(basis.S_symbolic()) if basis.k else 0
    return two_u, v
