"""Brute-force cross-check: finite quotients, character tables, twist classes.

Groups are the sets (Z/p^N)^h with the truncated Hausdorff (BCH) product.
Character tables come from the Dixon-Schneider method over a prime field
F_l with l = 1 mod exp(G); characters are lifted to exact cyclotomic
multiplicities through power maps and checked for orthogonality.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
import sympy
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import (
    BCHNotIntegral,
    CapExceeded,
    GroupAxiomViolation,
    GroupTooLarge,
    MismatchFound,
    NoSuitableModulus,
)
from .lattice import LieLattice
from .localring import LocalRingSpec
from .poincare import local_zeta

DEFAULT_ORDER_CAP = 4096
DEFAULT_CLASS_CAP = 200
EXHAUSTIVE_ASSOCIATIVITY = 2000


def abelian_lattice(h: int, name: str = "") -> LieLattice:
    """Z^h with zero bracket; bypasses the class hypothesis of ``validate``."""
    return LieLattice(rank=h, brackets=(), nilpotency_class=1, name=name or f"Z^{h}")


# --- groups ----------------------------------------------------------------


def _mod_tensor(t: np.ndarray, p: int, modulus: int, what: str) -> np.ndarray:
    out = np.zeros(t.shape, dtype=np.int64)
    for idx, x in np.ndenumerate(t):
        if x:
            x = Fraction(x)
            if x.denominator % p == 0:
                raise BCHNotIntegral(f"{what} has a denominator divisible by p", p=p, coefficient=str(x))
            out[idx] = x.numerator * pow(x.denominator, -1, modulus) % modulus
    return out


@dataclass
class FiniteGroup:
    lattice: LieLattice
    p: int
    N: int
    modulus: int
    order: int
    half_bracket: np.ndarray  # (h, h, h) tensor of lambda/2 mod p^N
    triple: np.ndarray | None  # (h, h, h, h) tensor of (lambda o lambda)/12 mod p^N
    elements: np.ndarray = field(repr=False)
    associativity: str = ""

    @property
    def h(self) -> int:
        return self.lattice.rank

    def index(self, X: np.ndarray) -> np.ndarray:
        return X @ (self.modulus ** np.arange(self.h, dtype=np.int64))

    def mul(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        h, P = self.h, self.modulus
        n = X.shape[0]
        half = self.half_bracket.reshape(h * h, h)
        out = X + Y + (X[:, :, None] * Y[:, None, :]).reshape(n, h * h) @ half
        if self.triple is not None:
            cube = self.triple.reshape(h * h, h * h)
            for a, b in ((X, Y), (Y, X)):
                # sum over (a_i a_j) b_k T[i, j, k, l]
                inner = ((a[:, :, None] * a[:, None, :]).reshape(n, h * h) % P @ cube).reshape(n, h, h)
                out = out + np.einsum("nk,nkl->nl", b, inner % P)
        return out % P

    def inv(self, X: np.ndarray) -> np.ndarray:
        return (-X) % self.modulus

    def element_orders(self) -> np.ndarray:
        # x^n = n x in a BCH group, so the order is the additive order
        orders = np.ones(self.order, dtype=np.int64)
        for k in range(self.N):
            orders = np.where(np.any(self.elements % self.p ** (k + 1), axis=1) & (orders == 1), self.p ** (self.N - k), orders)
        return orders

    @property
    def exponent(self) -> int:
        return int(self.element_orders().max())


def build_group(
    lattice: LieLattice,
    spec: LocalRingSpec | int,
    N: int | None = None,
    cap: int = DEFAULT_ORDER_CAP,
    seed: int = 0,
) -> FiniteGroup:
    """The BCH group on (Z/p^N)^h attached to ``lattice``; axioms are verified."""
    if isinstance(spec, int):
        spec = LocalRingSpec(spec, 1, 1, N or 1)
    elif N is not None:
        spec = spec.at_level(N)
    if spec.e != 1 or spec.f != 1:
        raise NotImplementedError("the oracle works over Z/p^N only")
    p, N = spec.p, spec.N
    h = lattice.rank
    order = p ** (h * N)
    if order > cap:
        raise GroupTooLarge("group order exceeds the cap", order=order, cap=cap)
    if lattice.c > 3:
        raise BCHNotIntegral("only class at most 3 is supported", nilpotency_class=lattice.c)
    P = p**N
    lam = np.zeros((h, h, h), dtype=object)
    for i, j, vec in lattice.brackets:
        for l, c in enumerate(vec):
            lam[i, j, l] = c
            lam[j, i, l] = -c
    lam_int = lam.astype(np.int64)
    half = _mod_tensor(np.vectorize(lambda x: Fraction(x, 2), otypes=[object])(lam), p, P, "lambda/2")
    triple = None
    if lattice.c == 3:
        # [e_a, [e_i, e_j]] = sum_m lam[i,j,m] lam[a,m,l]
        nested = np.einsum("ijm,aml->aijl", lam_int, lam_int).astype(object)
        triple = _mod_tensor(np.vectorize(lambda x: Fraction(int(x), 12), otypes=[object])(nested), p, P, "BCH cubic term")
    idx = np.arange(order, dtype=np.int64)
    elements = np.stack([(idx // P**k) % P for k in range(h)], axis=1)
    group = FiniteGroup(lattice, p, N, P, order, half, triple, elements)
    _verify_axioms(group, seed)
    return group


def _verify_axioms(G: FiniteGroup, seed: int) -> None:
    E = G.elements
    zero = np.zeros_like(E)
    if not np.array_equal(G.mul(E, zero), E) or not np.array_equal(G.mul(zero, E), E):
        raise GroupAxiomViolation("0 is not an identity")
    if np.any(G.mul(E, G.inv(E))) or np.any(G.mul(G.inv(E), E)):
        raise GroupAxiomViolation("-x is not an inverse")
    # (xy)z = x(yz) for x in a generating set and all y, z implies it for all x
    if G.order <= EXHAUSTIVE_ASSOCIATIVITY:
        gens = np.eye(G.h, dtype=np.int64)
        Y = np.repeat(E, G.order, axis=0)
        Z = np.tile(E, (G.order, 1))
        YZ = G.mul(Y, Z)
        for g in gens:
            X = np.broadcast_to(g, Y.shape)
            if not np.array_equal(G.mul(G.mul(X, Y), Z), G.mul(X, YZ)):
                raise GroupAxiomViolation("product is not associative", generator=g.tolist())
        G.associativity = "exhaustive"
    else:
        rng = np.random.default_rng(seed)
        X, Y, Z = (E[rng.integers(0, G.order, 20000)] for _ in range(3))
        if not np.array_equal(G.mul(G.mul(X, Y), Z), G.mul(X, G.mul(Y, Z))):
            raise GroupAxiomViolation("product is not associative on a sample")
        G.associativity = "sampled"


# --- conjugacy classes -----------------------------------------------------


@dataclass
class ClassData:
    class_of: np.ndarray  # element index -> class id
    reps: list[int]
    sizes: list[int]
    orders: list[int]
    members: list[np.ndarray]
    inverse_class: list[int]

    def __len__(self) -> int:
        return len(self.reps)


def conjugacy_classes(G: FiniteGroup) -> ClassData:
    E = G.elements
    n = G.order
    rows, cols = [], []
    base = np.arange(n)
    for k in range(G.h):
        g = np.zeros_like(E)
        g[:, k] = 1
        conj = G.mul(G.mul(g, E), G.inv(g))
        rows.append(base)
        cols.append(G.index(conj))
    graph = coo_matrix((np.ones(n * G.h, dtype=np.int8), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    _, labels = connected_components(graph, directed=True, connection="weak")
    orders = G.element_orders()
    groups: dict[int, list[int]] = {}
    for idx, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(idx)
    keyed = sorted(
        (len(m), int(orders[m[0]]), m[0], np.array(m, dtype=np.int64)) for m in groups.values()
    )
    class_of = np.empty(n, dtype=np.int64)
    for cid, (_, _, _, m) in enumerate(keyed):
        class_of[m] = cid
    reps = [int(k[2]) for k in keyed]
    inv_idx = G.index(G.inv(E[reps]))
    data = ClassData(
        class_of=class_of,
        reps=reps,
        sizes=[k[0] for k in keyed],
        orders=[k[1] for k in keyed],
        members=[k[3] for k in keyed],
        inverse_class=[int(class_of[i]) for i in inv_idx],
    )
    if sum(data.sizes) != n:
        raise GroupAxiomViolation("class equation fails")
    return data


def derived_subgroup_order(G: FiniteGroup) -> int:
    """|G'| from the closure of all commutators [g_k, x] with generators g_k."""
    E = G.elements
    comms = []
    for k in range(G.h):
        g = np.zeros_like(E)
        g[:, k] = 1
        c = G.mul(G.mul(g, E), G.mul(G.inv(g), G.inv(E)))
        comms.append(G.index(c))
    pool = np.unique(np.concatenate(comms))
    member = np.zeros(G.order, dtype=bool)
    member[0] = True
    gens: list[int] = []
    for c in pool:
        if member[c]:
            continue
        gens.append(int(c))
        frontier = np.flatnonzero(member)
        while frontier.size:
            new = []
            for gi in gens:
                prod = G.index(G.mul(E[frontier], np.broadcast_to(E[gi], (frontier.size, G.h))))
                fresh = prod[~member[prod]]
                member[fresh] = True
                new.append(fresh)
            frontier = np.unique(np.concatenate(new)) if new else np.array([], dtype=np.int64)
    return int(member.sum())


# --- modular linear algebra ------------------------------------------------


def _rref(M: np.ndarray, ell: int) -> tuple[np.ndarray, list[int]]:
    A = M.copy() % ell
    rows, cols = A.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] * pow(int(A[r, c]), -1, ell) % ell
        col = A[:, c].copy()
        col[r] = 0
        nzr = np.flatnonzero(col)
        if nzr.size:
            A[nzr] = (A[nzr] - np.outer(col[nzr], A[r])) % ell
        pivots.append(c)
        r += 1
    return A[:r], pivots


def _matmul_mod(A: np.ndarray, B: np.ndarray, ell: int) -> np.ndarray:
    # exact in float64 while inner sums stay below 2^53
    if A.shape[1] * (ell - 1) ** 2 < 2**53:
        return (A.astype(np.float64) @ B.astype(np.float64) % ell).astype(np.int64)
    return A @ B % ell


def _nullspace(M: np.ndarray, ell: int) -> np.ndarray:
    R, pivots = _rref(M, ell)
    n = M.shape[1]
    free = [c for c in range(n) if c not in set(pivots)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for t, fcol in enumerate(free):
        basis[t, fcol] = 1
        for i, pc in enumerate(pivots):
            basis[t, pc] = (-R[i, fcol]) % ell
    return basis


def _berlekamp_massey(seq: list[int], ell: int) -> list[int]:
    """Connection polynomial C (C[0] = 1) of the shortest recurrence for ``seq``."""
    C, B = [1], [1]
    L, m, b = 0, 1, 1
    for n in range(len(seq)):
        d = seq[n]
        for i in range(1, L + 1):
            d = (d + C[i] * seq[n - i]) % ell
        if d == 0:
            m += 1
            continue
        coef = d * pow(b, -1, ell) % ell
        T = C[:]
        C = C + [0] * (len(B) + m - len(C))
        for i, x in enumerate(B):
            C[i + m] = (C[i + m] - coef * x) % ell
        if 2 * L <= n:
            L, B, b, m = n + 1 - L, T, d, 1
        else:
            m += 1
    return C[: L + 1] + [0] * max(0, L + 1 - len(C))


def _roots_mod(poly_low_to_high: list[int], ell: int) -> set[int]:
    xs = np.arange(ell, dtype=np.int64)
    acc = np.zeros(ell, dtype=np.int64)
    for c in reversed(poly_low_to_high):
        acc = (acc * xs + c) % ell
    return {int(x) for x in np.flatnonzero(acc == 0)}


def _eigen_split(R: np.ndarray, ell: int, rng: random.Random) -> list[np.ndarray]:
    """Eigenspaces (as row bases) of a diagonalizable matrix over F_ell."""
    r = R.shape[0]
    roots: set[int] = set()
    spaces: dict[int, np.ndarray] = {}
    attempts = 0
    while sum(s.shape[0] for s in spaces.values()) < r:
        attempts += 1
        if attempts > 40:
            raise NoSuitableModulus("eigenvalue search failed; matrix may not split over F_ell", ell=ell)
        u = np.array([rng.randrange(ell) for _ in range(r)], dtype=np.int64)
        v = np.array([rng.randrange(ell) for _ in range(r)], dtype=np.int64)
        # floats are exact here: entries < ell and r * ell^2 < 2^53
        Rf, uf = R.astype(np.float64), u.astype(np.float64)
        w = v.astype(np.float64)
        seq = []
        for _ in range(2 * r):
            seq.append(int(uf @ w % ell))
            w = Rf @ w % ell
        C = _berlekamp_massey(seq, ell)
        # C is reversed minimal polynomial: roots of x^L C(1/x)
        minpoly = list(reversed(C))
        roots |= _roots_mod(minpoly, ell)
        for lam in sorted(roots - set(spaces)):
            ns = _nullspace((R - lam * np.eye(r, dtype=np.int64)) % ell, ell)
            if ns.shape[0]:
                spaces[lam] = ns
        if attempts < 3:
            continue
    return [spaces[k] for k in sorted(spaces)]


# --- characters ------------------------------------------------------------


def dixon_modulus(order: int, exponent: int, search_limit: int = 10**7) -> int:
    lower = 2 * math.isqrt(order - 1) + 2 if order > 1 else 2
    start = lower + 1
    ell = start + (1 - start) % exponent
    while ell < search_limit:
        if ell > lower and sympy.isprime(ell):
            return ell
        ell += exponent
    raise NoSuitableModulus("no prime l = 1 mod exp(G) below the search limit", exponent=exponent)


@dataclass
class CharacterTable:
    order: int
    ell: int
    exponent: int
    classes: ClassData
    values_mod: np.ndarray  # rows: characters, columns: classes
    degrees: list[int]
    multiplicities: np.ndarray  # [char, class, i] multiplicity of zeta^i
    derived_order: int

    @property
    def values(self) -> np.ndarray:
        zeta = np.exp(2j * np.pi * np.arange(self.exponent) / self.exponent)
        return self.multiplicities @ zeta

    def degree_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for d in self.degrees:
            out[d] = out.get(d, 0) + 1
        return dict(sorted(out.items()))

    def linear_rows(self) -> list[int]:
        return [i for i, d in enumerate(self.degrees) if d == 1]


def class_matrix(G: FiniteGroup, cls: ClassData, j: int) -> np.ndarray:
    """A[i, k] = #{y in C_j : z_k y^-1 in C_i} for class representatives z_k."""
    m = len(cls)
    Yj = G.elements[cls.members[j]]
    Z = G.elements[cls.reps]
    Zt = np.repeat(Z, len(Yj), axis=0)
    Yt = np.tile(G.inv(Yj), (m, 1))
    target = cls.class_of[G.index(G.mul(Zt, Yt))]
    kcol = np.repeat(np.arange(m), len(Yj))
    A = np.zeros((m, m), dtype=np.int64)
    np.add.at(A, (target, kcol), 1)
    return A


def character_degrees(
    G: FiniteGroup, class_cap: int = DEFAULT_CLASS_CAP, seed: int = 0
) -> CharacterTable:
    """Full character table of G by Dixon-Schneider; all axioms are checked."""
    cls = conjugacy_classes(G)
    m = len(cls)
    if m > class_cap:
        raise CapExceeded("class count exceeds the cap", classes=m, cap=class_cap)
    exponent = max(cls.orders)
    ell = dixon_modulus(G.order, exponent)
    rng = random.Random(seed)
    # each space is (row basis in reduced echelon form, pivot columns)
    spaces = [(np.eye(m, dtype=np.int64), list(range(m)))]
    for j in range(m):
        if all(B.shape[0] == 1 for B, _ in spaces):
            break
        A = None
        refined = []
        for B, piv in spaces:
            if B.shape[0] == 1:
                refined.append((B, piv))
                continue
            if A is None:
                A = class_matrix(G, cls, j) % ell
            R = _matmul_mod(A[piv], B.T, ell)
            for ns in _eigen_split(R, ell, rng):
                refined.append(_rref(_matmul_mod(ns, B, ell), ell))
        spaces = refined
    if any(B.shape[0] != 1 for B, _ in spaces) or len(spaces) != m:
        raise NoSuitableModulus("class matrices failed to separate characters", ell=ell)

    sizes = np.array(cls.sizes, dtype=np.int64)
    inv = np.array(cls.inverse_class)
    inv_sizes = np.array([pow(int(s), -1, ell) for s in sizes], dtype=np.int64)
    rows = []
    degrees = []
    isqrt_order = math.isqrt(G.order)
    for B, _ in spaces:
        w = B[0] * pow(int(B[0, 0]), -1, ell) % ell
        s = int((w * w[inv] % ell * inv_sizes % ell).sum() % ell)
        d2 = G.order * pow(s, -1, ell) % ell
        deg = next((d for d in range(1, isqrt_order + 1) if d * d % ell == d2), None)
        if deg is None:
            raise NoSuitableModulus("degree does not lift", ell=ell)
        degrees.append(deg)
        rows.append(w * deg % ell * inv_sizes % ell)
    values_mod = np.array(rows, dtype=np.int64)

    # power maps: class of x^t = t x
    reps = G.elements[cls.reps]
    power = np.stack([cls.class_of[G.index((t * reps) % G.modulus)] for t in range(exponent)], axis=1)
    gen = sympy.primitive_root(ell)
    zeta = pow(gen, (ell - 1) // exponent, ell)
    e_inv = pow(exponent, -1, ell)
    mult = np.zeros((m, m, exponent), dtype=np.int64)
    zpow = np.array([pow(zeta, t, ell) for t in range(exponent)], dtype=np.int64)
    for c in range(m):
        chi_pows = values_mod[c][power]  # [class, t]
        for i in range(exponent):
            kernel = zpow[(-i * np.arange(exponent)) % exponent]
            mult[c, :, i] = (chi_pows @ kernel % ell) * e_inv % ell
    if np.any(mult > max(degrees)):
        raise NoSuitableModulus("cyclotomic multiplicities do not lift", ell=ell)

    order_rows = sorted(range(m), key=lambda c: (degrees[c], tuple(values_mod[c])))
    table = CharacterTable(
        order=G.order,
        ell=ell,
        exponent=exponent,
        classes=cls,
        values_mod=values_mod[order_rows],
        degrees=[degrees[c] for c in order_rows],
        multiplicities=mult[order_rows],
        derived_order=derived_subgroup_order(G),
    )
    _verify_table(table)
    return table


def _verify_table(t: CharacterTable) -> None:
    cls = t.classes
    m = len(cls)
    sizes = np.array(cls.sizes, dtype=np.int64)
    inv = np.array(cls.inverse_class)
    if sum(d * d for d in t.degrees) != t.order:
        raise GroupAxiomViolation("sum of squared degrees differs from |G|")
    if len(t.degrees) != m:
        raise GroupAxiomViolation("row count differs from class count")
    if len(t.linear_rows()) * t.derived_order != t.order:
        raise GroupAxiomViolation("linear characters do not match |G/G'|")
    X = t.values_mod
    gram = (X * (sizes % t.ell)) % t.ell @ X[:, inv].T % t.ell
    if not np.array_equal(gram, (t.order % t.ell) * np.eye(m, dtype=np.int64)):
        raise GroupAxiomViolation("row orthogonality fails mod l")
    V = t.values
    exact = np.rint(((V * sizes) @ V.conj().T).real).astype(np.int64)
    if not np.array_equal(exact, t.order * np.eye(m, dtype=np.int64)):
        raise GroupAxiomViolation("row orthogonality fails over C")
    col = np.rint((V.conj().T @ V).real).astype(np.int64)
    expected = np.diag(t.order // sizes)
    if not np.array_equal(col, expected):
        raise GroupAxiomViolation("column orthogonality fails over C")


def twist_isoclass_counts(t: CharacterTable) -> dict[int, int]:
    """Orbits of the linear characters acting by pointwise product, counted by degree."""
    lookup = {tuple(row): i for i, row in enumerate(t.values_mod)}
    linear = t.linear_rows()
    # a generating set of the linear character group suffices for orbits
    gens: list[int] = []
    reached = {lookup[tuple(np.ones(len(t.classes), dtype=np.int64))]}
    for lam in linear:
        if lam in reached:
            continue
        gens.append(lam)
        frontier = list(reached)
        while frontier:
            nxt = []
            for a in frontier:
                for g in gens:
                    b = lookup[tuple(t.values_mod[a] * t.values_mod[g] % t.ell)]
                    if b not in reached:
                        reached.add(b)
                        nxt.append(b)
            frontier = nxt
    parent = list(range(len(t.degrees)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in range(len(t.degrees)):
        for g in gens:
            other = lookup.get(tuple(t.values_mod[c] * t.values_mod[g] % t.ell))
            if other is None:
                raise GroupAxiomViolation("twist of a character is not a character")
            ra, rb = find(c), find(other)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    counts: dict[int, int] = {}
    for root in {find(c) for c in range(len(t.degrees))}:
        d = t.degrees[root]
        counts[d] = counts.get(d, 0) + 1
    return dict(sorted(counts.items()))


# --- comparison ------------------------------------------------------------


def oracle_report(
    lattice: LieLattice, p: int, N: int, cap: int = DEFAULT_ORDER_CAP, class_cap: int = DEFAULT_CLASS_CAP
) -> dict[str, Any]:
    G = build_group(lattice, p, N, cap=cap)
    table = character_degrees(G, class_cap=class_cap)
    return {
        "order": G.order,
        "classes": len(table.classes),
        "degrees": {str(k): v for k, v in table.degree_counts().items()},
        "twist_counts": {str(k): v for k, v in twist_isoclass_counts(table).items()},
        "associativity": G.associativity,
        "modulus": table.ell,
    }


def compare_oracle_poincare(
    lattice: LieLattice,
    p: int,
    N: int,
    n_cap: int | None = None,
    cap: int = DEFAULT_ORDER_CAP,
    class_cap: int = DEFAULT_CLASS_CAP,
    beyond_rule: bool = False,
) -> dict[str, Any]:
    """Twist counts of the level-N quotient against local zeta coefficients.

    ``n_cap`` defaults to floor(N/2); larger values need ``beyond_rule``.
    Stability at level N+1 is checked when that group fits under ``cap``.
    """
    if n_cap is None:
        n_cap = N // 2
    if n_cap > N // 2 and not beyond_rule:
        raise ValueError("n_cap must not exceed floor(N/2)")
    report = oracle_report(lattice, p, N, cap=cap, class_cap=class_cap)
    series = local_zeta(lattice, LocalRingSpec(p), n_cap)
    twists = {int(k): v for k, v in report["twist_counts"].items()}
    observed = [twists.get(p**n, 0) for n in range(n_cap + 1)]
    expected = list(series.coeffs)
    if observed != expected:
        raise MismatchFound(
            "oracle and Poincare series disagree",
            p=p,
            N=N,
            oracle=observed,
            poincare=[str(c) for c in expected],
        )
    stability: str | bool = "unchecked: next level exceeds the order cap"
    if p ** (lattice.rank * (N + 1)) <= cap:
        nxt = oracle_report(lattice, p, N + 1, cap=cap, class_cap=class_cap)
        tw = {int(k): v for k, v in nxt["twist_counts"].items()}
        stability = [tw.get(p**n, 0) for n in range(n_cap + 1)] == observed
        if not stability:
            raise MismatchFound("twist counts change at level N+1", p=p, N=N)
    report.update(
        {
            "n_cap": n_cap,
            "oracle_counts": observed,
            "poincare_counts": [str(c) for c in expected],
            "stable_next_level": stability,
            "matched": True,
        }
    )
    return report
