"""Systems of linear forms induced by integer matrices.

A d x r integer matrix M induces Phi: G^r -> G^d, Phi(w)_i = sum_k M[i][k] w_k,
evaluated coordinatewise modulo each cyclic factor of G.  This module also
holds the modular linear algebra the constructions need: rank mod p,
reparametrisation through an adjugate, C-fractions and the splitting of
modular progressions into integer ones.

Indices of forms are 0-based throughout.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .group_core import GroupSpec, check_cap

CHUNK = 1 << 18


def least_abs(x: int, p: int) -> int:
    """Representative of x mod p in (-p/2, p/2]."""
    x %= p
    return x - p if x > p // 2 else x


def rank_mod_p(rows: Sequence[Sequence[int]], p: int) -> int:
    return len(_echelon(rows, p)[1])


def _echelon(rows, p):
    """Row-reduce mod p; returns (reduced rows, pivot columns)."""
    m = [[int(v) % p for v in row] for row in rows]
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][col]), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = pow(m[r][col], -1, p)
        m[r] = [v * inv % p for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col]:
                f = m[i][col]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
    return m, pivots


def determinant(mat: Sequence[Sequence[int]]) -> int:
    """Exact integer determinant (Bareiss fraction-free elimination)."""
    a = [list(map(int, row)) for row in mat]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k]), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def adjugate(mat: Sequence[Sequence[int]]) -> list[list[int]]:
    """Integer adjugate: adj(B) @ B = det(B) I."""
    n = len(mat)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(mat) if k != i]
            adj[j][i] = (-1) ** (i + j) * determinant(minor)
    return adj


@dataclass(frozen=True)
class FormSystem:
    """The system of forms induced by ``matrix`` on ``group``."""

    matrix: tuple[tuple[int, ...], ...]
    group: GroupSpec

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.matrix)
        if not rows or not rows[0]:
            raise ValueError("matrix must have at least one row and one column")
        if any(len(row) != len(rows[0]) for row in rows):
            raise ValueError("ragged matrix: all rows need the same length")
        object.__setattr__(self, "matrix", rows)

    @property
    def d(self) -> int:
        return len(self.matrix)

    @property
    def r(self) -> int:
        return len(self.matrix[0])

    @cached_property
    def reduced(self) -> np.ndarray:
        """``R[j, i, k] = M[i][k] mod m_j`` for each cyclic factor j."""
        M = np.array(self.matrix, dtype=object)
        return np.stack([(M % m).astype(np.int64) for m in self.group.moduli])

    @cached_property
    def rows_mod_p(self) -> tuple[tuple[int, ...], ...]:
        p = self.group.p
        return tuple(tuple(v % p for v in row) for row in self.matrix)

    @property
    def C1(self) -> int:
        """Strict bound on the matrix entries (|M_ij| < C1)."""
        return max(abs(v) for row in self.matrix for v in row) + 1

    @cached_property
    def distinct(self) -> bool:
        """Pairwise distinct as maps G^r -> G."""
        mods = self.group.moduli
        for a, b in itertools.combinations(self.matrix, 2):
            if all(all((x - y) % m == 0 for x, y in zip(a, b)) for m in mods):
                return False
        return True

    @cached_property
    def rank(self) -> int | None:
        if not self.group.is_vector:
            return None
        return rank_mod_p(self.matrix, self.group.p)

    @property
    def injective(self) -> bool | None:
        """Rank r mod p (vector mode only; ``None`` otherwise)."""
        return None if self.rank is None else self.rank == self.r

    def subsystem(self, indices: Sequence[int]) -> "FormSystem":
        return FormSystem(tuple(self.matrix[i] for i in indices), self.group)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, w) -> np.ndarray:
        """Map parameter tuples (index array of shape (..., r)) to instances (..., d)."""
        g = self.group
        c = g.coords(np.asarray(w))  # (..., r, k)
        forms = np.einsum("jir,...rj->...ij", self.reduced, c) % np.asarray(g.moduli)
        return np.ravel_multi_index(tuple(np.moveaxis(forms, -1, 0)), g.moduli)

    @property
    def parameter_count(self) -> int:
        return self.group.order**self.r

    def instance_chunks(self, chunk: int = CHUNK) -> Iterator[np.ndarray]:
        """Yield (N, d) index arrays covering Phi(G^r) in parameter order."""
        total = self.parameter_count
        check_cap(total, f"enumerating {self.group}^{self.r}")
        shape = (self.group.order,) * self.r
        for start in range(0, total, chunk):
            t = np.arange(start, min(start + chunk, total))
            w = np.stack(np.unravel_index(t, shape), axis=-1)
            yield self.evaluate(w)

    def instances(self) -> np.ndarray:
        return np.concatenate(list(self.instance_chunks()))

    def image(self) -> set[tuple[int, ...]]:
        return {tuple(map(int, row)) for chunk in self.instance_chunks() for row in chunk}


def induce_system(matrix: Sequence[Sequence[int]], group: GroupSpec) -> FormSystem:
    return FormSystem(tuple(tuple(row) for row in matrix), group)


def four_ap_matrix() -> list[list[int]]:
    return [[1, 0], [1, 1], [1, 2], [1, 3]]


def _require_vector(system: FormSystem) -> int:
    if not system.group.is_vector:
        raise ValueError(f"{system.group} is not in vector mode")
    return system.group.p


def detect_four_ap(system: FormSystem) -> tuple[int, int, int, int] | None:
    """First ordered quadruple (i1, i2, i3, i4) of forms in arithmetic progression.

    Subsets are scanned in lexicographic order and, within a subset, orderings
    in lexicographic permutation order; an ordering and its reversal are both
    valid, so a hit is the lexicographically smaller of the two.  The common
    difference must be a nonzero form.  Orderings that are progressions over
    the integers are preferred; small primes admit extra orderings (in Z_5
    any progression with difference e is also one with difference 2e), and
    those are only reported when no integer ordering exists.
    """
    p = _require_vector(system)
    exact = [np.array(r, dtype=object) for r in system.matrix]

    def is_ap(order, mod):
        a, b, c, d = (exact[i] for i in order)
        diff = b - a
        if mod:
            diff, c_b, d_c = diff % mod, (c - b) % mod, (d - c) % mod
        else:
            c_b, d_c = c - b, d - c
        return any(diff) and list(c_b) == list(diff) and list(d_c) == list(diff)

    for mod in (None, p):
        for subset in itertools.combinations(range(system.d), 4):
            for order in itertools.permutations(subset):
                if is_ap(order, mod):
                    return order
    return None


@dataclass(frozen=True)
class ProportionalPair:
    i: int
    j: int
    c: int  # row_j = c * row_i mod p
    has_negation: bool  # some pair (not necessarily this one) has c = -1


def _ratio(u, v, p):
    """c with v = c u mod p, or None."""
    k = next((t for t, x in enumerate(u) if x % p), None)
    if k is None:
        return None
    c = v[k] * pow(u[k], -1, p) % p
    return c if all((c * x - y) % p == 0 for x, y in zip(u, v)) else None


def detect_proportional_pair(system: FormSystem) -> ProportionalPair | None:
    p = _require_vector(system)
    rows = system.rows_mod_p
    found = []
    for i, j in itertools.combinations(range(system.d), 2):
        c = _ratio(rows[i], rows[j], p)
        if c is not None and c not in (0, 1):
            found.append((i, j, c))
    if not found:
        return None
    negation = any(c == p - 1 for _, _, c in found)
    i, j, c = found[0]
    return ProportionalPair(i, j, c, negation)


# -- reparametrisation --------------------------------------------------------


@dataclass(frozen=True)
class Reparametrization:
    system: FormSystem  # pivot forms are the first coordinates
    transform: tuple[tuple[int, ...], ...]  # r x r integer matrix acting on G^r
    determinant: int  # det of the extended pivot matrix B
    c2: int  # r C1 (C1 sqrt r)^r rounded up; new coefficients are c2-fractions
    fraction_bound: int  # largest minimal fraction bound among the new coefficients


def reparametrize(system: FormSystem, pivots: Sequence[int]) -> Reparametrization:
    """Change variables so that form ``pivots[j]`` becomes the coordinate v_j.

    The pivot rows are extended by unit vectors to an invertible B, and the
    new system is induced by M' = M (m adj B) with m = det(B)^{-1} mod p.
    Coefficients are stored as least-absolute residues mod p.
    """
    p = _require_vector(system)
    r = system.r
    pivots = list(pivots)
    piv_rows = [list(system.matrix[i]) for i in pivots]
    if len(set(pivots)) != len(pivots) or rank_mod_p(piv_rows, p) != len(pivots):
        raise ValueError(f"pivot forms {pivots} are not linearly independent mod {p}")
    B = list(piv_rows)
    for k in range(r):
        if len(B) == r:
            break
        unit = [int(k == t) for t in range(r)]
        if rank_mod_p(B + [unit], p) == len(B) + 1:
            B.append(unit)
    det = determinant(B)
    if det % p == 0:
        raise ValueError("extended pivot matrix is singular mod p")
    A = adjugate(B)
    m = pow(det % p, -1, p)
    T = [[m * A[i][j] % p for j in range(r)] for i in range(r)]
    new_rows = []
    for row in system.matrix:
        new_rows.append(tuple(least_abs(sum(row[k] * T[k][j] for k in range(r)), p) for j in range(r)))
    new_system = FormSystem(tuple(new_rows), system.group)
    C1 = system.C1
    c2 = math.ceil(r * C1 * (C1 * math.sqrt(r)) ** r)
    bound = max(c_fraction_bound(v, p, p + 1).bound for row in new_rows for v in row)
    return Reparametrization(new_system, tuple(map(tuple, T)), det, c2, bound)


def span_coefficients(rows: Sequence[Sequence[int]], p: int) -> tuple[list[int], np.ndarray]:
    """Express every row in terms of a greedy basis of the rows, mod p.

    Returns the basis row positions and a (len(rows), rank) coefficient
    matrix; since a linear surjection G^r -> G^k has equal fibres, averages
    over G^r of functions of the rows equal averages over G^k of functions
    of ``coeff @ v``.
    """
    basis: list[int] = []
    for i, row in enumerate(rows):
        if rank_mod_p([rows[b] for b in basis] + [row], p) > len(basis):
            basis.append(i)
    if not basis:
        return basis, np.zeros((len(rows), 0), dtype=np.int64)
    k = len(basis)
    rep = reparametrize(FormSystem(tuple(tuple(x) for x in rows), GroupSpec((p,))), basis)
    if any(c % p for row in rep.system.matrix for c in row[k:]):
        raise ArithmeticError("row outside the span of the chosen basis")
    coeff = np.array([[c % p for c in row[:k]] for row in rep.system.matrix], dtype=np.int64)
    return basis, coeff


# -- C-fractions ---------------------------------------------------------------


@dataclass(frozen=True)
class FractionWitness:
    """x z = y mod p with |y|, z < bound."""

    x: int
    y: int
    z: int
    bound: int
    p: int

    def valid(self) -> bool:
        return (
            self.z >= 1
            and abs(self.y) < self.bound
            and self.z < self.bound
            and (self.x * self.z - self.y) % self.p == 0
        )


def c_fraction_bound(x: int, p: int, cap: int) -> FractionWitness | None:
    """Witness minimising max(|y|, z); ties go to the smallest z."""
    if cap < 2:
        raise ValueError("cap must be >= 2")
    best = None
    for z in range(1, cap):
        if best is not None and z >= best[0]:
            break
        y = least_abs(x * z, p)
        size = max(abs(y), z)
        if best is None or size < best[0]:
            best = (size, y, z)
    if best is None or best[0] + 1 > cap:
        return None
    size, y, z = best
    return FractionWitness(x % p, y, z, size + 1, p)


def c_fractions(p: int, C: int) -> list[int]:
    """All residues mod p that are C-fractions, sorted."""
    out = set()
    for z in range(1, C):
        zinv = pow(z, -1, p) if z % p else None
        if zinv is None:
            continue
        for y in range(-(C - 1), C):
            out.add(y * zinv % p)
    return sorted(out)


def fraction_product(w1: FractionWitness, w2: FractionWitness) -> FractionWitness:
    return FractionWitness(w1.x * w2.x % w1.p, w1.y * w2.y, w1.z * w2.z, w1.bound * w2.bound, w1.p)


def fraction_sum(w1: FractionWitness, w2: FractionWitness) -> FractionWitness:
    return FractionWitness(
        (w1.x + w2.x) % w1.p, w1.y * w2.z + w2.y * w1.z, w1.z * w2.z, 2 * w1.bound * w2.bound, w1.p
    )


def fraction_negation(w: FractionWitness) -> FractionWitness:
    return FractionWitness(-w.x % w.p, -w.y, w.z, w.bound, w.p)


def fraction_inverse(w: FractionWitness) -> FractionWitness:
    if w.x % w.p == 0:
        raise ZeroDivisionError("0 has no inverse mod p")
    sign = 1 if w.y > 0 else -1
    return FractionWitness(pow(w.x, -1, w.p), sign * w.z, abs(w.y), w.bound, w.p)


# -- arithmetic progressions ----------------------------------------------------


@dataclass(frozen=True)
class APDescriptor:
    """{start + j * step : 0 <= j < length}, reduced mod ``modulus`` if given."""

    start: int
    step: int
    length: int
    modulus: int | None = None

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("negative length")
        if self.modulus is not None and self.length > self.modulus:
            raise ValueError("modular progression longer than its modulus")

    def members(self) -> list[int]:
        vals = [self.start + j * self.step for j in range(self.length)]
        return [v % self.modulus for v in vals] if self.modulus else vals

    def residues(self, p: int) -> set[int]:
        return {v % p for v in self.members()}


def split_ap(ap: APDescriptor, witness: FractionWitness) -> list[APDescriptor]:
    """Split a progression mod p into integer progressions inside [0, p-1].

    With s z = y mod p, index j = i + k z gives t + j s = (t + i s) + k y, so
    the progression is a union of z progressions of difference y; each is cut
    at multiples of p and translated into [0, p-1].  All pieces share the
    common difference |y|.
    """
    p = ap.modulus
    if p is None:
        raise ValueError("split_ap needs a modular progression")
    t, s, L = ap.start % p, ap.step % p, ap.length
    if s == 0:
        raise ValueError("common difference is 0 mod p")
    if witness.x % p != s or not witness.valid():
        raise ValueError(f"witness {witness} does not certify step {s} mod {p}")
    y, z = witness.y, witness.z
    if y < 0:  # run the progression backwards: step -s, witness (-y, z)
        t, s, y = (t + (L - 1) * s) % p, (-s) % p, -y
    pieces = []
    for i in range(min(z, L)):
        count = (L - 1 - i) // z + 1
        first = (t + i * s) % p
        last = first + (count - 1) * y
        k = 0
        while k * p <= last:
            lo = max(first, k * p)
            hi = min(last, (k + 1) * p - 1)
            # members first + j y with lo <= . <= hi
            j0 = -(-(lo - first) // y)
            j1 = (hi - first) // y
            if j1 >= j0:
                pieces.append(APDescriptor(first + j0 * y - k * p, y, j1 - j0 + 1))
            k += 1
    pieces.sort(key=lambda a: (a.start, a.length))
    return pieces
