"""Finite abelian groups as products of cyclic groups.

Elements are addressed by a mixed-radix linear index (first coordinate most
significant, i.e. ``numpy.ravel_multi_index`` order), so a function on the
group is just a flat array of length ``|G|``.  Characters are indexed by
group elements through the canonical pairing

    gamma_xi(x) = prod_j exp(2 pi i xi_j x_j / m_j).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .errors import CapExceeded

#: Any operation enumerating more than this many tuples refuses to run.
ENUMERATION_CAP = 10**9


def set_enumeration_cap(cap: int) -> int:
    """Set the global enumeration cap and return the previous value."""
    global ENUMERATION_CAP
    old, ENUMERATION_CAP = ENUMERATION_CAP, int(cap)
    return old


def check_cap(count: int, what: str = "enumeration") -> None:
    if count > ENUMERATION_CAP:
        raise CapExceeded(f"{what} needs {count} tuples, cap is {ENUMERATION_CAP}")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % k for k in range(3, math.isqrt(n) + 1, 2))


def primes_between(lo: int, hi: int) -> list[int]:
    """Primes p with lo <= p <= hi."""
    return [p for p in range(max(lo, 2), hi + 1) if is_prime(p)]


@lru_cache(maxsize=64)
def roots_of_unity(m: int) -> np.ndarray:
    """``exp(2 pi i k / m)`` for k = 0..m-1, from cos/sin of reduced k."""
    k = np.arange(m)
    theta = 2.0 * np.pi * k / m
    out = np.cos(theta) + 1j * np.sin(theta)
    out.flags.writeable = False
    return out


def unit_root(k: int, m: int) -> complex:
    return cmath.exp(2j * cmath.pi * (k % m) / m)


@dataclass(frozen=True)
class GroupSpec:
    """The group Z_{m_1} x ... x Z_{m_k}."""

    moduli: tuple[int, ...]

    def __post_init__(self):
        moduli = tuple(int(m) for m in self.moduli)
        if not moduli:
            raise ValueError("a group needs at least one cyclic factor")
        if any(m < 2 for m in moduli):
            raise ValueError(f"every modulus must be >= 2, got {moduli}")
        object.__setattr__(self, "moduli", moduli)

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    @property
    def exponent(self) -> int:
        return math.lcm(*self.moduli)

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @cached_property
    def is_vector(self) -> bool:
        """True when the group is F_p^n (all moduli equal and prime)."""
        return len(set(self.moduli)) == 1 and is_prime(self.moduli[0])

    @property
    def p(self) -> int:
        if not self.is_vector:
            raise ValueError(f"{self} is not a vector space over a prime field")
        return self.moduli[0]

    @property
    def n(self) -> int:
        if not self.is_vector:
            raise ValueError(f"{self} is not a vector space over a prime field")
        return len(self.moduli)

    @property
    def enumerable(self) -> bool:
        return self.order <= ENUMERATION_CAP

    def __str__(self):
        if self.is_vector:
            return f"F_{self.p}^{self.n}" if self.n > 1 else f"Z_{self.p}"
        return " x ".join(f"Z_{m}" for m in self.moduli)

    # -- element arithmetic on index arrays --------------------------------

    def require_enumerable(self, power: int = 1) -> None:
        check_cap(self.order**power, f"enumerating {self}^{power}")

    def coords(self, index) -> np.ndarray:
        """Coordinates of one index (shape (k,)) or an index array (shape (..., k))."""
        index = np.asarray(index)
        return np.stack(np.unravel_index(index, self.moduli), axis=-1)

    def index(self, coords) -> np.ndarray | int:
        """Inverse of :meth:`coords`; coordinates are reduced first."""
        coords = np.asarray(coords) % np.asarray(self.moduli)
        out = np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.moduli)
        return int(out) if np.ndim(out) == 0 else out

    @cached_property
    def element_coords(self) -> np.ndarray:
        """(|G|, k) table of coordinates of every element in index order."""
        self.require_enumerable()
        out = self.coords(np.arange(self.order))
        out.flags.writeable = False
        return out

    def add(self, a, b):
        return self.index(self.coords(a) + self.coords(b))

    def neg(self, a):
        return self.index(-self.coords(a))

    def scale(self, c: int, a):
        return self.index(c * self.coords(a))

    @cached_property
    def shift_table(self) -> np.ndarray:
        """``T[h, x]`` is the index of x + h."""
        self.require_enumerable(2)
        c = self.element_coords
        summed = (c[:, None, :] + c[None, :, :]) % np.asarray(self.moduli)
        out = np.ravel_multi_index(tuple(np.moveaxis(summed, -1, 0)), self.moduli)
        out.flags.writeable = False
        return out


def make_group(moduli: Sequence[int]) -> GroupSpec:
    return GroupSpec(tuple(moduli))


def vector_space(p: int, n: int) -> GroupSpec:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return GroupSpec((p,) * n)


@dataclass(frozen=True)
class GroupElement:
    group: GroupSpec
    coords: tuple[int, ...]
    index: int = field(init=False)

    def __post_init__(self):
        if len(self.coords) != self.group.rank:
            raise ValueError(f"element has {len(self.coords)} coordinates, group {self.group} has {self.group.rank}")
        reduced = tuple(int(c) % m for c, m in zip(self.coords, self.group.moduli))
        object.__setattr__(self, "coords", reduced)
        object.__setattr__(self, "index", int(self.group.index(reduced)))

    @classmethod
    def from_index(cls, group: GroupSpec, index: int) -> "GroupElement":
        if not 0 <= index < group.order:
            raise ValueError(f"index {index} out of range for {group}")
        return cls(group, tuple(int(c) for c in group.coords(index)))

    def __add__(self, other: "GroupElement") -> "GroupElement":
        _same_group(self.group, other.group)
        return GroupElement(self.group, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, tuple(-a for a in self.coords))

    def __rmul__(self, c: int) -> "GroupElement":
        return GroupElement(self.group, tuple(c * a for a in self.coords))


def _same_group(g1: GroupSpec, g2: GroupSpec) -> None:
    if g1 != g2:
        raise ValueError(f"element of {g2} used with {g1}")


@dataclass(frozen=True, eq=False)
class DensityTable:
    """A real function on a finite abelian group with a declared range."""

    group: GroupSpec
    values: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    TOL = 1e-12

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.group.order:
            raise ValueError(f"table has {values.shape[0]} values, group {self.group} has order {self.group.order}")
        if self.lo > self.hi:
            raise ValueError("empty declared range")
        if values.size and (values.min() < self.lo - self.TOL or values.max() > self.hi + self.TOL):
            raise ValueError(
                f"values span [{values.min():.6g}, {values.max():.6g}], outside declared range [{self.lo}, {self.hi}]"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, group: GroupSpec, value: float, lo: float = 0.0, hi: float = 1.0) -> "DensityTable":
        return cls(group, np.full(group.order, float(value)), lo, hi)

    @classmethod
    def indicator(cls, group: GroupSpec, subset) -> "DensityTable":
        values = np.zeros(group.order)
        values[list(subset)] = 1.0
        return cls(group, values)

    def complement(self) -> "DensityTable":
        return DensityTable(self.group, 1.0 - self.values, 1.0 - self.hi, 1.0 - self.lo)

    def __len__(self):
        return self.values.shape[0]

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / len(self)

    def is_indicator(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))


# -- characters and Fourier analysis ----------------------------------------


def _character_phase(group: GroupSpec, freq, point) -> np.ndarray:
    """Integer k with gamma_freq(point) = exp(2 pi i k / exponent)."""
    L = group.exponent
    weights = np.asarray([L // m for m in group.moduli])
    mod = np.asarray(group.moduli)
    prod = (np.asarray(freq) * np.asarray(point)) % mod
    return (prod * weights).sum(axis=-1) % L


def character_value(group: GroupSpec, freq: GroupElement, point: GroupElement) -> complex:
    _same_group(group, freq.group)
    _same_group(group, point.group)
    return complex(roots_of_unity(group.exponent)[int(_character_phase(group, freq.coords, point.coords))])


def character_matrix(group: GroupSpec) -> np.ndarray:
    """``X[xi, x] = gamma_xi(x)`` for all characters and points."""
    group.require_enumerable(2)
    c = group.element_coords
    k = _character_phase(group, c[:, None, :], c[None, :, :])
    return roots_of_unity(group.exponent)[k]


def fourier_transform(f: DensityTable | np.ndarray, group: GroupSpec | None = None) -> np.ndarray:
    """``fhat[xi] = E_x gamma_xi(x) f(x)``, indexed like group elements.

    Uses numpy's inverse FFT over the product shape, whose sign and
    normalisation match this convention exactly.
    """
    if isinstance(f, DensityTable):
        group, values = f.group, f.values
    else:
        values = np.asarray(f)
    return np.fft.ifftn(values.reshape(group.moduli)).reshape(-1)


def fourier_transform_direct(f: DensityTable) -> np.ndarray:
    """O(|G|^2) transform through the character matrix; used as an oracle."""
    return character_matrix(f.group) @ f.values / f.group.order


def dual_index(group: GroupSpec, xi) -> np.ndarray | int:
    """Index of the inverse character (i.e. of -xi)."""
    return group.neg(xi)


def plancherel_pair(f1: DensityTable, f2: DensityTable) -> tuple[complex, float]:
    """Both sides of Plancherel: (sum_gamma f1^ conj f2^, E f1 f2)."""
    lhs = np.vdot(fourier_transform(f2), fourier_transform(f1))
    rhs = math.fsum(f1.values * f2.values) / f1.group.order
    return complex(lhs), rhs


# -- phase averages ----------------------------------------------------------


def _require_vector(group: GroupSpec) -> None:
    if not group.is_vector:
        raise ValueError(f"{group} is not in vector mode (all moduli equal and prime)")


def gauss_average_1d(p: int, a: int, b: int) -> complex:
    """E_{t in F_p} omega^{a t^2 + b t}."""
    t = np.arange(p)
    return complex(roots_of_unity(p)[(a * t * t + b * t) % p].mean())


def phase_average(group: GroupSpec, a: int, b0: int, c: int) -> complex:
    """E_{x in F_p^n} omega^{a x.x + b0 (1.x) + c}, factorised coordinatewise."""
    _require_vector(group)
    p, n = group.p, group.n
    return gauss_average_1d(p, a, b0) ** n * unit_root(c, p)


def phase_average_direct(group: GroupSpec, a: int, b0: int, c: int) -> complex:
    """Brute-force version of :func:`phase_average` for small groups."""
    _require_vector(group)
    p = group.p
    x = group.element_coords
    phase = (a * (x * x).sum(axis=1) + b0 * x.sum(axis=1) + c) % p
    return complex(roots_of_unity(p)[phase].mean())


def mixed_phase_average(group: GroupSpec, a: int, b0: int, c: int, d: int) -> float:
    """E_y |E_x omega^{a x.x + d y.x + b0 (1.x) + c}| by double enumeration."""
    _require_vector(group)
    p = group.p
    x = group.element_coords
    base = (a * (x * x).sum(axis=1) + b0 * x.sum(axis=1) + c) % p
    cross = (d * (x @ x.T)) % p  # cross[y, x] = d y.x
    inner = roots_of_unity(p)[(cross + base[None, :]) % p].mean(axis=1)
    return math.fsum(np.abs(inner)) / group.order


def mixed_phase_average_factored(group: GroupSpec, a: int, b0: int, c: int, d: int) -> float:
    """Same quantity as :func:`mixed_phase_average`, one coordinate at a time."""
    _require_vector(group)
    p, n = group.p, group.n
    per_coord = [abs(gauss_average_1d(p, a, (d * s + b0) % p)) for s in range(p)]
    return (math.fsum(per_coord) / p) ** n
