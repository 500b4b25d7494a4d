"""Arithmetic multiplicities: direct enumeration, the structured expansion for
muting-method functions, and exhaustive 2-colouring search on tiny groups.

All multiplicities are parameter-space averages E_{w in G^r} prod_i f(phi_i(w)).
For injective systems this is the average over the instance set.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import CapExceeded
from .group_core import DensityTable, GroupSpec, check_cap, is_prime, roots_of_unity
from .linear_forms import FormSystem, span_coefficients


def _exact_mean(chunks: Iterable[np.ndarray], count: int) -> float:
    """Correctly rounded sum (math.fsum) divided by count; chunking-invariant."""
    return math.fsum(itertools.chain.from_iterable(c.tolist() for c in chunks)) / count


def _check_domain(system: FormSystem, f: DensityTable) -> None:
    if f.group != system.group:
        raise ValueError(f"function lives on {f.group}, system on {system.group}")


def multiplicity_direct(system: FormSystem, f: DensityTable) -> float:
    """t(f) = E_{w in G^r} prod_i f(phi_i(w))."""
    _check_domain(system, f)
    vals = f.values
    return _exact_mean((vals[inst].prod(axis=1) for inst in system.instance_chunks()), system.parameter_count)


def multiplicity_pair(system: FormSystem, f: DensityTable) -> tuple[float, float]:
    """(t(f), t(1 - f)) in a single pass."""
    _check_domain(system, f)
    vals, comp = f.values, 1.0 - f.values
    a, b = [], []
    for inst in system.instance_chunks():
        a.append(vals[inst].prod(axis=1))
        b.append(comp[inst].prod(axis=1))
    n = system.parameter_count
    return _exact_mean(a, n), _exact_mean(b, n)


def threshold(d: int) -> float:
    """Random-colouring baseline 2^{1-d}."""
    return 2.0 ** (1 - d)


def monochromatic_pair(system: FormSystem, f: DensityTable) -> float:
    """t(f) + t(1 - f) for f with values in [0, 1]."""
    if f.values.min() < -DensityTable.TOL or f.values.max() > 1 + DensityTable.TOL:
        raise ValueError("monochromatic_pair needs a [0,1]-valued function")
    t, tc = multiplicity_pair(system, f)
    return t + tc


# -- recipes for muting-method functions ---------------------------------------


@dataclass(frozen=True)
class PhaseAtom:
    """weight * omega^{lam (t^2 + q t)} per scalar coordinate t."""

    lam: int
    weight: float
    q: int = 1

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("lambda must be nonzero")
        if abs(self.weight) > 1:
            raise ValueError("atom weights are bounded by 1 in modulus")


@dataclass(frozen=True, eq=False)
class CounterexampleRecipe:
    """Symbolic f = 1/2 + alpha f1 f2.

    vector mode: G = F_p^{n+1}, f1 reads coordinate 0, f2 is the product-phase
    sum over coordinates 1..n.  cyclic mode: G = Z_p and f1, f2 both read x.
    """

    mode: str
    p: int
    n: int
    directional: np.ndarray
    atoms: tuple[PhaseAtom, ...]
    alpha: float
    beta: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("vector", "cyclic"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.mode == "vector" and self.n < 1:
            raise ValueError("vector mode requires n >= 1")
        if self.mode == "cyclic" and self.n != 1:
            raise ValueError("cyclic mode has n = 1")
        directional = np.array(self.directional, dtype=float).reshape(-1)
        if directional.shape[0] != self.p:
            raise ValueError("directional table must live on Z_p")
        directional.flags.writeable = False
        object.__setattr__(self, "directional", directional)
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.alpha < 0 or self.alpha > self.alpha_cap * (1 + 1e-12):
            raise ValueError(f"alpha={self.alpha} outside [0, {self.alpha_cap}]: f would leave [0,1]")

    @property
    def f1_max(self) -> float:
        return float(np.abs(self.directional).max())

    @property
    def f2_max(self) -> float:
        return math.fsum(abs(a.weight) for a in self.atoms)

    @property
    def alpha_cap(self) -> float:
        return alpha_cap(self.f1_max, self.f2_max)

    @property
    def group(self) -> GroupSpec:
        return GroupSpec((self.p,) * (self.n + 1 if self.mode == "vector" else 1))

    def with_params(self, alpha: float, beta: float | None = None, atoms=None) -> "CounterexampleRecipe":
        return CounterexampleRecipe(
            self.mode, self.p, self.n, self.directional, self.atoms if atoms is None else atoms,
            alpha, self.beta if beta is None else beta, dict(self.meta),
        )

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "p": self.p,
            "n": self.n,
            "directional": [float(v) for v in self.directional],
            "atoms": [{"lambda": a.lam, "weight": a.weight, "q": a.q} for a in self.atoms],
            "alpha": self.alpha,
            "beta": self.beta,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CounterexampleRecipe":
        atoms = tuple(PhaseAtom(int(a["lambda"]), float(a["weight"]), int(a.get("q", 1))) for a in data["atoms"])
        return cls(
            data["mode"], int(data["p"]), int(data["n"]), np.array(data["directional"], dtype=float),
            atoms, float(data["alpha"]), float(data["beta"]), dict(data.get("meta", {})),
        )


def alpha_cap(f1_max: float, f2_max: float) -> float:
    """Largest alpha keeping 1/2 + alpha f1 f2 inside [0, 1]."""
    return 1.0 / (2.0 * f1_max * f2_max)


def muting_values(atoms: Sequence[PhaseAtom], p: int, s: np.ndarray) -> np.ndarray:
    """Real value sum_a w_a cos(2 pi lam_a s / p) for phase sums s (already mod p)."""
    roots = roots_of_unity(p)
    out = np.zeros(np.shape(s))
    for a in atoms:
        out += a.weight * roots[(a.lam * np.asarray(s)) % p].real
    return out


def cyclic_product_table(recipe: CounterexampleRecipe) -> np.ndarray:
    """h = f1 * f2 on Z_p for a cyclic recipe."""
    p = recipe.p
    x = np.arange(p)
    q = recipe.atoms[0].q if recipe.atoms else 1
    return recipe.directional * muting_values(recipe.atoms, p, (x * x + q * x) % p)


# -- structured evaluation -------------------------------------------------------


@dataclass(frozen=True)
class StructuredValue:
    value: float
    truncation_bound: float
    coefficients: dict  # k -> sum over |I| = k of the subset term
    threshold: float

    @property
    def margin(self) -> float:
        return self.threshold - self.value


def _lattice(p: int, k: int, start: int, stop: int) -> np.ndarray:
    t = np.arange(start, stop)
    return np.stack(np.unravel_index(t, (p,) * k), axis=-1) if k else np.zeros((stop - start, 0), dtype=np.int64)


def average_product(tables: np.ndarray | Sequence[np.ndarray], coeff: np.ndarray, p: int, chunk: int = 1 << 18) -> float:
    """E_{u in Z_p^k} prod_i table_i[(coeff_i . u) mod p].

    ``tables`` is one array used for every row or a sequence of per-row arrays.
    """
    m, k = coeff.shape
    per_row = tables if not isinstance(tables, np.ndarray) or tables.ndim == 2 else [tables] * m
    total = p**k
    check_cap(total, f"averaging over Z_{p}^{k}")

    def chunks():
        for start in range(0, total, chunk):
            u = _lattice(p, k, start, min(start + chunk, total))
            vals = (u @ coeff.T) % p
            prod = np.ones(vals.shape[0])
            for i in range(m):
                prod *= per_row[i][vals[:, i]]
            yield prod

    return _exact_mean(chunks(), total)


def muting_lambda_terms(coeff: np.ndarray, atoms: Sequence[PhaseAtom], p: int):
    """Per atom tuple lambda: (lambda, weight product W, one-coordinate sum S).

    With phi_i(u) = coeff_i . u on F_p^k, S(lambda) = E_u omega^{sum_i lam_i
    (phi_i^2 + q phi_i)} and the n-coordinate average of prod_i f2(phi_i) is
    sum_lambda W(lambda) S(lambda)^n.
    """
    coeff = np.asarray(coeff, dtype=np.int64) % p
    m, k = coeff.shape
    total = p**k
    check_cap(total * len(atoms) ** m, "muting expansion")
    u = _lattice(p, k, 0, total)
    vals = (u @ coeff.T) % p  # (p^k, m)
    lam = np.array([a.lam for a in atoms])
    wts = np.array([a.weight for a in atoms])
    q = atoms[0].q
    Q = (vals * vals + q * vals) % p
    idx = np.array(list(itertools.product(range(len(atoms)), repeat=m))).reshape(-1, m)
    Lam = lam[idx]
    W = wts[idx].prod(axis=1)
    roots = roots_of_unity(p)
    S = np.empty(len(idx), dtype=complex)
    block = max(1, (1 << 22) // total)
    for start in range(0, len(idx), block):
        phases = (Lam[start:start + block] @ Q.T) % p
        S[start:start + block] = roots[phases].mean(axis=1)
    return Lam, W, S


def muting_expectation(coeff: np.ndarray, atoms: Sequence[PhaseAtom], p: int, n: int) -> float:
    _, W, S = muting_lambda_terms(coeff, atoms, p)
    return math.fsum((W * S**n).real.tolist())


def _muting_factor(coeff: np.ndarray, recipe: CounterexampleRecipe) -> float:
    return muting_expectation(coeff, recipe.atoms, recipe.p, recipe.n)


def structured_cost(system: FormSystem, recipe: CounterexampleRecipe, subset_cap: int) -> int:
    p, cost = recipe.p, 0
    for size in range(2, min(subset_cap, system.d) + 1, 2):
        for I in itertools.combinations(range(system.d), size):
            _, coeff = span_coefficients([system.matrix[i] for i in I], p)
            k = coeff.shape[1]
            cost += (len(recipe.atoms) ** size if recipe.mode == "vector" else 1) * p**k + p**k
    return cost


def expansion_coefficients(system: FormSystem, recipe: CounterexampleRecipe, subset_cap: int | None = None) -> dict:
    """T_k = sum_{|I|=k} E prod_{i in I} f1(phi_i) f2(phi_i) for even k <= cap.

    These do not depend on alpha, so one call serves a whole alpha scan.
    """
    d, p = system.d, recipe.p
    cap = d if subset_cap is None else min(subset_cap, d)
    g = system.group
    if recipe.mode == "vector":
        if not g.is_vector or g.p != p or g.n != recipe.n + 1:
            raise ValueError(f"vector recipe needs F_{p}^{recipe.n + 1}, system is on {g}")
        if len({a.q for a in recipe.atoms}) > 1:
            raise ValueError("muting atoms with different linear scalings do not factorise")
    else:
        if g.moduli != (p,):
            raise ValueError(f"cyclic recipe needs Z_{p}, system is on {g}")
    cost = structured_cost(system, recipe, cap)
    check_cap(cost, "structured evaluation")
    h = cyclic_product_table(recipe) if recipe.mode == "cyclic" else None
    coeffs = {}
    for size in range(2, cap + 1, 2):
        total = []
        for I in itertools.combinations(range(d), size):
            _, coeff = span_coefficients([system.matrix[i] for i in I], p)
            if recipe.mode == "vector":
                directional = average_product(recipe.directional, coeff, p)
                total.append(directional * _muting_factor(coeff, recipe) if directional else 0.0)
            elif coeff.shape[1] == size:  # independent forms: the average factorises
                total.append((math.fsum(h.tolist()) / p) ** size)
            else:
                total.append(average_product(h, coeff, p))
        coeffs[size] = math.fsum(total)
    return coeffs


def value_from_coefficients(coeffs: dict, d: int, alpha: float) -> float:
    return math.fsum([threshold(d)] + [2.0 ** (k + 1 - d) * alpha**k * T for k, T in sorted(coeffs.items())])


def truncation_bound(d: int, cap: int, alpha: float, amplitude: float) -> float:
    """sum_{k > cap} 2^{k+1-d} C(d,k) (alpha * amplitude)^k."""
    return math.fsum(2.0 ** (k + 1 - d) * math.comb(d, k) * (alpha * amplitude) ** k for k in range(cap + 1, d + 1))


def multiplicity_structured(system: FormSystem, recipe: CounterexampleRecipe, subset_cap: int | None = None) -> StructuredValue:
    """t(f) + t(1 - f) for the recipe's function, via the subset expansion.

    Odd subsets cancel between f and 1 - f.  In vector mode every muting
    factor is a power of a single F_p^k sum, so the cost does not grow with n.
    """
    d = system.d
    cap = d if subset_cap is None else min(subset_cap, d)
    coeffs = expansion_coefficients(system, recipe, cap)
    value = value_from_coefficients(coeffs, d, recipe.alpha)
    bound = truncation_bound(d, cap, recipe.alpha, recipe.f1_max * recipe.f2_max)
    return StructuredValue(value, bound, coeffs, threshold(d))


# -- exhaustive colouring search --------------------------------------------------


@dataclass(frozen=True)
class MinColoring:
    subset: tuple[int, ...]
    value: Fraction
    threshold: Fraction

    @property
    def common(self) -> bool:
        return self.value >= self.threshold


def coloring_counts(inst: np.ndarray, masks: np.ndarray, order: int) -> np.ndarray:
    """Monochromatic tuple counts (in A plus in A^C) for subset bitmasks."""
    bits = ((masks[:, None] >> np.arange(order)[None, :]) & 1).astype(bool)  # (B, |G|)
    colored = bits[:, inst]  # (B, N, d)
    return colored.all(axis=2).sum(axis=1) + (~colored).all(axis=2).sum(axis=1)


def min_coloring(system: FormSystem, max_order: int = 25) -> MinColoring:
    """Minimum of t(A) + t(A^C) over all 2^|G| subsets A."""
    order = system.group.order
    if order > max_order:
        raise CapExceeded(f"exhaustive search over 2^{order} colourings refused (|G| <= {max_order})")
    N = system.parameter_count
    check_cap(N * 2**order, "exhaustive colouring search")
    inst = system.instances()
    best_count, best_mask = None, None
    batch = max(1, (1 << 22) // (N * system.d))
    for start in range(0, 2**order, batch):
        masks = np.arange(start, min(start + batch, 2**order), dtype=np.int64)
        counts = coloring_counts(inst, masks, order)
        i = int(np.argmin(counts))
        if best_count is None or counts[i] < best_count:
            best_count, best_mask = int(counts[i]), int(masks[i])
    subset = tuple(x for x in range(order) if best_mask >> x & 1)
    return MinColoring(subset, Fraction(best_count, N), Fraction(1, 2 ** (system.d - 1)))
