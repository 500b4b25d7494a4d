"""Explicit counterexample functions.

Directional parts on Z_p, muting parts built from quadratic phases, the two
constructions for systems with a proportional pair of forms, a grid tuner for
the muting construction, and the descent that rounds a fractional function
to a genuine 2-colouring.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NoConstruction
from .group_core import DensityTable, check_cap, is_prime, make_group, roots_of_unity
from .linear_forms import APDescriptor, FormSystem, detect_four_ap, detect_proportional_pair, induce_system
from .multiplicity import (
    CounterexampleRecipe,
    PhaseAtom,
    expansion_coefficients,
    monochromatic_pair,
    multiplicity_pair,
    muting_values,
    threshold,
    truncation_bound,
    value_from_coefficients,
)

DIRECTIONAL_BOUND = -2 / 199**2


# -- directional parts -----------------------------------------------------------


@dataclass(frozen=True)
class DirectionalSpec:
    """f = a 1_{pi([0, M])} - b 1_{pi(A)} on Z_p, A an integer AP inside [0, M]."""

    p: int
    M: int
    a: Fraction
    b: Fraction
    A: APDescriptor
    case: int

    def __post_init__(self):
        if not (is_prime(self.p) and self.p >= 5):
            raise ValueError(f"directional parts need a prime p >= 5, got {self.p}")
        members = self.A.members()
        if members and (min(members) < 0 or max(members) > self.M):
            raise ValueError("A must lie inside [0, M]")
        if len(members) > 1 and not 0 < self.A.step <= 5:
            raise ValueError("A must have common difference at most 5")
        lo = min(self.a - self.b, Fraction(0)) if members else Fraction(0)
        if lo < -1 or self.a > 1:
            raise ValueError("directional table must take values in [-1, 1]")

    def integer_table(self) -> tuple[np.ndarray, int]:
        """(v, s) with f = v / s exactly; v integral."""
        s = math.lcm(self.a.denominator, self.b.denominator)
        v = np.zeros(self.p, dtype=np.int64)
        v[np.arange(min(self.M, self.p - 1) + 1)] += int(self.a * s)
        for m in self.A.members():
            v[m % self.p] -= int(self.b * s)
        return v, s

    def table(self) -> np.ndarray:
        v, s = self.integer_table()
        return v / s


def directional_spec(p: int) -> DirectionalSpec:
    """Parameters (M, a, b, A) for the prime p, by case."""
    if not (isinstance(p, (int, np.integer)) and is_prime(int(p)) and p >= 5):
        raise ValueError(f"directional parts exist for primes p >= 5, got {p}")
    p = int(p)
    one, two = Fraction(1), Fraction(2)
    if p == 5:
        return DirectionalSpec(p, 4, one, two, APDescriptor(0, 1, 1), 1)
    if p == 7:
        return DirectionalSpec(p, 6, Fraction(1, 2), Fraction(3, 2), APDescriptor(0, 1, 1), 2)
    if p == 11:
        return DirectionalSpec(p, 6, one, two, APDescriptor(0, 3, 2), 3)
    if p == 13:
        return DirectionalSpec(p, 7, one, two, APDescriptor(0, 5, 2), 4)
    if p <= 199:
        return DirectionalSpec(p, 7, one, two, APDescriptor(0, 5, 2), 5)
    M = (p - 1) // 2
    return DirectionalSpec(p, M, one, two, APDescriptor(0, 5, M // 5 + 1), 6)


def directional_function(p: int) -> tuple[DensityTable, DirectionalSpec]:
    spec = directional_spec(p)
    return DensityTable(make_group([p]), spec.table(), lo=-1.0, hi=1.0), spec


def four_ap_sum(v: np.ndarray, block: int = 256) -> int:
    """Exact sum_{x,y in Z_p} v(x)v(x+y)v(x+2y)v(x+3y) for an integer table v."""
    p = len(v)
    v = np.asarray(v, dtype=np.int64)
    if int(np.abs(v).max(initial=0)) ** 4 * p * p >= 2**62:
        raise OverflowError("table entries too large for exact int64 accumulation")
    x = np.arange(p)
    total = 0
    for start in range(0, p, block):
        y = np.arange(start, min(start + block, p))[:, None]
        prod = v[x][None, :] * v[(x + y) % p] * v[(x + 2 * y) % p] * v[(x + 3 * y) % p]
        total += int(prod.sum())
    return total


def directional_four_ap(p: int) -> Fraction:
    """Exact t_4AP of the directional part at p."""
    v, s = directional_spec(p).integer_table()
    return Fraction(four_ap_sum(v), p * p * s**4)


# -- muting parts ----------------------------------------------------------------


def muting_atoms(mode: str, p: int, beta: float) -> tuple[PhaseAtom, ...]:
    """(lambda, weight) = (+1, beta), (-1, beta), (+3, 1), (-3, 1)."""
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if mode == "vector":
        q = 1
    elif mode == "cyclic":
        q = math.isqrt(p)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return (PhaseAtom(1, beta, q), PhaseAtom(-1, beta, q), PhaseAtom(3, 1.0, q), PhaseAtom(-3, 1.0, q))


def muting_table(mode: str, p: int, n: int, beta: float) -> np.ndarray:
    """f2 on F_p^n (vector mode) or Z_p (cyclic mode, n = 1)."""
    atoms = muting_atoms(mode, p, beta)
    g = make_group([p] * n)
    g.require_enumerable()
    c = g.element_coords
    s = (c * c + atoms[0].q * c).sum(axis=1) % p
    return muting_values(atoms, p, s)


def make_recipe(mode: str, p: int, n: int, alpha: float, beta: float, **meta) -> CounterexampleRecipe:
    if mode == "cyclic":
        n = 1
    return CounterexampleRecipe(mode, p, n, directional_spec(p).table(), muting_atoms(mode, p, beta), alpha, beta, meta)


def assemble(recipe: CounterexampleRecipe) -> DensityTable:
    """Dense table of f = 1/2 + alpha f1 f2 on the recipe's group."""
    g = recipe.group
    g.require_enumerable()
    c = g.element_coords
    p, q = recipe.p, recipe.atoms[0].q if recipe.atoms else 1
    f1 = recipe.directional[c[:, 0]]
    if recipe.mode == "vector":
        rest = c[:, 1:]
        s = (rest * rest + q * rest).sum(axis=1) % p
    else:
        s = (c[:, 0] * c[:, 0] + q * c[:, 0]) % p
    return DensityTable(g, 0.5 + recipe.alpha * f1 * muting_values(recipe.atoms, p, s))


def save_recipe(recipe: CounterexampleRecipe, path) -> None:
    Path(path).write_text(json.dumps(recipe.to_dict(), indent=2, sort_keys=True))


def load_recipe(path) -> CounterexampleRecipe:
    return CounterexampleRecipe.from_dict(json.loads(Path(path).read_text()))


# -- proportional pairs ----------------------------------------------------------


def proportional_direction(system: FormSystem) -> tuple[np.ndarray, dict]:
    """The real function f1 on the group (|f1| <= 4) and a description."""
    g = system.group
    if not g.is_vector:
        raise NoConstruction(f"proportional constructions need F_p^n, got {g}")
    p = g.p
    if p == 2:
        raise NoConstruction("proportional constructions need p != 2")
    pair = detect_proportional_pair(system)
    if pair is None:
        raise NoConstruction("no pair of forms with phi_j = c phi_i, c not in {0, 1}")
    g.require_enumerable()
    s = g.element_coords.sum(axis=1) % p
    roots = roots_of_unity(p)
    if pair.has_negation:
        # i w^s - i w^{-s} = -2 sin(2 pi s / p)
        f1 = -2.0 * roots[s].imag
        info = {"construction": "sine", "c": p - 1}
    else:
        f1 = 2.0 * roots[s].real - 2.0 * roots[(pair.c * s) % p].real
        info = {"construction": "cosine", "c": pair.c}
    info["pair"] = [pair.i, pair.j]
    return f1, info


def proportional_counterexample(system: FormSystem, alpha: float) -> DensityTable:
    """f = 1/2 + alpha f1 from the proportional-pair constructions."""
    f1, info = proportional_direction(system)
    cap = 0.25 if info["construction"] == "sine" else 0.125
    if not 0 <= alpha <= cap:
        raise ValueError(f"alpha must lie in [0, {cap}] for the {info['construction']} construction")
    return DensityTable(system.group, 0.5 + alpha * f1)


# -- tuner -----------------------------------------------------------------------


@dataclass
class TuneResult:
    alpha: float
    beta: float | None
    p: int
    n: int
    value: float
    margin: float
    truncation_bound: float
    construction: str
    recipe: CounterexampleRecipe | None
    rows: list = field(default_factory=list)

    @property
    def uncommon(self) -> bool:
        """Positive margin that survives the truncation error."""
        return self.margin > self.truncation_bound

    @property
    def first_positive_p(self) -> int | None:
        """First prime of the scan (in scan order) with a positive margin."""
        return next((row["p"] for row in self.rows if row["margin"] > 0), None)

    def summary(self) -> dict:
        return {
            "first_positive_p": self.first_positive_p,
            "construction": self.construction,
            "p": self.p,
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "value": self.value,
            "threshold": self.value + self.margin,
            "margin": self.margin,
            "truncation_bound": self.truncation_bound,
        }


DEFAULT_BETAS = tuple(2.0**-k for k in range(1, 9))
DEFAULT_NS = (1, 2, 4, 8, 16, 32, 64, 100)


def alpha_grid(cap: float, points: int = 24, lo: float = 1e-3) -> list[float]:
    """0 followed by a log grid ending at the cap."""
    return [0.0] + [float(a) for a in np.geomspace(lo * cap, cap, points)]


def _scan(system: FormSystem, recipe: CounterexampleRecipe, alphas: Sequence[float], subset_cap: int):
    coeffs = expansion_coefficients(system, recipe, subset_cap)
    amp = recipe.f1_max * recipe.f2_max
    rows = []
    for a in alphas:
        value = value_from_coefficients(coeffs, system.d, a)
        rows.append((a, value, truncation_bound(system.d, subset_cap, a, amp)))
    return rows


def tune_parameters(
    system: FormSystem,
    mode: str = "vector",
    p: int | None = None,
    n: int | Iterable[int] | None = None,
    betas: Sequence[float] = DEFAULT_BETAS,
    alpha_points: int = 24,
    subset_cap: int | None = None,
    primes: Sequence[int] | None = None,
    mapper: Callable = map,
) -> TuneResult:
    """Grid search for the (alpha, beta) minimising t(f) + t(1 - f).

    vector mode: the matrix is re-induced on F_p^{n+1} for each n in the n grid.
    cyclic mode: it is re-induced on Z_p for each prime in ``primes``.
    ``mapper`` evaluates independent grid cells and must preserve order.
    """
    matrix = system.matrix
    d = system.d
    cap = d if subset_cap is None else min(subset_cap, d)
    if mode == "vector":
        p = system.group.p if p is None else p
        if p is None:
            raise ValueError("vector mode needs a prime")
        probe = induce_system(matrix, make_group([p]))
        ns = DEFAULT_NS if n is None else ([n] if isinstance(n, int) else list(n))
        cells = [(p, m, b) for m in ns for b in betas]
    elif mode == "cyclic":
        ps = [p] if primes is None else list(primes)
        if not ps or ps[0] is None:
            raise ValueError("cyclic mode needs a prime or a prime list")
        probe = induce_system(matrix, make_group([ps[0]]))
        cells = [(q, 1, b) for q in ps for b in betas]
    else:
        raise ValueError(f"unknown mode {mode!r}")

    if detect_four_ap(probe) is None:
        if detect_proportional_pair(probe) is not None:
            if mode == "cyclic":
                return _tune_proportional(matrix, ps[0], 1, alpha_points)
            return _tune_proportional(matrix, p, 1 if n is None else (n if isinstance(n, int) else min(n)), alpha_points)
        raise NoConstruction("no construction applicable: the system has no 4-AP and no proportional pair")

    def evaluate(cell):
        q, m, b = cell
        recipe = make_recipe(mode, q, m, 0.0, b)
        sys_q = induce_system(matrix, recipe.group)
        return cell, recipe, _scan(sys_q, recipe, alpha_grid(recipe.alpha_cap, alpha_points), cap)

    best = None
    rows = []
    for (q, m, b), recipe, scan in mapper(evaluate, cells):
        thr = threshold(d)
        for a, value, bound in scan:
            margin = thr - value
            rows.append({"p": q, "n": m, "alpha": a, "beta": b, "value": value, "threshold": thr, "margin": margin})
            if best is None or margin > best[0] + 1e-15:
                best = (margin, q, m, a, b, value, bound, recipe)
    margin, q, m, a, b, value, bound, recipe = best
    return TuneResult(a, b, q, m, value, margin, bound, "muting", recipe.with_params(a), rows)


def _tune_proportional(matrix, p: int, n: int, alpha_points: int) -> TuneResult:
    g = make_group([p] * n)
    system = induce_system(matrix, g)
    f1, info = proportional_direction(system)
    cap = min(0.25 if info["construction"] == "sine" else 0.125, 1 / (2 * float(np.abs(f1).max())))
    thr = threshold(system.d)
    rows, best = [], None
    for a in alpha_grid(cap, alpha_points):
        value = monochromatic_pair(system, DensityTable(g, 0.5 + a * f1))
        rows.append({"p": p, "n": n, "alpha": a, "beta": None, "value": value, "threshold": thr, "margin": thr - value})
        if best is None or thr - value > best[0] + 1e-15:
            best = (thr - value, a, value)
    margin, a, value = best
    return TuneResult(a, None, p, n, value, margin, 0.0, info["construction"], None, rows)


# -- rounding to a set -------------------------------------------------------------


@dataclass
class RoundingResult:
    subset: tuple[int, ...]
    pair_set: float  # t(A) + t(A^C)
    pair_function: float  # t(f) + t(1 - f)
    slack: float  # C(d, 2) / |G|
    psi_trace: list

    @property
    def bound(self) -> float:
        return self.pair_function + self.slack

    @property
    def holds(self) -> bool:
        return self.pair_set <= self.bound + 1e-12


def _injective_incidence(system: FormSystem):
    """Injective instances plus, per group element, the (instance, position) pairs hitting it."""
    inst = system.instances()
    d = system.d
    ok = np.ones(len(inst), dtype=bool)
    for i in range(d):
        for j in range(i + 1, d):
            ok &= inst[:, i] != inst[:, j]
    inst = inst[ok]
    flat = inst.reshape(-1)
    order = np.argsort(flat, kind="stable")
    starts = np.searchsorted(flat[order], np.arange(system.group.order + 1))
    return inst, order // d, order % d, starts


def round_to_set(f: DensityTable, system: FormSystem) -> RoundingResult:
    """Move each fractional value to 0 or 1 without increasing psi.

    psi(g) sums prod g + prod (1 - g) over the injective instances.  psi is
    affine in each single value g(a), so moving g(a) to the better endpoint
    never increases it.  Points are visited in index order; a zero slope goes
    to 0.
    """
    g = system.group
    if f.group != g:
        raise ValueError("function and system live on different groups")
    if not g.is_vector:
        raise NoConstruction(f"the rounding certificate needs F_p^n, got {g}")
    if not system.distinct:
        raise NoConstruction("rounding needs pairwise distinct forms; the certificate is invalid otherwise")
    if f.values.min() < -DensityTable.TOL or f.values.max() > 1 + DensityTable.TOL:
        raise ValueError("round_to_set needs a [0,1]-valued function")
    check_cap(system.parameter_count * system.d, "rounding descent")
    inst, rows, pos, starts = _injective_incidence(system)
    N = system.parameter_count
    vals = np.clip(f.values.astype(float), 0.0, 1.0)

    def psi(v):
        return (math.fsum(v[inst].prod(axis=1).tolist()) + math.fsum((1 - v)[inst].prod(axis=1).tolist())) / N

    trace = [psi(vals)]
    for a in range(g.order):
        if vals[a] in (0.0, 1.0):
            continue
        sel = slice(starts[a], starts[a + 1])
        r, i = rows[sel], pos[sel]
        if len(r):
            gv = vals[inst[r]]
            cv = 1 - gv
            gv[np.arange(len(r)), i] = 1.0
            cv[np.arange(len(r)), i] = 1.0
            slope = math.fsum(gv.prod(axis=1).tolist()) - math.fsum(cv.prod(axis=1).tolist())
        else:
            slope = 0.0
        vals[a] = 1.0 if slope < 0 else 0.0
        trace.append(psi(vals))
    subset = tuple(int(x) for x in np.flatnonzero(vals == 1.0))
    A = DensityTable.indicator(g, subset)
    pair_set = monochromatic_pair(system, A)
    t, tc = multiplicity_pair(system, f)
    slack = math.comb(system.d, 2) / g.order
    return RoundingResult(subset, pair_set, t + tc, slack, trace)
