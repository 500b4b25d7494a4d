import itertools
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicommon.counterexamples import assemble, directional_function, make_recipe
from multicommon.errors import CapExceeded
from multicommon.group_core import DensityTable, make_group, vector_space
from multicommon.linear_forms import four_ap_matrix, induce_system
from multicommon.multiplicity import (
    PhaseAtom,
    min_coloring,
    monochromatic_pair,
    multiplicity_direct,
    multiplicity_pair,
    multiplicity_structured,
    threshold,
)

Z5 = make_group([5])
AP4 = four_ap_matrix()
AP3 = [[1, 0], [1, 1], [1, 2]]


def _brute(system, f):
    """Plain Python loop over parameter tuples."""
    g = system.group
    total = 0.0
    count = 0
    for w in itertools.product(range(g.order), repeat=system.r):
        prod = 1.0
        for x in system.evaluate(w):
            prod *= f.values[x]
        total += prod
        count += 1
    return total / count


def test_direct_examples():
    s = induce_system(AP4, Z5)
    assert multiplicity_direct(s, DensityTable.constant(Z5, 1.0)) == 1.0
    assert multiplicity_direct(s, DensityTable.constant(Z5, 0.5)) == 1 / 16
    f, _ = directional_function(5)
    assert multiplicity_direct(s, f) == pytest.approx(-7 / 25, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(5,), (6,), (2, 2), (7,)]))
def test_direct_matches_loop(seed, moduli):
    g = make_group(moduli)
    rng = np.random.default_rng(seed)
    M = rng.integers(-3, 4, size=(4, 2)).tolist()
    s = induce_system(M, g)
    f = DensityTable(g, rng.random(g.order))
    assert multiplicity_direct(s, f) == pytest.approx(_brute(s, f), abs=1e-12)


def test_pair_examples():
    s = induce_system(AP4, Z5)
    assert monochromatic_pair(s, DensityTable.constant(Z5, 0.5)) == 1 / 8 == threshold(4)
    assert monochromatic_pair(s, DensityTable.indicator(Z5, [])) == 1.0
    assert monochromatic_pair(s, DensityTable.indicator(Z5, [0, 1])) == pytest.approx(1 / 5, abs=1e-15)
    t, tc = multiplicity_pair(s, DensityTable.indicator(Z5, [1, 2, 3, 4]))
    assert t + tc == pytest.approx(9 / 25, abs=1e-15)


def test_pair_needs_unit_interval():
    f, _ = directional_function(5)
    with pytest.raises(ValueError):
        monochromatic_pair(induce_system(AP4, Z5), f)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(0, 4))
def test_affine_invariance(seed, scale, shift):
    # t(f) is unchanged by x -> scale x + shift for scale a unit
    rng = np.random.default_rng(seed)
    f = rng.random(7)
    g = make_group([7])
    x = np.arange(7)
    h = f[(scale * x + shift) % 7]
    s = induce_system(AP4, g)
    assert multiplicity_direct(s, DensityTable(g, f)) == pytest.approx(multiplicity_direct(s, DensityTable(g, h)), abs=1e-12)


def test_structured_alpha_zero():
    s = induce_system(AP4, vector_space(5, 3))
    v = multiplicity_structured(s, make_recipe("vector", 5, 2, 0.0, 0.5))
    assert v.value == threshold(4) and v.truncation_bound == 0.0


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("beta", [1.0, 0.37, 0.125])
@pytest.mark.parametrize("frac", [0.2, 0.6, 1.0])
def test_structured_matches_direct(n, beta, frac):
    r0 = make_recipe("vector", 5, n, 0.0, beta)
    r = r0.with_params(frac * r0.alpha_cap)
    s = induce_system(AP4, r.group)
    direct = monochromatic_pair(s, assemble(r))
    assert multiplicity_structured(s, r).value == pytest.approx(direct, abs=1e-8)


def test_structured_with_extra_forms():
    # non-4-AP rows exercise the dependent-subset branch
    rows = [[1, 0], [0, 1], [1, 1], [1, 2], [2, 1]]
    r0 = make_recipe("vector", 5, 1, 0.0, 0.5)
    r = r0.with_params(0.7 * r0.alpha_cap)
    s = induce_system(rows, r.group)
    assert multiplicity_structured(s, r).value == pytest.approx(monochromatic_pair(s, assemble(r)), abs=1e-10)


@pytest.mark.parametrize("p", [5, 7, 11, 13])
def test_structured_cyclic_matches_direct(p):
    r0 = make_recipe("cyclic", p, 1, 0.0, 0.5)
    r = r0.with_params(0.8 * r0.alpha_cap)
    s = induce_system(AP4, r.group)
    assert multiplicity_structured(s, r).value == pytest.approx(monochromatic_pair(s, assemble(r)), abs=1e-10)


def test_structured_large_n_is_fast():
    r0 = make_recipe("vector", 5, 30, 0.0, 0.25)
    r = r0.with_params(r0.alpha_cap)
    s = induce_system(AP4, r.group)
    start = time.perf_counter()
    v = multiplicity_structured(s, r)
    assert time.perf_counter() - start < 1.0
    assert np.isfinite(v.value) and v.value < 1 / 8


def test_truncation_bound_covers_error():
    r0 = make_recipe("vector", 5, 1, 0.0, 0.5)
    r = r0.with_params(r0.alpha_cap)
    s = induce_system(AP4 + [[2, 1]], r.group)
    full = multiplicity_structured(s, r).value
    for cap in range(0, 5):
        v = multiplicity_structured(s, r, subset_cap=cap)
        assert abs(v.value - full) <= v.truncation_bound + 1e-12


def test_recipe_validation():
    with pytest.raises(ValueError):
        make_recipe("vector", 5, 0, 0.0, 0.5)
    with pytest.raises(ValueError):
        make_recipe("vector", 6, 1, 0.0, 0.5)
    r0 = make_recipe("vector", 5, 1, 0.0, 0.5)
    with pytest.raises(ValueError):
        r0.with_params(1.01 * r0.alpha_cap)
    with pytest.raises(ValueError):
        PhaseAtom(0, 0.5)


def test_min_coloring_examples():
    res = min_coloring(induce_system(AP4, Z5))
    assert res.value == Fraction(1, 5) and len(res.subset) in (2, 3)
    assert res.common  # 1/5 > 1/8: no small counterexample over Z_5
    res3 = min_coloring(induce_system(AP3, Z5))
    assert res3.value >= Fraction(1, 4) and res3.common
    assert min_coloring(induce_system([[1, 0], [2, 1]], make_group([3]))).value <= 1


def test_min_coloring_agrees_with_pair():
    s = induce_system(AP4, make_group([7]))
    res = min_coloring(s)
    assert float(res.value) == pytest.approx(monochromatic_pair(s, DensityTable.indicator(s.group, res.subset)), abs=1e-15)
    rng = np.random.default_rng(3)
    for _ in range(20):
        A = np.flatnonzero(rng.random(7) < 0.5)
        assert monochromatic_pair(s, DensityTable.indicator(s.group, A)) >= float(res.value) - 1e-15


def test_min_coloring_cap():
    with pytest.raises(CapExceeded):
        min_coloring(induce_system(AP4, make_group([29])))
