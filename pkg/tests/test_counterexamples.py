import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicommon.counterexamples import (
    DIRECTIONAL_BOUND,
    assemble,
    directional_four_ap,
    directional_function,
    directional_spec,
    four_ap_sum,
    load_recipe,
    make_recipe,
    muting_atoms,
    muting_table,
    proportional_counterexample,
    round_to_set,
    save_recipe,
    tune_parameters,
)
from multicommon.errors import NoConstruction
from multicommon.group_core import DensityTable, make_group, vector_space
from multicommon.linear_forms import four_ap_matrix, induce_system
from multicommon.multiplicity import monochromatic_pair, multiplicity_direct, multiplicity_structured, threshold

AP4 = four_ap_matrix()


def test_directional_examples():
    f, spec = directional_function(5)
    assert list(f.values) == [-1, 1, 1, 1, 1] and spec.case == 1
    f, spec = directional_function(7)
    assert f.values[0] == -1 and np.all(f.values[1:] == 0.5) and spec.case == 2
    assert directional_four_ap(5) == Fraction(-7, 25)


def test_case_routing():
    assert [directional_spec(p).case for p in (5, 7, 11, 13, 17, 199, 211, 2003)] == [1, 2, 3, 4, 5, 5, 6, 6]
    for bad in (2, 3, 4, 9):
        with pytest.raises(ValueError):
            directional_spec(bad)


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19, 23])
def test_exact_sum_matches_float_enumeration(p):
    f, _ = directional_function(p)
    s = induce_system(AP4, make_group([p]))
    assert float(directional_four_ap(p)) == pytest.approx(multiplicity_direct(s, f), abs=1e-12)


def test_small_cases_below_bound():
    for p in (11, 13, 17, 101, 199):
        assert directional_four_ap(p) <= Fraction(-2, 199**2)
    assert DIRECTIONAL_BOUND == pytest.approx(-5.05e-5, rel=1e-3)


def test_four_ap_sum_small():
    v = np.array([1, 0, 0])
    # only y with all four points at 0: x = 0, y = 0
    assert four_ap_sum(v) == 1


def test_muting_atom_examples():
    atoms = muting_atoms("vector", 5, 1.0)
    assert sorted(a.lam for a in atoms) == [-3, -1, 1, 3]
    t = muting_table("vector", 5, 1, 1.0)
    assert t[0] == pytest.approx(4)
    # x = 1: phases t^2 + t = 2
    assert t[1] == pytest.approx(2 * math.cos(4 * math.pi / 5) + 2 * math.cos(12 * math.pi / 5))
    assert t[1] == pytest.approx(-1)
    assert muting_atoms("cyclic", 101, 0.5)[0].q == 10
    with pytest.raises(ValueError):
        muting_atoms("vector", 5, 0.0)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([5, 7, 11]), st.integers(1, 2), st.floats(0.01, 1.0))
def test_muting_table_bounded(p, n, beta):
    t = muting_table("vector", p, n, beta)
    assert np.all(np.abs(t) <= 2 * beta + 2 + 1e-12)


def test_assemble_examples():
    r = make_recipe("vector", 5, 1, 0.0, 1.0)
    assert np.all(assemble(r).values == 0.5)
    with pytest.raises(ValueError):
        make_recipe("vector", 5, 0, 0.0, 1.0)
    r = r.with_params(1 / 8)
    assert r.alpha_cap == pytest.approx(1 / 8)
    f = assemble(r)
    assert f.values.min() >= -1e-15 and f.values.max() <= 1 + 1e-15
    assert f.values[0] == pytest.approx(0.0, abs=1e-15)


def test_recipe_round_trip(tmp_path):
    r = make_recipe("vector", 5, 2, 0.0, 0.25).with_params(0.03)
    save_recipe(r, tmp_path / "r.json")
    back = load_recipe(tmp_path / "r.json")
    assert np.array_equal(assemble(back).values, assemble(r).values)
    s = induce_system(AP4, r.group)
    assert multiplicity_structured(s, back).value == pytest.approx(multiplicity_structured(s, r).value, abs=1e-12)


def test_proportional_sine():
    s = induce_system([[1], [-1]], vector_space(5, 1))
    f = proportional_counterexample(s, 0.25)
    assert monochromatic_pair(s, f) == pytest.approx(0.25, abs=1e-9)
    assert monochromatic_pair(s, proportional_counterexample(s, 0.0)) == threshold(2)
    for p in (7, 11, 13):
        s = induce_system([[1], [-1]], vector_space(p, 1))
        for a in (0.05, 0.2):
            assert monochromatic_pair(s, proportional_counterexample(s, a)) == pytest.approx(0.5 - 4 * a * a, abs=1e-12)


def test_proportional_cosine():
    s = induce_system([[1], [2]], vector_space(5, 1))
    for a in (0.02, 0.1):
        assert monochromatic_pair(s, proportional_counterexample(s, a)) < threshold(2)
    with pytest.raises(ValueError):
        proportional_counterexample(s, 0.2)
    with pytest.raises(NoConstruction):
        proportional_counterexample(induce_system([[1, 0], [0, 1]], vector_space(5, 1)), 0.1)


def test_tune_vector_small_grid():
    s = induce_system(AP4, vector_space(5, 1))
    res = tune_parameters(s, "vector", 5, [64], betas=[0.5], alpha_points=12)
    zero_rows = [row for row in res.rows if row["alpha"] == 0.0]
    assert zero_rows and all(row["margin"] == 0.0 for row in zero_rows)
    assert res.margin > 0 and res.uncommon and res.value < 1 / 8


def test_tune_proportional_route():
    res = tune_parameters(induce_system([[1], [-1]], vector_space(5, 1)), "vector", 5, 1)
    assert res.construction == "sine"
    assert res.alpha == pytest.approx(0.25) and res.value == pytest.approx(0.25, abs=1e-9)


def test_tune_no_construction():
    with pytest.raises(NoConstruction):
        tune_parameters(induce_system([[1, 0], [0, 1], [1, 1]], vector_space(5, 1)), "vector", 5, 1)


def test_round_fixed_point():
    g = make_group([7])
    s = induce_system(AP4, g)
    A = [0, 2, 3]
    res = round_to_set(DensityTable.indicator(g, A), s)
    assert res.subset == tuple(A)
    assert res.pair_set == pytest.approx(res.pair_function)
    assert res.slack == pytest.approx(6 / 7)


def test_round_constant_half():
    g = make_group([101])
    s = induce_system(AP4, g)
    res = round_to_set(DensityTable.constant(g, 0.5), s)
    assert res.holds and res.pair_set <= 1 / 8 + 6 / 101
    assert all(b <= a + 1e-12 for a, b in zip(res.psi_trace, res.psi_trace[1:]))


@pytest.mark.parametrize("seed", range(5))
def test_round_random(seed):
    g = make_group([31])
    s = induce_system(AP4, g)
    f = DensityTable(g, np.random.default_rng(seed).random(31))
    res = round_to_set(f, s)
    assert res.holds
    assert set(np.unique(DensityTable.indicator(g, res.subset).values)) <= {0.0, 1.0}


def test_round_needs_distinct_forms():
    g = make_group([5])
    with pytest.raises(NoConstruction):
        round_to_set(DensityTable.constant(g, 0.5), induce_system([[1, 0], [1, 0], [0, 1]], g))
