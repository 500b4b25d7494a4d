import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicommon.bounds_lab import (
    CUBE_CLASSES,
    CUBE_ROWS,
    Check,
    SuiteReport,
    additive_hextuple_value,
    additive_quadruple_fourier,
    additive_quadruple_value,
    c_fraction_census,
    case6_sweep,
    check_cube,
    check_gauss_bounds,
    check_muting_subconfig_bounds,
    check_phase_bounds,
    check_reparametrization,
    check_splitting,
    cube_report,
    directional_sweep,
    gauss_oracle_sample,
    muting_subconfig_direct,
    muting_subconfig_value,
    phase_bounds,
    phase_lhs,
    phase_lhs_direct,
    progression_phase_sums,
)
from multicommon.group_core import DensityTable, make_group
from multicommon.linear_forms import c_fractions, four_ap_matrix, induce_system
from multicommon.multiplicity import monochromatic_pair

AP4 = tuple(map(tuple, four_ap_matrix()))


def test_check_relations():
    assert Check("a", 1.0, 1.0 + 1e-10, "==").ok
    assert not Check("a", 1.0, 1.1, "==").ok
    assert Check("a", 1.0, 1.0 - 1e-10, "<=").ok
    assert not Check("a", 1.0, 0.9, "<=").ok
    assert Check("a", 1.0, 0.9, ">=").ok


def test_suite_report_records_violations():
    rep = SuiteReport("x")
    assert rep.record("b", 0.5, 1.0, {"k": 1})
    assert not rep.record("b", 2.0, 1.0, {"k": 2})
    assert rep.trials == 2 and len(rep.violations) == 1 and not rep.ok
    assert rep.worst_ratio["b"] == 2.0


def test_directional_sweep_small():
    rep = directional_sweep(5, 60)
    assert rep.ok and rep.trials > 10


def test_case6_sweep_small():
    rep = case6_sweep(201, 260)
    assert rep.ok and rep.trials > 5


def test_gauss_small_grid():
    rep = check_gauss_bounds((5, 7), (1, 2))
    assert rep.ok and rep.trials > 0


def test_gauss_trivial_phase_is_excluded_not_violated():
    rep = check_gauss_bounds((5,), (1,), exclude_trivial=False)
    assert rep.ok
    assert any("hypothesis" in str(e.get("reason", "")) for e in rep.excluded)


def test_gauss_batch_matches_oracle():
    for fast, slow in gauss_oracle_sample(5, 2, [(1, 0, 0, 1), (0, 1, 2, 3), (2, 3, 1, 0), (0, 0, 0, 2)]):
        assert fast == pytest.approx(slow, abs=1e-12)


def test_phase_examples():
    p = 101
    # regime 2 with the full interval: the classical Gauss sum
    lhs = phase_lhs(p, 1, 0, 0, 0, [0], [1], [p])
    assert lhs == pytest.approx(1 / math.sqrt(p), abs=1e-12)
    assert lhs <= phase_bounds(p, 2)["a coprime"]
    # empty progressions
    assert phase_lhs(p, 3, 1, 0, 5, np.zeros(p), np.ones(p), np.zeros(p)) == 0.0
    # regime 1 with C = 2: all steps are +-1
    rng = np.random.default_rng(0)
    t = rng.integers(0, p, p)
    s = rng.choice([1, p - 1], p)
    L = rng.integers(0, p + 1, p)
    assert phase_lhs(p, 2, 3, 0, 7, t, s, L) <= 8 * 4 * (math.log(p) + 1) / p


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([5, 7, 13, 101]), st.data())
def test_progression_sums_match_direct(p, data):
    a, b, c, d = (data.draw(st.integers(0, p - 1)) for _ in range(4))
    t = np.array(data.draw(st.lists(st.integers(0, p - 1), min_size=p, max_size=p)))
    s = np.array(data.draw(st.lists(st.integers(1, p - 1), min_size=p, max_size=p)))
    L = np.array(data.draw(st.lists(st.integers(0, p), min_size=p, max_size=p)))
    assert phase_lhs(p, a, b, c, d, t, s, L) == pytest.approx(phase_lhs_direct(p, a, b, c, d, t, s, L), abs=1e-12)


def test_linear_sums():
    # geometric branch
    assert progression_phase_sums(7, [0], [0], [5])[0] == 5
    assert progression_phase_sums(7, [0], [2], [7])[0] == pytest.approx(0, abs=1e-12)


def test_phase_suite_runs_and_refuses_bad_hypothesis():
    rep = check_phase_bounds(101, 2, trials=300, seed=1, oracle_every=50)
    assert rep.ok and rep.trials >= 900
    with pytest.raises(ValueError):
        check_phase_bounds(101, 3, trials=1)


def test_structural_suites():
    assert check_splitting(200, seed=2).ok
    assert check_reparametrization(30, seed=2).ok
    assert c_fraction_census(61, 5).ok


@pytest.mark.parametrize("rows", [((1, 0), (0, 1)), AP4, ((1, 0), (0, 1), (1, 1), (1, 2))])
@pytest.mark.parametrize("p,n", [(5, 1), (5, 2), (7, 1)])
def test_muting_value_matches_direct(rows, p, n):
    v = muting_subconfig_value(rows, p, n, 0.5)["value"]
    assert v == pytest.approx(muting_subconfig_direct(rows, p, n, 0.5), abs=1e-10)


def test_muting_examples():
    v = muting_subconfig_value(((1, 0), (0, 1)), 5, 4, 0.5)["value"]
    assert abs(v) <= 16 / 25
    res = muting_subconfig_value(AP4, 5, 40, 0.5)
    assert res["ap_part"] == pytest.approx(0.5, abs=1e-12)
    assert res["value"] >= 0.5 - 254 * 5**-20


def test_muting_suite_and_anomaly():
    rep = check_muting_subconfig_bounds(7, 40, 0.5)
    assert rep.ok
    anomaly = [r for r in rep.rows if r["name"] == "a=2, c=2 quadruple"][0]
    assert (1, -3, 1, 1) in anomaly["beta3_lambdas"]
    assert anomaly["exceeds_without_beta3"]


def test_additive_examples():
    z2 = make_group([2])
    assert additive_quadruple_value(DensityTable.constant(z2, 0.0)) == 0.0
    sign = DensityTable(z2, [1, -1], lo=-1)
    assert additive_quadruple_value(sign) == pytest.approx(1)
    assert additive_hextuple_value(sign) == pytest.approx(0, abs=1e-15)
    g = make_group([5])
    assert additive_hextuple_value(DensityTable.constant(g, 1.0)) == pytest.approx(1)
    assert additive_hextuple_value(DensityTable.constant(g, 0.3)) == pytest.approx(0.3**6)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(7,), (2, 4), (3, 3)]))
def test_additive_quadruple_fourier_identity(seed, moduli):
    g = make_group(moduli)
    f = DensityTable(g, np.random.default_rng(seed).uniform(-1, 1, g.order), lo=-1)
    assert additive_quadruple_value(f) == pytest.approx(additive_quadruple_fourier(f), abs=1e-9)


def test_cube_half():
    g = make_group([5])
    cr = cube_report(g, DensityTable.constant(g, 0.5))
    assert cr.total == pytest.approx(1 / 64, abs=1e-12)
    assert all(abs(v) < 1e-15 for v in cr.subset_values.values())
    assert cr.ok


def test_cube_partition_counts():
    cr = cube_report(make_group([5]), DensityTable.constant(make_group([5]), 0.5))
    assert cr.partition["A1_k4_count"] == 35 - 7 == 28
    assert cr.partition["A1_k5_count"] == 21 - 3 == 18
    assert cr.partition["consistent"]
    assert sum(len(v) for v in CUBE_CLASSES[6].values()) == 7


@pytest.mark.parametrize("moduli", [(5,), (2, 2), (6,)])
def test_cube_random_matches_direct(moduli):
    g = make_group(moduli)
    rng = np.random.default_rng(11)
    s = induce_system(CUBE_ROWS, g)
    for _ in range(5):
        f = DensityTable(g, rng.random(g.order))
        cr = cube_report(g, f)
        assert cr.ok, [c.to_dict() for c in cr.failed()]
        assert cr.expansion_total == pytest.approx(monochromatic_pair(s, f), abs=1e-9)


def test_cube_suite_small():
    rep = check_cube([(3,), (2, 2)], trials=20, seed=4)
    assert rep.ok and rep.trials == 2 * 20 + 8 + 16


def test_c_fraction_listing_examples():
    assert c_fractions(13, 2) == [0, 1, 12]
