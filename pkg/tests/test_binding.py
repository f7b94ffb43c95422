import math

import pytest
from hypothesis import given, settings, strategies as st

from opiatesim.binding import (
    BindingModel,
    InjectionProtocol,
    LigandSpec,
    RegionSpec,
    agonist_attach_probability,
    analgesia,
    calibrate_threshold_dose,
    choose_balancing_ratio,
    equilibrium_occupancy,
    max_linear_dose,
)
from opiatesim.errors import (
    InvalidDose,
    NoBalancePossible,
    SaturationExceeded,
    ThresholdUnreachable,
    ZeroAffinity,
)

import oracles


def ligands(k_a, k_aa, potency=1.0):
    pops = {f"p{i}" for i in range(len(k_a))} if isinstance(k_a, (list, tuple)) else {"mu"}
    if isinstance(k_a, (list, tuple)):
        return (
            LigandSpec("ag", "agonist", {f"p{i}": k for i, k in enumerate(k_a)}, potency),
            LigandSpec("an", "antagonist", {f"p{i}": k for i, k in enumerate(k_aa)}),
        )
    assert pops == {"mu"}
    return (
        LigandSpec("ag", "agonist", {"mu": k_a}, potency),
        LigandSpec("an", "antagonist", {"mu": k_aa}),
    )


def test_ligand_invariants():
    with pytest.raises(ValueError):
        LigandSpec("x", "antagonist", {"mu": 1.0}, analgesic_potency=0.5)
    with pytest.raises(ValueError):
        LigandSpec("x", "agonist", {"mu": 0.0})
    with pytest.raises(ValueError):
        LigandSpec("x", "agonist", {"mu": -1.0, "kappa": 1.0})


def test_region_invariants():
    with pytest.raises(ValueError):
        RegionSpec("r", {"mu": 0})
    with pytest.raises(ValueError):
        RegionSpec("r", {"mu": 10}, pain_intensity=1.5)
    r = RegionSpec("r", {"mu": 10}, True, 0.0, secretion_gain=3.0)
    assert r.endogenous_secretion == 0.0


def test_equal_affinities_give_equal_bound_counts():
    ag, an = ligands(1.0, 1.0)
    region = RegionSpec("r", {"mu": 10_000})
    b = equilibrium_occupancy(region, ag, an, InjectionProtocol(0.01, 1.0))
    assert b.agonist == b.antagonist
    assert b.agonist_fraction == 0.5


def test_balancing_ratio_equalises_bound_counts():
    ag = LigandSpec("ag", "agonist", {"mu": 1.0, "kappa": 0.1}, 1.0)
    an = LigandSpec("an", "antagonist", {"mu": 0.4, "kappa": 0.9})
    regions = [
        RegionSpec("a", {"mu": 10_000, "kappa": 6_000}),
        RegionSpec("b", {"mu": 4_000}),
    ]
    R = choose_balancing_ratio(ag, an, regions)
    proto = InjectionProtocol(0.01, R)
    tot_a = sum(equilibrium_occupancy(r, ag, an, proto).agonist for r in regions)
    tot_aa = sum(equilibrium_occupancy(r, ag, an, proto).antagonist for r in regions)
    assert tot_a == pytest.approx(tot_aa, rel=0.01)
    assert tot_a == pytest.approx(tot_aa, rel=1e-12)


def test_three_populations_match_mass_action_fixed_point():
    ag = LigandSpec("ag", "agonist", {"a": 1.0, "b": 0.3, "c": 2.0}, 1.0)
    an = LigandSpec("an", "antagonist", {"a": 0.5, "b": 0.9, "c": 1.5})
    endo = LigandSpec("endo", "agonist", {"a": 1.0, "b": 0.5, "c": 2.0})
    region = RegionSpec("r", {"a": 12_000, "b": 5_000, "c": 800}, True, 0.5, 0.6)
    b = equilibrium_occupancy(
        region, ag, an, InjectionProtocol(0.02, 1.5), BindingModel(endogenous=endo)
    )
    # frozen from oracles.mass_action_fixed_point on the same inputs
    expected = {
        "a": (110.76923076923082, 36.923076923076934, 2769.23076923077),
        "b": (15.652173913043486, 31.304347826086975, 652.1739130434786),
        "c": (12.000000000000004, 6.000000000000002, 300.00000000000006),
    }
    live = oracles.mass_action_fixed_point(
        [12_000, 5_000, 800], [1.0, 0.3, 2.0], [0.5, 0.9, 1.5], [1.0, 0.5, 2.0],
        0.02 * 1.5 / 2.5, 0.02 / 2.5, 0.3,
    )
    for (pop, exp), ref in zip(expected.items(), live):
        got = b.populations[pop]
        assert ref == pytest.approx(exp, rel=1e-12)
        for value, want in zip((got.agonist, got.antagonist, got.endogenous), exp):
            assert value == pytest.approx(want, rel=1e-9)


def test_saturation_and_dose_errors():
    ag, an = ligands(1.0, 1.0)
    region = RegionSpec("r", {"mu": 100})
    with pytest.raises(SaturationExceeded):
        equilibrium_occupancy(region, ag, an, InjectionProtocol(0.2, 1.0))
    equilibrium_occupancy(region, ag, an, InjectionProtocol(0.1, 1.0))
    with pytest.raises(InvalidDose):
        InjectionProtocol(0.0, 1.0)


class TestAttachProbability:
    def test_symmetric(self):
        ag, an = ligands(1.0, 1.0)
        assert agonist_attach_probability(ag, an, 1.0, "mu") == 0.5

    def test_closed_form(self):
        ag, an = ligands(2.0, 1.0)
        assert agonist_attach_probability(ag, an, 1.0, "mu") == pytest.approx(2 / 3, rel=1e-15)

    def test_independent_of_endogenous_level(self):
        ag, an = ligands(1.7, 0.6)
        p0 = agonist_attach_probability(ag, an, 1.3, "mu", endogenous_level=0.0)
        p1 = agonist_attach_probability(ag, an, 1.3, "mu", endogenous_level=10.0)
        assert p0 == p1

    def test_zero_affinity(self):
        ag = LigandSpec("ag", "agonist", {"mu": 1.0})
        an = LigandSpec("an", "antagonist", {"mu": 1.0})
        with pytest.raises(ZeroAffinity):
            agonist_attach_probability(ag, an, 1.0, "delta")


class TestBalancingRatio:
    def test_symmetric(self):
        ag, an = ligands(1.0, 1.0)
        assert choose_balancing_ratio(ag, an, [RegionSpec("r", {"mu": 50})]) == pytest.approx(1.0, rel=1e-12)

    def test_closed_form(self):
        ag, an = ligands(4.0, 1.0)
        assert choose_balancing_ratio(ag, an, [RegionSpec("r", {"mu": 50})]) == pytest.approx(0.25, rel=1e-12)

    def test_mixed_specificities_match_grid_search(self):
        ag = LigandSpec("ag", "agonist", {"mu": 1.0, "kappa": 0.1}, 1.0)
        an = LigandSpec("an", "antagonist", {"mu": 0.4, "kappa": 0.9})
        regions = [RegionSpec("a", {"mu": 10_000, "kappa": 6_000}), RegionSpec("b", {"mu": 4_000})]
        R = choose_balancing_ratio(ag, an, regions)
        # frozen from oracles.grid_balance_ratio(14600, 11000): 10^4-point log grid on [0.1, 10]
        assert R == pytest.approx(0.7535077244586924, rel=1e-3)
        grid_r, _ = oracles.grid_balance_ratio(14_600.0, 11_000.0)
        assert R == pytest.approx(grid_r, rel=1e-3)

    def test_no_balance(self):
        ag = LigandSpec("ag", "agonist", {"mu": 1.0})
        an = LigandSpec("an", "antagonist", {"kappa": 1.0})
        with pytest.raises(NoBalancePossible):
            choose_balancing_ratio(ag, an, [RegionSpec("r", {"mu": 50})])
        with pytest.raises(NoBalancePossible):
            choose_balancing_ratio(ag, an, [])


class TestCalibration:
    def test_zero_potency_unreachable(self):
        ag, an = ligands(1.0, 1.0, potency=0.0)
        with pytest.raises(ThresholdUnreachable):
            calibrate_threshold_dose([RegionSpec("r", {"mu": 1000})], ag, an, 1.0, 1.0)

    def test_cap_before_threshold_unreachable(self):
        ag, an = ligands(1.0, 1.0)
        with pytest.raises(ThresholdUnreachable):
            calibrate_threshold_dose([RegionSpec("r", {"mu": 1000})], ag, an, 1.0, 1e6)

    def test_linear_single_region(self):
        ag, an = ligands(1.0, 1.0, potency=3.0)
        region = RegionSpec("r", {"mu": 10_000})
        # analgesia = potency * S * k * dose/2 = 15000 * dose
        dose = calibrate_threshold_dose([region], ag, an, 1.0, 60.0)
        assert dose == pytest.approx(60.0 / 15_000.0, rel=1e-6)
        assert analgesia([region], ag, an, 1.0, dose) >= 60.0

    def test_multi_region_matches_grid_scan(self):
        ag, an = ligands(1.0, 1.0, potency=2.0)
        regions = [
            RegionSpec("a", {"mu": 10_000}),
            RegionSpec("b", {"mu": 5_000}, True, 1.0, 0.5),
        ]
        dose = calibrate_threshold_dose(regions, ag, an, 1.0, 300.0)
        # frozen from oracles.grid_threshold_dose(13333.33.., 300, 0.2): 1e5-point grid, step 2e-6
        grid_dose, step = oracles.grid_threshold_dose(2 * (10_000 * 0.5 + 5_000 * 0.5 / 1.5), 300.0, 0.2)
        assert grid_dose == pytest.approx(0.0225, abs=1e-12)
        assert abs(dose - grid_dose) <= step
        assert dose <= max_linear_dose(regions, ag, an, 1.0)


doses = st.floats(1e-6, 1e-4)
scales = st.floats(0.01, 20.0)
affinities = st.floats(0.01, 5.0)


@settings(max_examples=200, deadline=None)
@given(doses, scales, affinities, affinities, st.floats(0.05, 20.0), st.floats(0.0, 3.0))
def test_dose_scaling_is_linear(dose, s, k_a, k_aa, R, secretion):
    ag, an = ligands(k_a, k_aa)
    region = RegionSpec("r", {"mu": 1000}, True, 1.0, secretion)
    b1 = equilibrium_occupancy(region, ag, an, InjectionProtocol(dose, R))
    b2 = equilibrium_occupancy(region, ag, an, InjectionProtocol(dose * s, R))
    assert b2.agonist == pytest.approx(s * b1.agonist, rel=1e-9)
    assert b2.antagonist == pytest.approx(s * b1.antagonist, rel=1e-9)
    assert b1.agonist_fraction == pytest.approx(b2.agonist_fraction, rel=1e-14)
    assert agonist_attach_probability(ag, an, R, "mu") == agonist_attach_probability(
        ag, an, R, "mu", endogenous_level=secretion
    )


@settings(max_examples=200, deadline=None)
@given(affinities, affinities, st.floats(0.0, 5.0), st.floats(1.01, 10.0))
def test_secretion_lowers_exogenous_but_not_p(k_a, k_aa, gain, factor):
    ag, an = ligands(k_a, k_aa)
    proto = InjectionProtocol(1e-4, 1.0)
    low = equilibrium_occupancy(RegionSpec("r", {"mu": 1000}, True, 1.0, gain), ag, an, proto)
    high = equilibrium_occupancy(
        RegionSpec("r", {"mu": 1000}, True, 1.0, gain * factor + 0.01), ag, an, proto
    )
    assert high.exogenous < low.exogenous
    assert high.agonist_fraction == pytest.approx(low.agonist_fraction, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 100.0), st.floats(1.0, 100.0))
def test_calibrated_dose_monotone_in_threshold(t1, t2):
    ag, an = ligands(1.0, 0.5, potency=1.0)
    regions = [RegionSpec("a", {"mu": 5_000}), RegionSpec("b", {"mu": 2_000}, True, 0.5, 1.0)]
    lo, hi = sorted((t1, t2))
    assert calibrate_threshold_dose(regions, ag, an, 2.0, lo) <= calibrate_threshold_dose(
        regions, ag, an, 2.0, hi
    )


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 100_000), st.floats(0.0, 0.999), affinities, affinities, st.floats(0.0, 50.0))
def test_counts_never_exceed_receptors(sites, dose_frac, k_a, k_aa, gain):
    ag, an = ligands(k_a, k_aa)
    region = RegionSpec("r", {"mu": sites}, True, 1.0, gain)
    cap_dose = max_linear_dose([region], ag, an, 1.0)
    dose = max(cap_dose * dose_frac, 1e-12)
    b = equilibrium_occupancy(region, ag, an, InjectionProtocol(dose, 1.0))
    pop = b.populations["mu"]
    assert pop.agonist + pop.antagonist + pop.endogenous <= sites * (1 + 1e-12)
    assert math.isfinite(pop.saturation_fraction)
