import math

import numpy as np
import pytest

from opiatesim.binding import InjectionProtocol, Role
from opiatesim.errors import InvalidWindow, UndefinedRatio
from opiatesim.protocol import MEASUREMENTS, simulate_batch, _occupancy_state, eigenstate_distribution
from opiatesim.scanner import (
    DetectorModel,
    compute_ratio,
    decay_integral,
    expected_pixel_mean,
    ratio_array,
    simulate_scan,
)
from opiatesim.seeding import roi_streams, substream
from opiatesim.superposition import BiasModel, GateInputs, apply_bias, joint_collapse

import builders
import oracles


def test_zero_molecules_zero_background():
    region = builders.region("r", pixels=16)
    scan = simulate_scan(
        {"r": (0, 0)}, Role.AGONIST, DetectorModel(), InjectionProtocol(0.01, 1.0),
        {"r": region}, {"r": substream(0, 1)},
    )
    assert np.all(scan.rois["r"].pixels == 0)
    assert scan.aggregate("r") == 0.0


def test_poisson_mean_and_variance():
    det = DetectorModel(1.0, math.inf, 0.0, 0.0, 1.0)
    proto = InjectionProtocol(0.01, 1.0, scan_start=0.0, scan_duration=1.0)
    region = builders.region("r", pixels=1)
    rng = {"r": substream(5, 1)}
    draws = np.array([
        simulate_scan({"r": (1000, 0)}, Role.AGONIST, det, proto, {"r": region}, rng)
        .aggregate("r") for _ in range(10_000)
    ])
    assert abs(draws.mean() - 1000) < 3 * math.sqrt(1000 / draws.size)
    assert draws.var(ddof=1) == pytest.approx(1000, rel=0.05)


def test_hot_ligand_selects_molecules():
    det = DetectorModel(1.0, math.inf, 0.0, 0.0, 1.0)
    proto = InjectionProtocol(0.01, 1.0, scan_start=0.0, scan_duration=1.0)
    region = builders.region("r", pixels=1)
    scan = simulate_scan({"r": (0, 50)}, Role.AGONIST, det, proto, {"r": region}, {"r": substream(1)})
    assert scan.aggregate("r") == 0.0
    scan = simulate_scan({"r": (0, 50)}, Role.ANTAGONIST, det, proto, {"r": region}, {"r": substream(1)})
    assert scan.aggregate("r") > 0


def test_decay_integral_protocol_window():
    got = decay_integral(30.0, 45.0, 20.4)
    assert got == pytest.approx(oracles.decay_integral_closed_form(30.0, 75.0, 20.4), rel=0, abs=1e-12)
    assert got == pytest.approx(8.317882756191116, rel=0, abs=1e-12)


def test_decay_integral_stable_label():
    assert decay_integral(30.0, 45.0, math.inf) == 45.0


@pytest.mark.parametrize("start,duration", [(-1.0, 45.0), (30.0, 0.0), (30.0, -5.0)])
def test_invalid_window(start, duration):
    with pytest.raises(InvalidWindow):
        decay_integral(start, duration, 20.4)


def test_expected_mean_includes_backgrounds():
    det = DetectorModel(0.5, math.inf, 2.0, 1.5, 2.0)
    # 100 molecules over 10 pixels, 2 * 0.5 * 45 counts per molecule, plus 3.5
    assert expected_pixel_mean(100, 10, det, 30.0, 45.0) == pytest.approx(10 * 45 + 3.5)


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorModel(efficiency=0.0)
    with pytest.raises(ValueError):
        DetectorModel(isotope_half_life=-1.0)
    with pytest.raises(ValueError):
        DetectorModel(nonspecific_background=-1.0)


class TestRatio:
    def test_examples(self):
        assert compute_ratio(100, 50) == 2.0
        assert compute_ratio(0, 40) == 0.0
        with pytest.raises(UndefinedRatio):
            compute_ratio(3, 0)

    def test_undefined_is_zero_division(self):
        with pytest.raises(ZeroDivisionError):
            compute_ratio(3, 0)

    def test_vectorised(self):
        r, ok = ratio_array([100, 0, 3], [50, 40, 0])
        np.testing.assert_array_equal(r, [2.0, 0.0, 0.0])
        np.testing.assert_array_equal(ok, [True, True, False])


def test_batch_engine_matches_scalar_path():
    """n = 1 of the vectorised engine equals joint_collapse + simulate_scan per measurement."""
    regions = [builders.region("a", pain=True, pixels=8), builders.region("b", sites=9_000, pixels=3)]
    plan = builders.plan(regions, bound=40)
    det = DetectorModel(0.05, 20.4, 0.5, 0.25, 30.0)
    bias = BiasModel(3.0)
    ids = ["a", "b"]
    batch = simulate_batch(plan, bias, det, roi_streams(9, ids, 1, 0), 1)

    streams = roi_streams(9, ids, 1, 0)
    by_id = {r.id: r for r in regions}
    manual = {roi: [] for roi in ids}
    for dose_class, hot in MEASUREMENTS:
        inj = plan.injection(dose_class, hot)
        state = {}
        for r in regions:
            N, p = _occupancy_state(r, plan.subject, inj)
            gate = GateInputs(dose_class, r.pain_responsive, r.pain_intensity)
            state[r.id] = apply_bias(eigenstate_distribution(N, p), bias, gate)
        occupancy = joint_collapse(state, streams)
        scan = simulate_scan(occupancy, hot, det, inj, by_id, streams)
        for roi in ids:
            manual[roi].append(scan.aggregate(roi))
    for roi in ids:
        b = batch[roi]
        got = [b.c_a_threshold[0], b.c_aa_threshold[0], b.c_a_subpharm[0], b.c_aa_subpharm[0]]
        assert got == manual[roi]
