import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from qkdwdm.config import ChannelPlan, ClassicalChannel, DetectorSpec, Direction, FibreSpec, FilterSpec
from qkdwdm.interference import (
    check_plan_fwm,
    crosstalk_probability,
    degenerate_fwm_products,
    effective_length_km,
    nonlinear_phase_product,
    photon_rate_per_ns,
    required_isolation_db,
)

B, A = Direction.TOWARD_BOB, Direction.TOWARD_ALICE


def plan(*pairs, **kw):
    return ChannelPlan(channels=tuple(ClassicalChannel(o, d) for o, d in pairs), **kw)


def test_photon_rate_benchmark():
    r = photon_rate_per_ns(-28, 1550)
    assert r == pytest.approx(oracles.photons_per_ns(-28, 1550), rel=1e-12)
    assert r == pytest.approx(1.24e4, rel=1e-2)


def test_photon_rate_halving():
    assert photon_rate_per_ns(-28 - 10 * math.log10(2), 1550) == pytest.approx(photon_rate_per_ns(-28, 1550) / 2)
    assert photon_rate_per_ns(-28, 775) == pytest.approx(photon_rate_per_ns(-28, 1550) / 2)


def test_required_isolation_benchmark():
    iso = required_isolation_db(-28, 1550, 5e-6, 0.07, 2.65, 1.0)
    assert iso == pytest.approx(79.6, abs=0.5)
    # forward evaluation lands exactly on the target
    leaked = oracles.photons_per_ns(-28, 1550) * 10 ** (-iso / 10) * 0.07 * 10 ** -0.265 * 1.0
    assert leaked == pytest.approx(5e-6, rel=1e-9)


def test_required_isolation_zero_when_already_below():
    detected = photon_rate_per_ns(-28, 1550) * 0.07 * 10 ** -0.265
    assert required_isolation_db(-28, 1550, detected, 0.07, 2.65, 1.0) == pytest.approx(0.0, abs=1e-9)
    assert required_isolation_db(-28, 1550, 2 * detected, 0.07, 2.65, 1.0) == 0.0


def test_required_isolation_log_linear():
    a = required_isolation_db(-28, 1550, 5e-6, 0.07, 2.65, 1.0)
    b = required_isolation_db(-28, 1550, 5e-7, 0.07, 2.65, 1.0)
    assert b - a == pytest.approx(10.0)


@given(st.floats(1e-9, 1e-3), st.floats(1.01, 100), st.floats(-35, 0), st.floats(0.1, 10))
def test_required_isolation_monotone(target, factor, power, dp):
    base = required_isolation_db(power, 1550, target, 0.07, 2.65, 1.0)
    assert required_isolation_db(power, 1550, target * factor, 0.07, 2.65, 1.0) <= base
    assert required_isolation_db(power + dp, 1550, target, 0.07, 2.65, 1.0) >= base


def test_crosstalk_default_plan(default_link):
    p = crosstalk_probability(default_link.plan, default_link.detector, None, default_link.protocol.bob_internal_loss_db)
    # four non-adjacent channels, each near the dark count level per gate
    assert all(not default_link.plan.is_adjacent(ch) for ch in default_link.plan.channels)
    assert 5e-6 < p < 5e-5
    one = oracles.photons_per_ns(-26.05, 1553.33) * 10 ** -8.2 * 0.07 * 10 ** -0.265 * 1.5
    assert p == pytest.approx(4 * one, rel=2e-3)


def test_crosstalk_infinite_isolation():
    pl = plan((200, B), isolation_nonadjacent_db=math.inf)
    assert crosstalk_probability(pl, DetectorSpec()) == 0.0


def test_crosstalk_filter(default_link):
    f = FilterSpec()
    raw = crosstalk_probability(default_link.plan, default_link.detector, None, 2.65)
    filt = crosstalk_probability(default_link.plan, default_link.detector, f, 2.65)
    assert filt == pytest.approx(raw * 10 ** -1.4 * 10 ** -0.2, rel=1e-12)


def test_adjacent_uses_adjacent_isolation():
    adj = crosstalk_probability(plan((100, B)), DetectorSpec())
    far = crosstalk_probability(plan((200, B)), DetectorSpec())
    assert adj / far == pytest.approx(10 ** 2.3, rel=1e-2)


def test_fwm_products_examples():
    assert degenerate_fwm_products(200, 300) == (100, 400)
    assert degenerate_fwm_products(200, 400) == (0, 600)
    assert degenerate_fwm_products(-100, 100) == (-300, 300)
    with pytest.raises(ValueError):
        degenerate_fwm_products(200, 200)


@given(st.integers(-2000, 2000), st.integers(-2000, 2000))
def test_fwm_antisymmetric(a, b):
    if a == b:
        return
    p, m = degenerate_fwm_products(a, b)
    assert degenerate_fwm_products(b, a) == (m, p)


def test_plan_check_default_plan(default_link):
    rep = check_plan_fwm(default_link.plan, default_link.fibre)
    assert rep.ok
    assert sorted(p for _, p in rep.products) == [100, 300, 400, 600]


def test_plan_check_violation():
    rep = check_plan_fwm(plan((200, B), (400, B)))
    assert not rep.ok
    v = rep.violations[0]
    assert v.product_offset_ghz == 0 and v.distance_to_passband_ghz < 0


def test_plan_check_only_same_direction():
    assert check_plan_fwm(plan((200, B), (400, A))).ok


def test_plan_check_empty():
    rep = check_plan_fwm(ChannelPlan(), FibreSpec(50))
    assert rep.ok and rep.gamma_p0_l == 0 and rep.spontaneous_negligible


@given(st.lists(st.sampled_from([100, 200, 300, 400, 500, 600, -100, -200, -300]), min_size=0, max_size=5,
                unique=True),
       st.lists(st.booleans(), min_size=5, max_size=5),
       st.integers(-20, 20))
def test_plan_check_translation_invariant(offsets, dirs, shift):
    """Moving every channel and the quantum channel together changes nothing."""
    chans = tuple(ClassicalChannel(o, B if d else A) for o, d in zip(offsets, dirs))
    base = ChannelPlan(channels=chans)
    f0 = 193_200.0 + 100 * shift  # GHz
    from qkdwdm import units

    moved = replace(base, quantum_wavelength_nm=units.hz_to_wavelength_nm(f0 * 1e9))
    assert [v.product_offset_ghz for v in check_plan_fwm(base).violations] == [
        v.product_offset_ghz for v in check_plan_fwm(moved).violations]


def test_nonlinear_phase_example():
    v = nonlinear_phase_product(2.0, 1.13e-4, 50, 0.04835)
    assert v == pytest.approx(2 * 1.13e-4 * (1 - math.exp(-0.04835 * 50)) / 0.04835, rel=1e-12)
    assert v == pytest.approx(4.2e-3, rel=0.05)


def test_nonlinear_phase_limits():
    assert nonlinear_phase_product(2.0, 0.0, 50, 0.05) == 0
    assert nonlinear_phase_product(2.0, 1e-3, 50, 1e-12) == pytest.approx(2 * 1e-3 * 50, rel=1e-9)
    assert nonlinear_phase_product(2.0, 1e-3, 50, 0.05, effective=False) == pytest.approx(0.1)
    assert effective_length_km(10, 0.0) == 10


def test_plan_check_gamma_p0_l_at_50km(default_link):
    cfg = default_link.with_length(50)
    rep = check_plan_fwm(cfg.plan, cfg.fibre)
    # per channel launch -26.05 + 10.5 dB; two co-propagating channels
    p_ch = 1e-3 * 10 ** ((-26.05 + 0.21 * 50) / 10)
    assert rep.p0_w == pytest.approx(2 * p_ch, rel=1e-12)
    assert 5e-4 <= rep.gamma_p0_l <= 1e-2
    assert rep.spontaneous_negligible
