import math
import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkdwdm import units
from qkdwdm.config import (
    ChannelPlan,
    ClassicalChannel,
    ConfigError,
    DetectorSpec,
    Direction,
    FibreSpec,
    FilterSpec,
    ProtocolConfig,
    RamanProfile,
    default_profile,
    dumps_config,
    load_config,
    load_raman_profile,
    loads_config,
    parse_raman_profile,
)
from qkdwdm.scenario import PRESET_NAMES, preset


def write(tmp_path, text, name="p.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- conversions


def test_dbm_to_watts_minus_28():
    assert units.dbm_to_watts(-28) == pytest.approx(1.585e-6, rel=1e-3)


def test_db_to_linear_zero():
    assert units.db_to_linear(0) == 1.0


def test_alpha_conversion():
    assert units.alpha_db_to_per_km(0.21) == pytest.approx(0.04835, rel=1e-3)


@given(st.floats(-80, 40))
def test_dbm_round_trip(x):
    assert units.watts_to_dbm(units.dbm_to_watts(x)) == pytest.approx(x, rel=1e-12, abs=1e-12)


def test_watts_to_dbm_rejects_nonpositive():
    with pytest.raises(ValueError):
        units.watts_to_dbm(0.0)


@given(st.floats(-2000, 2000).filter(lambda x: abs(x) > 1e-3))
def test_offset_conversion_exact(offset):
    lam = units.offset_to_wavelength_nm(1551.72, offset)
    df = units.wavelength_nm_to_hz(1551.72) - units.wavelength_nm_to_hz(lam)
    assert df / 1e9 == pytest.approx(offset, rel=1e-9)


def test_positive_offset_is_longer_wavelength():
    assert units.offset_to_wavelength_nm(1551.72, 200) > 1551.72
    assert units.offset_to_wavelength_nm(1551.72, 200) == pytest.approx(1553.33, abs=0.01)


# --- Raman profile CSV


def test_two_row_profile(tmp_path):
    p = load_raman_profile(write(tmp_path, "wavelength_nm,rho_per_km_per_nm\n1540,2e-9\n1560,3e-9\n"))
    assert p.samples == ((1540.0, 2e-9), (1560.0, 3e-9))


def test_descending_rejected(tmp_path):
    with pytest.raises(ConfigError, match="unsorted") as ei:
        load_raman_profile(write(tmp_path, "wavelength_nm,rho_per_km_per_nm\n1560,2e-9\n1540,3e-9\n"))
    assert ei.value.line == 3


def test_negative_rejected(tmp_path):
    with pytest.raises(ConfigError, match="negative cross-section"):
        load_raman_profile(write(tmp_path, "wavelength_nm,rho_per_km_per_nm\n1540,-1\n1560,3e-9\n"))


def test_parse_error_reports_line(tmp_path):
    with pytest.raises(ConfigError, match="line 4"):
        load_raman_profile(write(tmp_path, "# c\nwavelength_nm,rho_per_km_per_nm\n1540,1e-9\n1550,abc\n"))


def test_bad_header(tmp_path):
    with pytest.raises(ConfigError, match="header"):
        load_raman_profile(write(tmp_path, "lambda,rho\n1540,1e-9\n"))


def test_single_sample_rejected():
    with pytest.raises(ConfigError):
        parse_raman_profile(["wavelength_nm,rho_per_km_per_nm", "1540,1e-9"])


def test_metadata_parsed():
    p = parse_raman_profile(["# pump_nm=1549.5", "# temperature_K=300",
                             "wavelength_nm,rho_per_km_per_nm", "1540,1e-9", "1560,2e-9"])
    assert p.pump_wavelength_nm == 1549.5 and p.temperature_K == 300


def test_pump_outside_span_warns():
    with pytest.warns(UserWarning, match="outside"):
        RamanProfile(1300.0, 293.0, ((1540, 1e-9), (1560, 2e-9)))


def test_default_profile_is_labelled_synthetic():
    from importlib import resources

    text = (resources.files("qkdwdm") / "data" / "raman_synthetic_1550.csv").read_text()
    assert "SYNTHETIC" in text.splitlines()[0]
    prof = default_profile()
    assert prof.pump_wavelength_nm == 1550.0
    assert len(prof.samples) > 100


def test_default_profile_shape():
    """Broad Stokes maximum near +100 nm; anti-Stokes side a little weaker near the pump."""
    prof = default_profile()
    w, r = prof.wavelengths_nm, prof.rho
    peak = w[r.index(max(r))]
    assert 80 <= peak - 1550 <= 125
    d = dict(prof.samples)
    deficit = 1 - d[1546.0] / d[1554.0]
    assert 0.03 < deficit < 0.2


# --- type invariants


@pytest.mark.parametrize("kwargs, field_name", [
    (dict(length_km=-1), "length_km"),
    (dict(length_km=math.inf), "length_km"),
    (dict(length_km=1, attenuation_db_per_km=0), "attenuation_db_per_km"),
    (dict(length_km=1, attenuation_db_per_km=6), "attenuation_db_per_km"),
])
def test_fibre_invariants(kwargs, field_name):
    with pytest.raises(ConfigError, match=field_name):
        FibreSpec(**kwargs)


def test_channel_invariants():
    with pytest.raises(ConfigError, match="offset"):
        ClassicalChannel(0.0, Direction.TOWARD_BOB)
    with pytest.raises(ConfigError, match="receiver_power_dbm"):
        ClassicalChannel(200.0, Direction.TOWARD_BOB, receiver_power_dbm=-50)
    with pytest.raises(ValueError):
        ClassicalChannel(200.0, "sideways")


def test_plan_invariants():
    ch = ClassicalChannel(200.0, Direction.TOWARD_BOB)
    with pytest.raises(ConfigError, match="duplicate"):
        ChannelPlan(channels=(ch, ch))
    with pytest.raises(ConfigError, match="grid"):
        ChannelPlan(channels=(ClassicalChannel(50.0, Direction.TOWARD_BOB),))
    with pytest.raises(ConfigError, match="passband"):
        ChannelPlan(quantum_passband_nm=1.0)
    with pytest.raises(ConfigError, match="isolation"):
        ChannelPlan(isolation_adjacent_db=-1)
    # same offset in opposite directions is allowed
    ChannelPlan(channels=(ch, ClassicalChannel(200.0, Direction.TOWARD_ALICE)))


def test_detector_invariants():
    with pytest.raises(ConfigError, match="efficiency"):
        DetectorSpec(efficiency=0)
    with pytest.raises(ConfigError, match="afterpulse"):
        DetectorSpec(afterpulse_prob=1.0)
    with pytest.raises(ConfigError, match="dark"):
        DetectorSpec(dark_count_prob_per_ns=0.9, gate_width_ns=2.0)


def test_protocol_invariants():
    assert ProtocolConfig(protocol="sarg").protocol.value == "SARG"
    with pytest.raises(ConfigError, match="protocol"):
        ProtocolConfig(protocol="e91")
    with pytest.raises(ConfigError, match="error_correction"):
        ProtocolConfig(error_correction_inefficiency=0.9)
    with pytest.raises(ConfigError, match="mean_photon"):
        ProtocolConfig(mean_photon_override=0)


def test_filter_invariants():
    assert FilterSpec().noise_rejection_fraction == 0.85
    with pytest.raises(ConfigError):
        FilterSpec(noise_rejection_fraction=1.0)


# --- JSON


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_config_round_trip_idempotent(tmp_path, name):
    text = dumps_config(preset(name))
    p = tmp_path / "c.json"
    p.write_text(text)
    again = dumps_config(load_config(p))
    assert again == text
    assert load_config(p) == preset(name)


def test_config_errors_name_field():
    base = dumps_config(preset("paper-default"))
    with pytest.raises(ConfigError, match="detector.*efficiency"):
        loads_config(base.replace('"efficiency": 0.07', '"efficiency": 2.0'))
    with pytest.raises(ConfigError, match="schema_version"):
        loads_config(base.replace('"schema_version": 1', '"schema_version": 9'))
    with pytest.raises(ConfigError, match="unknown"):
        loads_config(base.replace('"raman_scale"', '"raman_scal"'))
    with pytest.raises(ConfigError, match="invalid JSON"):
        loads_config("{")


def test_relative_profile_path(tmp_path):
    (tmp_path / "prof.csv").write_text("wavelength_nm,rho_per_km_per_nm\n1540,2e-9\n1560,4e-9\n")
    text = dumps_config(preset("paper-default", calibrate=False)).replace(
        '"raman_profile_path": null', '"raman_profile_path": "prof.csv"')
    (tmp_path / "c.json").write_text(text)
    cfg = load_config(tmp_path / "c.json")
    assert cfg.profile().samples == ((1540.0, 2e-9), (1560.0, 4e-9))


def test_missing_profile_file(tmp_path):
    text = dumps_config(preset("paper-default", calibrate=False)).replace(
        '"raman_profile_path": null', '"raman_profile_path": "nope.csv"')
    (tmp_path / "c.json").write_text(text)
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "c.json").profile()


def test_types_are_frozen():
    f = FibreSpec(1.0)
    with pytest.raises(Exception):
        f.length_km = 2.0


def test_clamp_warns():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        assert units.clamp_probability(1.5) == (1.0, True)
    assert rec and issubclass(rec[0].category, units.ProbabilityClampWarning)
    assert units.clamp_probability(0.3) == (0.3, False)
