"""Physical constants and unit conversions."""

from __future__ import annotations

import math
import warnings

from scipy import constants as _const

C = _const.c  # m/s, exact
H = _const.h  # J s
K_B = _const.k  # J/K

LN10_OVER_10 = math.log(10.0) / 10.0


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) * 1e-3


def watts_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError(f"power must be positive to express in dBm, got {p_w!r}")
    return 10.0 * math.log10(p_w / 1e-3)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(ratio: float) -> float:
    return 10.0 * math.log10(ratio)


def alpha_db_to_per_km(a_db_per_km: float) -> float:
    """Convert attenuation in dB/km to the field-power coefficient in 1/km."""
    return LN10_OVER_10 * a_db_per_km


def wavelength_nm_to_hz(wavelength_nm: float) -> float:
    return C / (wavelength_nm * 1e-9)


def hz_to_wavelength_nm(freq_hz: float) -> float:
    return C / freq_hz * 1e9


def photon_energy_j(wavelength_nm: float) -> float:
    return H * C / (wavelength_nm * 1e-9)


def offset_to_wavelength_nm(center_nm: float, offset_ghz: float) -> float:
    """Wavelength of a channel `offset_ghz` away from `center_nm`.

    Positive offsets sit on the long-wavelength (lower-frequency) side, which is
    where the classical channels of the default plan live. The conversion is
    exact (lambda = c / f), not a first-order expansion.
    """
    f = wavelength_nm_to_hz(center_nm) - offset_ghz * 1e9
    return hz_to_wavelength_nm(f)


def passband_nm_to_ghz(center_nm: float, width_nm: float) -> float:
    """Width in GHz of the band [center - w/2, center + w/2] in wavelength."""
    lo = wavelength_nm_to_hz(center_nm + width_nm / 2.0)
    hi = wavelength_nm_to_hz(center_nm - width_nm / 2.0)
    return (hi - lo) / 1e9


def ghz_to_nm_at(center_nm: float, width_ghz: float) -> float:
    """Wavelength span covered by `width_ghz` centred on `center_nm`."""
    f0 = wavelength_nm_to_hz(center_nm)
    return hz_to_wavelength_nm(f0 - width_ghz * 5e8) - hz_to_wavelength_nm(f0 + width_ghz * 5e8)


class ProbabilityClampWarning(RuntimeWarning):
    """A per-gate probability exceeded 1 and was clamped."""


def clamp_probability(p: float, what: str = "probability") -> tuple[float, bool]:
    """Clamp `p` to [0, 1]; warn and report when the upper clamp fires."""
    if p > 1.0:
        warnings.warn(f"{what} {p:.6g} exceeds 1 per gate; clamped", ProbabilityClampWarning, stacklevel=3)
        return 1.0, True
    return max(p, 0.0), False
