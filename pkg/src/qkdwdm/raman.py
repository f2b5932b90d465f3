"""Spontaneous Raman noise from classical channels into the quantum channel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import units
from .config import ChannelPlan, DetectorSpec, Direction, FibreSpec, FilterSpec, RamanProfile


class WavelengthRangeError(ValueError):
    pass


@dataclass(frozen=True)
class RamanResult:
    power_forward_w: float
    power_backward_w: float
    prob_forward_per_gate: float
    prob_backward_per_gate: float
    clamped: bool = False

    @property
    def prob_total(self) -> float:
        return self.prob_forward_per_gate + self.prob_backward_per_gate


def cross_section_at(profile: RamanProfile, wavelength_nm: float) -> float:
    """Linearly interpolated rho at `wavelength_nm` (exact at sample points)."""
    lo, hi = profile.span_nm
    if not lo <= wavelength_nm <= hi:
        raise WavelengthRangeError(
            f"wavelength {wavelength_nm} nm outside profile span [{lo}, {hi}] nm"
        )
    return float(np.interp(wavelength_nm, profile.wavelengths_nm, profile.rho))


def shifted_cross_section(profile: RamanProfile, pump_nm: float, signal_nm: float) -> float:
    """rho for a pump at `pump_nm` observed at `signal_nm`.

    The profile is measured for one pump wavelength; other pumps reuse it at
    the same frequency shift.
    """
    shift_hz = units.wavelength_nm_to_hz(pump_nm) - units.wavelength_nm_to_hz(signal_nm)
    f_query = units.wavelength_nm_to_hz(profile.pump_wavelength_nm) - shift_hz
    return cross_section_at(profile, units.hz_to_wavelength_nm(f_query))


def raman_power_forward(p_out_w: float, length_km: float, rho: float, passband_nm: float) -> float:
    """Co-propagating scatter leaving the fibre end where the pump exits."""
    return p_out_w * length_km * rho * passband_nm


def effective_backward_length(length_km: float, alpha_per_km: float) -> float:
    """sinh(aL)/a, which tends to L as a -> 0."""
    x = alpha_per_km * length_km
    if x < 1e-8:
        return length_km * (1.0 + x * x / 6.0)
    return math.sinh(x) / alpha_per_km


def raman_power_backward(
    p_out_w: float, length_km: float, alpha_per_km: float, rho: float, passband_nm: float
) -> float:
    """Counter-propagating scatter leaving the pump's launch end.

    `p_out_w` is still the pump power at its far (output) end.
    """
    if alpha_per_km < 0:
        raise ValueError("alpha_per_km must be >= 0")
    return p_out_w * effective_backward_length(length_km, alpha_per_km) * rho * passband_nm


def _count_probability(power_w, wavelength_nm, efficiency, gate_ns, extra_loss_db):
    rate_hz = power_w / units.photon_energy_j(wavelength_nm)
    p = rate_hz * efficiency * gate_ns * 1e-9 * 10.0 ** (-extra_loss_db / 10.0)
    return units.clamp_probability(p, "detection probability")


def count_probability(
    power_w: float, wavelength_nm: float, efficiency: float, gate_ns: float, extra_loss_db: float = 0.0
) -> float:
    """Probability of a click in one gate from a steady optical power.

    Args:
        power_w: optical power reaching the receiver input, W.
        wavelength_nm: photon wavelength.
        efficiency: detector quantum efficiency.
        gate_ns: gate width.
        extra_loss_db: loss between the power reference point and the detector.

    Values above 1 are clamped with a ProbabilityClampWarning.
    """
    if power_w < 0:
        raise ValueError("power must be >= 0")
    return _count_probability(power_w, wavelength_nm, efficiency, gate_ns, extra_loss_db)[0]


def raman_noise(
    plan: ChannelPlan,
    fibre: FibreSpec,
    detector: DetectorSpec,
    profile: RamanProfile,
    filter: FilterSpec | None = None,
    internal_loss_db: float = 0.0,
) -> RamanResult:
    """Raman powers and per-gate click probabilities at Bob's detector.

    Channels travelling toward Bob scatter forward into his receiver; channels
    travelling toward Alice reach him by backward scatter. Each channel's
    fibre-end power is its receiver power plus the demultiplexer insertion.
    The scattered light then crosses Bob's demultiplexer, his internal optics
    and the optional filter.
    """
    alpha = fibre.alpha_per_km
    p_f = p_b = 0.0
    for ch in plan.channels:
        p_out = units.dbm_to_watts(plan.fibre_output_power_dbm(ch))
        rho = shifted_cross_section(profile, plan.channel_wavelength_nm(ch), plan.quantum_wavelength_nm)
        if ch.direction is Direction.TOWARD_BOB:
            p_f += raman_power_forward(p_out, fibre.length_km, rho, plan.quantum_passband_nm)
        else:
            p_b += raman_power_backward(p_out, fibre.length_km, alpha, rho, plan.quantum_passband_nm)

    loss_db = plan.dwdm_insertion_loss_db + internal_loss_db
    keep = 1.0
    if filter is not None:
        loss_db += filter.insertion_loss_db
        keep = 1.0 - filter.noise_rejection_fraction
    args = (plan.quantum_wavelength_nm, detector.efficiency, detector.gate_width_ns, loss_db)
    prob_f, cf = _count_probability(p_f * keep, *args)
    prob_b, cb = _count_probability(p_b * keep, *args)
    return RamanResult(p_f, p_b, prob_f, prob_b, cf or cb)


def total_raman_probability(
    plan: ChannelPlan,
    fibre: FibreSpec,
    detector: DetectorSpec,
    profile: RamanProfile,
    filter: FilterSpec | None = None,
    internal_loss_db: float = 0.0,
) -> tuple[float, float]:
    r = raman_noise(plan, fibre, detector, profile, filter, internal_loss_db)
    return r.prob_forward_per_gate, r.prob_backward_per_gate
