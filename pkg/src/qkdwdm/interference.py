"""Classical-channel crosstalk and four-wave-mixing plan checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from . import units
from .config import ChannelPlan, ClassicalChannel, DetectorSpec, Direction, FibreSpec, FilterSpec

SPONTANEOUS_FWM_THRESHOLD = 0.1


def photon_rate_per_ns(power_dbm: float, wavelength_nm: float) -> float:
    return units.dbm_to_watts(power_dbm) / units.photon_energy_j(wavelength_nm) * 1e-9


def required_isolation_db(
    receiver_power_dbm: float,
    wavelength_nm: float,
    target_prob_per_gate: float,
    efficiency: float,
    internal_loss_db: float,
    gate_ns: float,
) -> float:
    """Smallest isolation keeping leaked clicks at or below the target per gate."""
    if not target_prob_per_gate > 0:
        raise ValueError("target probability must be > 0")
    detected = (
        photon_rate_per_ns(receiver_power_dbm, wavelength_nm)
        * efficiency
        * 10.0 ** (-internal_loss_db / 10.0)
        * gate_ns
    )
    return max(0.0, 10.0 * math.log10(detected / target_prob_per_gate))


@dataclass(frozen=True)
class CrosstalkTerm:
    channel: ClassicalChannel
    isolation_db: float
    probability: float


def crosstalk_terms(
    plan: ChannelPlan,
    detector: DetectorSpec,
    filter: FilterSpec | None = None,
    internal_loss_db: float = 0.0,
) -> list[CrosstalkTerm]:
    loss_db = internal_loss_db
    if filter is not None:
        loss_db += filter.insertion_loss_db + filter.extinction_db
    terms = []
    for ch in plan.channels:
        iso = plan.isolation_db(ch)
        rate = photon_rate_per_ns(plan.fibre_output_power_dbm(ch), plan.channel_wavelength_nm(ch))
        if math.isinf(iso):
            p = 0.0
        else:
            p = rate * 10.0 ** (-(iso + loss_db) / 10.0) * detector.efficiency * detector.gate_width_ns
        terms.append(CrosstalkTerm(ch, iso, p))
    return terms


def crosstalk_probability(
    plan: ChannelPlan,
    detector: DetectorSpec,
    filter: FilterSpec | None = None,
    internal_loss_db: float = 0.0,
) -> float:
    """Summed leak-through click probability per gate.

    Each channel leaks at its power entering the demultiplexer, attenuated by
    the adjacent or non-adjacent isolation. A filter adds its extinction and
    insertion loss.
    """
    p = sum(t.probability for t in crosstalk_terms(plan, detector, filter, internal_loss_db))
    return units.clamp_probability(p, "crosstalk probability")[0]


# ---------------------------------------------------------------- FWM


def degenerate_fwm_products(f1_offset_ghz: float, f2_offset_ghz: float) -> tuple[float, float]:
    if f1_offset_ghz == f2_offset_ghz:
        raise ValueError("degenerate FWM needs two distinct frequencies")
    return 2 * f1_offset_ghz - f2_offset_ghz, 2 * f2_offset_ghz - f1_offset_ghz


def effective_length_km(length_km: float, alpha_per_km: float) -> float:
    x = alpha_per_km * length_km
    if x < 1e-8:
        return length_km
    return -math.expm1(-x) / alpha_per_km


def nonlinear_phase_product(
    gamma_per_w_km: float,
    p0_w: float,
    length_km: float,
    alpha_per_km: float,
    effective: bool = True,
) -> float:
    """gamma * P0 * L, with L the effective length unless `effective` is off."""
    length = effective_length_km(length_km, alpha_per_km) if effective else length_km
    return gamma_per_w_km * p0_w * length


@dataclass(frozen=True)
class FwmViolation:
    pair: tuple[float, float]
    direction: Direction
    product_offset_ghz: float
    distance_to_passband_ghz: float


@dataclass(frozen=True)
class FwmReport:
    violations: tuple[FwmViolation, ...]
    gamma_p0_l: float
    spontaneous_negligible: bool
    p0_w: float = 0.0
    products: tuple[tuple[Direction, float], ...] = field(default=(), repr=False)

    @property
    def ok(self) -> bool:
        return not self.violations


def launch_power_dbm(plan: ChannelPlan, ch: ClassicalChannel, fibre: FibreSpec) -> float:
    """Power entering the fibre that lands the channel on its receiver target."""
    return plan.fibre_output_power_dbm(ch) + fibre.attenuation_db_per_km * fibre.length_km


def check_plan_fwm(
    plan: ChannelPlan,
    fibre: FibreSpec | None = None,
    gamma_per_w_km: float | None = None,
    effective: bool = True,
) -> FwmReport:
    """Flag degenerate FWM products that fall inside the quantum passband.

    Only channels sharing a direction mix. The nonlinear estimate takes P0 as
    the summed launch power of the strongest co-propagating group; without a
    fibre it is zero.
    """
    half_band = plan.passband_ghz / 2.0
    violations = []
    products = []
    groups: dict[Direction, list[ClassicalChannel]] = {}
    for ch in plan.channels:
        groups.setdefault(ch.direction, []).append(ch)
    for direction, chans in groups.items():
        for a, b in itertools.combinations(chans, 2):
            fa, fb = a.offset_ghz_from_quantum, b.offset_ghz_from_quantum
            for prod in degenerate_fwm_products(fa, fb):
                products.append((direction, prod))
                dist = abs(prod) - half_band
                if dist <= 0:
                    violations.append(FwmViolation((fa, fb), direction, prod, dist))

    p0 = 0.0
    gpl = 0.0
    if fibre is not None and plan.channels:
        p0 = max(
            sum(units.dbm_to_watts(launch_power_dbm(plan, ch, fibre)) for ch in chans)
            for chans in groups.values()
        )
        gamma = fibre.nonlinear_gamma_per_w_km if gamma_per_w_km is None else gamma_per_w_km
        gpl = nonlinear_phase_product(gamma, p0, fibre.length_km, fibre.alpha_per_km, effective)
    return FwmReport(
        violations=tuple(violations),
        gamma_p0_l=gpl,
        spontaneous_negligible=gpl < SPONTANEOUS_FWM_THRESHOLD,
        p0_w=p0,
        products=tuple(products),
    )
