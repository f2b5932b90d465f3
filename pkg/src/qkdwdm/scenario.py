"""Length sweeps, 1310/1550 band comparison, presets and rho calibration."""

from __future__ import annotations

import csv
import functools
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from scipy.optimize import brentq

from . import units
from .config import (
    MIN_KEY_RATE_BPS,
    ChannelPlan,
    ClassicalChannel,
    ConfigError,
    DetectorSpec,
    Direction,
    FibreSpec,
    FilterSpec,
    LinkConfig,
    Protocol,
    ProtocolConfig,
)
from .keyrate import LinkBudget, link_budget
from .raman import raman_noise

# Operating point used to anchor the Raman scale for the shipped presets:
# BB84 without filters, 25 km, QBER 4.53 %.
CALIBRATION_QBER = 0.0453
CALIBRATION_LENGTH_KM = 25.0

BAND_1310_NM = 1310.0
BAND_1550_NM = 1550.0

CSV_COLUMNS = (
    "length_km", "protocol", "filters", "p_mu", "p_ram_f", "p_ram_b", "p_ct", "p_dc_gate", "p_ap",
    "qber", "qber_opt", "qber_det", "qber_wdm", "r_sift_hz", "i_ab", "i_ae", "r_sec_hz",
)


class CalibrationError(ValueError):
    pass


# ---------------------------------------------------------------- sweeps


def sweep_length(config: LinkConfig, lengths: Sequence[float], workers: int | None = None) -> list[LinkBudget]:
    """One LinkBudget per length, in input order."""
    lengths = list(lengths)
    if not lengths:
        raise ValueError("lengths must be non-empty")
    for L in lengths:
        if not (math.isfinite(L) and L >= 0):
            raise ValueError(f"length must be finite and >= 0, got {L!r}")
    profile = config.profile()
    if workers == 1 or len(lengths) < 8:
        return [link_budget(config, L, profile) for L in lengths]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda L: link_budget(config, L, profile), lengths))


def max_distance(
    config: LinkConfig,
    min_rate_bps: float = MIN_KEY_RATE_BPS,
    upper_km: float = 200.0,
    step_km: float = 0.5,
) -> float:
    """Largest length with R_sec >= `min_rate_bps`, refined by root finding.

    A coarse scan locates the last passing grid point; the crossing beyond it
    is then solved to ~1e-6 km. Returns 0 when even L = 0 fails.
    """
    profile = config.profile()

    def rate(L):
        return link_budget(config, L, profile).r_sec_hz

    if rate(0.0) < min_rate_bps:
        return 0.0
    L = 0.0
    while L + step_km <= upper_km and rate(L + step_km) >= min_rate_bps:
        L += step_km
    if L + step_km > upper_km:
        return L
    # R_sec is discontinuous at the QBER ceiling, so bisect on the pass/fail flag.
    lo, hi = L, L + step_km
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        if rate(mid) >= min_rate_bps:
            lo = mid
        else:
            hi = mid
    return lo


def format_csv(rows: Iterable[LinkBudget]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for b in rows:
        w.writerow([
            f"{b.length_km:.17e}", b.protocol.value, "1" if b.filters else "0",
            *(f"{v:.17e}" for v in (
                b.p_mu, b.p_ram_f, b.p_ram_b, b.p_ct, b.p_dc_per_gate, b.p_ap,
                b.qber_total, b.qber_opt, b.qber_det, b.qber_wdm,
                b.r_sift_hz, b.i_ab, b.i_ae, b.r_sec_hz,
            )),
        ])
    return buf.getvalue()


def write_csv(rows: Iterable[LinkBudget], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_csv(rows))


# ---------------------------------------------------------------- phonons


def phonon_occupation(shift_thz: float, temperature_K: float) -> float:
    if not (shift_thz > 0 and temperature_K > 0):
        raise ValueError("shift and temperature must be > 0")
    x = units.H * shift_thz * 1e12 / (units.K_B * temperature_K)
    if x > 700.0:
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def band_detuning_1310_ghz() -> float:
    """Frequency gap between a 1310 nm quantum channel and 1550 nm pumps."""
    return (units.wavelength_nm_to_hz(BAND_1310_NM) - units.wavelength_nm_to_hz(BAND_1550_NM)) / 1e9


def band_noise_ratio(quantum_detuning_1550_ghz: float, temperature_K: float = 293.0) -> float:
    """How much weaker anti-Stokes Raman noise is at 1310 nm than in-band.

    Ratio of phonon occupations at the in-band detuning and at the
    1310-to-1550 detuning.
    """
    if not quantum_detuning_1550_ghz > 0:
        raise ValueError("detuning must be > 0")
    n_in = phonon_occupation(quantum_detuning_1550_ghz / 1e3, temperature_K)
    n_1310 = phonon_occupation(band_detuning_1310_ghz() / 1e3, temperature_K)
    return n_in / n_1310


@dataclass(frozen=True)
class BandComparison:
    lengths_km: tuple[float, ...]
    rows_1550: tuple[LinkBudget, ...]
    rows_1310: tuple[LinkBudget, ...]

    @property
    def better_band(self) -> tuple[str, ...]:
        """Per length, the band with the higher secret rate ('equal' on ties)."""
        out = []
        for a, b in zip(self.rows_1550, self.rows_1310):
            out.append("1550" if a.r_sec_hz > b.r_sec_hz else "1310" if b.r_sec_hz > a.r_sec_hz else "equal")
        return tuple(out)


def raman_1310_from_1550(config_1550: LinkConfig, length_km: float, temperature_K: float | None = None) -> tuple[float, float]:
    """1550-band Raman click probabilities scaled channel by channel to 1310 nm."""
    cfg = config_1550.with_length(length_km)
    profile = cfg.profile()
    temp = profile.temperature_K if temperature_K is None else temperature_K
    p_f = p_b = 0.0
    for ch in cfg.plan.channels:
        single = replace(cfg.plan, channels=(ch,))
        r = raman_noise(single, cfg.fibre, cfg.detector, profile, cfg.filter, cfg.protocol.bob_internal_loss_db)
        ratio = band_noise_ratio(abs(ch.offset_ghz_from_quantum), temp)
        p_f += r.prob_forward_per_gate / ratio
        p_b += r.prob_backward_per_gate / ratio
    return p_f, p_b


def compare_bands(
    config_1550: LinkConfig, config_1310: LinkConfig, lengths: Sequence[float]
) -> BandComparison:
    """Sweep both bands over the same lengths.

    The 1310 Raman term comes from the 1550 configuration scaled by
    `band_noise_ratio`. Everything else, including crosstalk and dark counts,
    comes from the 1310 configuration.
    """
    lengths = tuple(float(L) for L in lengths)
    rows_1550 = tuple(sweep_length(config_1550, lengths))
    rows_1310 = tuple(
        link_budget(config_1310, L, raman_override=raman_1310_from_1550(config_1550, L)) for L in lengths
    )
    return BandComparison(lengths, rows_1550, rows_1310)


def band_max_distance(config_1550: LinkConfig, config_1310: LinkConfig,
                      min_rate_bps: float = MIN_KEY_RATE_BPS, upper_km: float = 200.0,
                      step_km: float = 0.25) -> tuple[float, float]:
    """Maximum distances (1550, 1310) with R_sec >= `min_rate_bps`."""
    d1550 = max_distance(config_1550, min_rate_bps, upper_km, step_km)

    def ok(L):
        ov = raman_1310_from_1550(config_1550, L)
        return link_budget(config_1310, L, raman_override=ov).r_sec_hz >= min_rate_bps

    if not ok(0.0):
        return d1550, 0.0
    L = 0.0
    while L + step_km <= upper_km and ok(L + step_km):
        L += step_km
    lo, hi = L, min(L + step_km, upper_km)
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return d1550, lo


# ---------------------------------------------------------------- calibration


def calibrate_rho(config: LinkConfig, observed_qber: float, length_km: float) -> float:
    """Factor s so that scaling rho by s reproduces `observed_qber` at `length_km`.

    The factor multiplies the config's current profile (including any
    `raman_scale` already set).
    """
    base = config.profile()

    def q(s):
        return link_budget(config, length_km, base.scaled(s)).qber_total

    floor = q(0.0)
    if observed_qber <= floor:
        raise CalibrationError(
            f"target QBER {observed_qber:.6g} is at or below the zero-Raman floor {floor:.6g}"
        )
    if q(1.0) == observed_qber:
        return 1.0
    hi = 1.0
    while q(hi) < observed_qber:
        hi *= 10.0
        if hi > 1e12:
            raise CalibrationError(f"target QBER {observed_qber:.6g} not reachable by scaling rho")
    lo = hi / 10.0 if hi > 1.0 else 0.0
    while lo > 0 and q(lo) > observed_qber:
        lo /= 10.0
        if lo < 1e-12:
            lo = 0.0
    s = brentq(lambda x: q(x) - observed_qber, lo, hi, xtol=1e-15, rtol=1e-14, maxiter=500)
    if abs(q(s) - observed_qber) > 1e-6:
        raise CalibrationError("calibration did not converge to 1e-6")
    return s


def calibrated(config: LinkConfig, observed_qber: float, length_km: float) -> LinkConfig:
    s = calibrate_rho(config, observed_qber, length_km)
    return replace(config, raman_scale=config.raman_scale * s)


# ---------------------------------------------------------------- presets

PRESET_NAMES = (
    "paper-default",
    "paper-default-filters",
    "dark-fibre",
    "10gbps-sfp",
    "paper-1310",
    "low-dark-count-1310",
)


def paper_channels(receiver_dbm: float = -28.0) -> tuple[ClassicalChannel, ...]:
    """Four channels, 200-500 GHz above the quantum channel in wavelength.

    The pair +200/+300 travels toward Bob and +400/+500 toward Alice, so no
    degenerate FWM product lands on the quantum channel.
    """
    return (
        ClassicalChannel(200.0, Direction.TOWARD_BOB, receiver_dbm),
        ClassicalChannel(300.0, Direction.TOWARD_BOB, receiver_dbm),
        ClassicalChannel(400.0, Direction.TOWARD_ALICE, receiver_dbm),
        ClassicalChannel(500.0, Direction.TOWARD_ALICE, receiver_dbm),
    )


def _paper_base() -> LinkConfig:
    return LinkConfig(
        fibre=FibreSpec(length_km=CALIBRATION_LENGTH_KM),
        plan=ChannelPlan(channels=paper_channels()),
        detector=DetectorSpec(),
        protocol=ProtocolConfig(),
    )


@functools.lru_cache(maxsize=1)
def paper_raman_scale() -> float:
    return calibrate_rho(_paper_base(), CALIBRATION_QBER, CALIBRATION_LENGTH_KM)


def _plan_1310(plan_1550: ChannelPlan) -> ChannelPlan:
    f_q = units.wavelength_nm_to_hz(BAND_1310_NM)
    chans = []
    for ch in plan_1550.channels:
        f_ch = units.wavelength_nm_to_hz(plan_1550.channel_wavelength_nm(ch))
        chans.append(replace(ch, offset_ghz_from_quantum=(f_q - f_ch) / 1e9))
    return replace(plan_1550, quantum_wavelength_nm=BAND_1310_NM, channels=tuple(chans),
                   isolation_adjacent_db=100.0, isolation_nonadjacent_db=100.0)


def preset(name: str, calibrate: bool = True) -> LinkConfig:
    """A complete named configuration.

    With `calibrate`, the Raman scale is anchored to the BB84 operating point
    at 25 km without filters.
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}", "preset")
    cfg = _paper_base()
    if calibrate:
        cfg = replace(cfg, raman_scale=paper_raman_scale())
    if name == "paper-default":
        return cfg
    if name == "paper-default-filters":
        return replace(cfg, filter=FilterSpec())
    if name == "dark-fibre":
        return replace(cfg, plan=replace(cfg.plan, channels=(), quantum_path_loss_db=0.0))
    if name == "10gbps-sfp":
        chans = tuple(
            replace(ch, receiver_power_dbm=-23.0) if ch.offset_ghz_from_quantum in (300.0, 500.0) else ch
            for ch in cfg.plan.channels
        )
        return replace(cfg, plan=replace(cfg.plan, channels=chans), filter=FilterSpec())
    # 1310 nm quantum channel: SARG with filters, as in the band comparison.
    fibre = replace(cfg.fibre, attenuation_db_per_km=0.35)
    cfg = replace(cfg, fibre=fibre, plan=_plan_1310(cfg.plan), filter=FilterSpec()).with_protocol(Protocol.SARG)
    if name == "low-dark-count-1310":
        cfg = replace(cfg, detector=replace(cfg.detector, dark_count_prob_per_ns=5e-8))
    return cfg
