"""QBER, sifted rate and secret key rate for BB84 and SARG.

All probabilities are per detector gate. The chain is:
gate probabilities -> QBER -> sifted rate -> I_AB - I_AE -> secret rate.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from . import units
from .config import QBER_CEILING, LinkConfig, Protocol, RamanProfile
from .interference import crosstalk_probability
from .raman import RamanResult, raman_noise


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class GateProbabilities:
    p_mu: float
    p_dc_per_gate: float
    p_ap: float
    p_ram: float
    p_ct: float

    def __post_init__(self) -> None:
        for name, v in asdict(self).items():
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @property
    def noise(self) -> float:
        """Every click not caused by the signal; dark counts come from two detectors."""
        return 2.0 * self.p_dc_per_gate + self.p_ap + self.p_ram + self.p_ct

    @property
    def total(self) -> float:
        return self.p_mu + self.noise


@dataclass(frozen=True)
class QberBreakdown:
    total: float
    opt: float
    det: float
    wdm: float


def optimal_mu(protocol: Protocol | str, transmission_t: float) -> float:
    if not 0 < transmission_t <= 1:
        raise DomainError(f"transmission must lie in (0, 1], got {transmission_t!r}")
    if Protocol.parse(protocol) is Protocol.BB84:
        return transmission_t
    return 2.0 * math.sqrt(transmission_t)


def sifting_factor(protocol: Protocol | str, visibility: float) -> float:
    if Protocol.parse(protocol) is Protocol.BB84:
        return 1.0
    return (2.0 - visibility) / 2.0


def signal_detection_prob(mu: float, t: float, eta: float, bob_loss_db: float) -> float:
    return units.clamp_probability(mu * t * eta * 10.0 ** (-bob_loss_db / 10.0), "p_mu")[0]


def afterpulse_prob(p_ap: float, p_mu: float, p_dc_per_gate: float, p_ram: float, p_ct: float) -> float:
    """Afterpulse clicks per gate, proportional to all primary clicks."""
    return p_ap * (p_mu + 2.0 * p_dc_per_gate + p_ram + p_ct)


def qber(probs: GateProbabilities, visibility: float, beta: float) -> QberBreakdown:
    den = beta * probs.p_mu + probs.noise
    if den <= 0:
        raise DomainError("no detections")
    opt = 0.5 * probs.p_mu * (1.0 - visibility) / den
    det = 0.5 * (2.0 * probs.p_dc_per_gate + probs.p_ap) / den
    wdm = 0.5 * (probs.p_ram + probs.p_ct) / den
    total = 0.5 * (probs.p_mu * (1.0 - visibility) + probs.noise) / den
    return QberBreakdown(total, opt, det, wdm)


def duty_cycle(length_km: float, storage_km: float) -> float:
    den = length_km + 2.0 * storage_km
    if den <= 0:
        raise DomainError("duty cycle undefined for zero fibre and zero storage line")
    return storage_km / den


def sifted_rate(
    probs: GateProbabilities,
    beta: float,
    f_rep: float,
    dead_time_s: float,
    length_km: float,
    storage_km: float,
) -> float:
    accepted = 0.5 * (beta * probs.p_mu + probs.noise)
    blocking = 1.0 + dead_time_s * probs.total * f_rep
    return accepted * f_rep * duty_cycle(length_km, storage_km) / blocking


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"entropy argument must lie in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def mutual_info_ab(qber_value: float, eta_ec: float = 1.2) -> float:
    return max(0.0, 1.0 - eta_ec * binary_entropy(qber_value))


def i_ae_bb84(mu: float, t: float, visibility: float, p_dc_per_gate: float, eta: float) -> float:
    """Eve's information under an optimal coherent attack on BB84.

    Args:
        mu: mean photon number.
        t: fibre transmission.
        visibility: interference visibility.
        p_dc_per_gate: dark count probability per gate.
        eta: effective detection efficiency behind the fibre.
    """
    if not t > 0:
        raise DomainError("t must be > 0")
    if mu > 2.0 * t * (1.0 + 1e-12):
        raise DomainError(f"mu = {mu:.6g} exceeds 2t = {2 * t:.6g}")
    frac = min(mu / (2.0 * t), 1.0)
    if frac < 1.0:
        d = (1.0 - visibility) / (2.0 - mu / t)
        d = min(d, 0.5)  # P saturates at 1 beyond this
        h = binary_entropy(0.5 + math.sqrt(d * (1.0 - d)))
    else:
        h = 0.0
    num = (1.0 - frac) * (1.0 - h) + frac
    den = 1.0 + 2.0 * p_dc_per_gate / (mu * t * eta) if mu > 0 else math.inf
    return min(1.0, num / den)


def i_pns(k: int) -> float:
    if k < 1:
        raise DomainError("k must be >= 1")
    return 1.0 - binary_entropy(0.5 + 0.5 * math.sqrt(1.0 - 2.0 ** (-k)))


def i_ae_sarg(mu: float, t: float) -> float:
    if not (mu > 0 and 0 < t <= 1):
        raise DomainError("need mu > 0 and t in (0, 1]")
    i1 = i_pns(1)
    return min(1.0, i1 + (mu * mu / t) * math.exp(-mu) * (1.0 - i1) / 12.0)


def secret_rate(r_sift: float, i_ab: float, i_ae: float) -> float:
    """R_sift (I_AB - I_AE), floored at zero.

    Equivalent to R_sift (1 - r_ec)(1 - r_pa) with the fractions reported by
    `link_budget`.
    """
    return max(0.0, r_sift * (i_ab - i_ae))


@dataclass(frozen=True)
class LinkBudget:
    length_km: float
    protocol: Protocol
    filters: bool
    mu: float
    transmission: float
    beta: float
    duty_cycle: float
    p_mu: float
    p_ram_f: float
    p_ram_b: float
    p_ct: float
    p_dc_per_gate: float
    p_ap: float
    qber_total: float
    qber_opt: float
    qber_det: float
    qber_wdm: float
    r_sift_hz: float
    i_ab: float
    i_ae: float
    r_sec_hz: float
    r_ec: float
    r_pa: float
    clamped: bool = False

    @property
    def p_ram(self) -> float:
        return self.p_ram_f + self.p_ram_b

    def gate_probabilities(self) -> GateProbabilities:
        return GateProbabilities(self.p_mu, self.p_dc_per_gate, self.p_ap, self.p_ram, self.p_ct)


def link_budget(
    config: LinkConfig,
    length_km: float | None = None,
    profile: RamanProfile | None = None,
    raman_override: tuple[float, float] | None = None,
) -> LinkBudget:
    """Evaluate the full link at one fibre length.

    `length_km` overrides the configured fibre length. `profile` replaces the
    configured Raman profile (already scaled). `raman_override` supplies the
    forward/backward Raman click probabilities directly, bypassing the
    profile; the band comparison uses it.
    """
    if length_km is not None:
        config = config.with_length(length_km)
    fibre, plan, det, proto, filt = config.fibre, config.plan, config.detector, config.protocol, config.filter
    if profile is None and raman_override is None:
        profile = config.profile()

    t = fibre.transmission()
    mu = proto.mean_photon_override if proto.mean_photon_override is not None else optimal_mu(proto.protocol, t)
    signal_loss_db = proto.bob_internal_loss_db + plan.quantum_path_loss_db
    if filt is not None:
        signal_loss_db += filt.insertion_loss_db
    eta_eff = det.efficiency * 10.0 ** (-signal_loss_db / 10.0)
    raw_p_mu = mu * t * eta_eff
    p_mu, clamped = units.clamp_probability(raw_p_mu, "p_mu")

    if raman_override is None:
        ram = raman_noise(plan, fibre, det, profile, filt, proto.bob_internal_loss_db)
    else:
        ram = RamanResult(math.nan, math.nan, *raman_override)
    p_ct = crosstalk_probability(plan, det, filt, proto.bob_internal_loss_db)
    p_dc = det.dark_count_prob_per_gate
    p_ap = afterpulse_prob(det.afterpulse_prob, p_mu, p_dc, ram.prob_total, p_ct)
    probs = GateProbabilities(p_mu, p_dc, min(p_ap, 1.0), ram.prob_total, p_ct)

    beta = sifting_factor(proto.protocol, proto.visibility)
    q = qber(probs, proto.visibility, beta)
    eta_d = duty_cycle(fibre.length_km, proto.storage_line_km)
    r_sift = sifted_rate(probs, beta, proto.pulse_rate_hz, det.dead_time_us * 1e-6,
                         fibre.length_km, proto.storage_line_km)
    i_ab = mutual_info_ab(q.total, proto.error_correction_inefficiency)
    if proto.protocol is Protocol.BB84:
        i_ae = i_ae_bb84(mu, t, proto.visibility, p_dc, eta_eff)
    else:
        i_ae = i_ae_sarg(mu, t)
    r_sec = secret_rate(r_sift, i_ab, i_ae) if q.total <= QBER_CEILING else 0.0

    r_ec = proto.error_correction_inefficiency * binary_entropy(q.total)
    r_pa = 1.0 - (i_ab - i_ae) / (1.0 - r_ec) if r_ec < 1.0 else 1.0
    return LinkBudget(
        length_km=fibre.length_km,
        protocol=proto.protocol,
        filters=filt is not None,
        mu=mu,
        transmission=t,
        beta=beta,
        duty_cycle=eta_d,
        p_mu=p_mu,
        p_ram_f=ram.prob_forward_per_gate,
        p_ram_b=ram.prob_backward_per_gate,
        p_ct=p_ct,
        p_dc_per_gate=p_dc,
        p_ap=probs.p_ap,
        qber_total=q.total,
        qber_opt=q.opt,
        qber_det=q.det,
        qber_wdm=q.wdm,
        r_sift_hz=r_sift,
        i_ab=i_ab,
        i_ae=i_ae,
        r_sec_hz=r_sec,
        r_ec=r_ec,
        r_pa=r_pa,
        clamped=clamped or ram.clamped,
    )
