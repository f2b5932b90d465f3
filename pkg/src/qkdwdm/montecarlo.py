"""Gate-by-gate detection simulator used as an oracle for the analytic chain.

Gates are generated in fixed-size blocks, each with its own generator seeded
from (seed, block index). Block results do not depend on how blocks are
spread over worker threads, and the dead-time scan runs once over the merged
candidate clicks. A run is therefore bit-identical for any chunk count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import LinkConfig
from .keyrate import link_budget

DEFAULT_BLOCK = 1 << 20

# click categories
SIGNAL, DARK, RAMAN, CROSSTALK, AFTERPULSE = range(5)


def split_seed(seed: int, chunk_index: int) -> int:
    """Independent 64-bit seed for one block of a run."""
    state = np.random.SeedSequence([int(seed) & (2**64 - 1), int(chunk_index)]).generate_state(2, np.uint64)
    return int(state[0]) << 64 | int(state[1])


@dataclass(frozen=True)
class McResult:
    gates_simulated: int
    detections: int
    sifted: int
    errors: int
    empirical_qber: float
    empirical_r_sift_hz: float
    standard_errors: dict = field(default_factory=dict)
    candidates: int = 0
    per_source: tuple = ()

    def __post_init__(self) -> None:
        if not (0 <= self.errors <= self.sifted <= self.detections <= self.gates_simulated):
            raise ValueError("count ordering violated")


@dataclass(frozen=True)
class _Params:
    probs: tuple  # per category, in category order
    sift: tuple
    err: tuple
    dead_gates: int
    poisson: bool


def _block(params: _Params, seed: int, index: int, start: int, size: int):
    rng = np.random.default_rng(split_seed(seed, index))
    p = np.asarray(params.probs)
    if params.poisson:
        # Independent sources, Poissonian in each: P(click) = 1 - exp(-p).
        fire = rng.random((size, p.size)) < -np.expm1(-p)
        n_fired = fire.sum(axis=1)
        cand = np.flatnonzero(n_fired)
        cat = np.argmax(fire[cand], axis=1)
        # Simultaneous clicks leave a random bit.
        cat = np.where(n_fired[cand] > 1, DARK, cat)
    else:
        u = rng.random(size)
        edges = np.cumsum(p)
        cand = np.flatnonzero(u < edges[-1])
        cat = np.searchsorted(edges, u[cand], side="right")
    v = rng.random(cand.size)
    w = rng.random(cand.size)
    sift = v < np.asarray(params.sift)[cat]
    err = sift & (w < np.asarray(params.err)[cat])
    return cand.astype(np.int64) + start, cat.astype(np.int8), sift, err


def _dead_time_accept(gates: np.ndarray, dead: int) -> np.ndarray:
    """Indices into `gates` (sorted) that survive a blanking of `dead` gates."""
    if dead <= 0 or gates.size == 0:
        return np.arange(gates.size)
    keep = []
    i = 0
    n = gates.size
    while i < n:
        keep.append(i)
        i = int(np.searchsorted(gates, gates[i] + dead + 1, side="left"))
    return np.asarray(keep, dtype=np.int64)


def gate_model(config: LinkConfig, length_km: float):
    """Per-category probabilities and outcome statistics matching `link_budget`."""
    b = link_budget(config, length_km)
    v = config.protocol.visibility
    probs = (b.p_mu, 2.0 * b.p_dc_per_gate, b.p_ram, b.p_ct, b.p_ap)
    # A sifted signal bit is wrong with probability (1 - V) / (2 beta);
    # noise clicks are sifted half the time and then wrong half the time.
    sift = (b.beta / 2.0, 0.5, 0.5, 0.5, 0.5)
    err = ((1.0 - v) / (2.0 * b.beta), 0.5, 0.5, 0.5, 0.5)
    return b, probs, sift, err


def simulate(
    config: LinkConfig,
    length_km: float,
    n_gates: int,
    seed: int,
    chunks: int = 1,
    block_size: int = DEFAULT_BLOCK,
    poisson: bool = False,
    dead_time: bool = True,
) -> McResult:
    """Simulate `n_gates` detector gates.

    Args:
        config: link configuration.
        length_km: fibre length.
        n_gates: number of gates, >= 1.
        seed: run seed.
        chunks: worker threads; does not change the result.
        block_size: gates per independently seeded block.
        poisson: independent Poissonian sources with double clicks instead
            of the single-click Bernoulli model the analytic formulas assume.
        dead_time: apply detector blanking after each accepted click.
    """
    if n_gates < 1:
        raise ValueError("n_gates must be >= 1")
    if chunks < 1:
        raise ValueError("chunks must be >= 1")
    b, probs, sift, err = gate_model(config, length_km)
    det = config.detector
    f_rep = config.protocol.pulse_rate_hz
    dead = int(round(det.dead_time_us * 1e-6 * f_rep)) if dead_time else 0
    params = _Params(probs, sift, err, dead, poisson)

    starts = list(range(0, n_gates, block_size))
    jobs = [(i, s, min(block_size, n_gates - s)) for i, s in enumerate(starts)]
    if chunks == 1 or len(jobs) == 1:
        parts = [_block(params, seed, *job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=chunks) as pool:
            parts = list(pool.map(lambda job: _block(params, seed, *job), jobs))

    gates = np.concatenate([p[0] for p in parts])
    cats = np.concatenate([p[1] for p in parts])
    sifted_flags = np.concatenate([p[2] for p in parts])
    err_flags = np.concatenate([p[3] for p in parts])
    keep = _dead_time_accept(gates, dead)

    detections = int(keep.size)
    n_sift = int(sifted_flags[keep].sum())
    n_err = int(err_flags[keep].sum())
    per_source = tuple(int(x) for x in np.bincount(cats[keep], minlength=5))

    duty = b.duty_cycle
    qber = n_err / n_sift if n_sift else math.nan
    r_sift = n_sift / n_gates * f_rep * duty

    # Standard errors. Detections form a renewal process with a geometric
    # wait plus `dead` blocked gates; sifting thins it independently.
    p_tot = float(sum(probs))
    if poisson:
        p_tot = float(1.0 - np.prod(np.exp(-np.asarray(probs))))
    se_q = math.sqrt(qber * (1 - qber) / n_sift) if n_sift else math.nan
    if p_tot > 0:
        mean_gap = dead + 1.0 / p_tot
        var_gap = (1.0 - p_tot) / p_tot**2
        var_det = n_gates * var_gap / mean_gap**3
        a = n_sift / detections if detections else 0.0
        var_sift = a * a * var_det + detections * a * (1 - a)
        se_r = math.sqrt(var_sift) / n_gates * f_rep * duty
    else:
        se_r = 0.0
    return McResult(
        gates_simulated=n_gates,
        detections=detections,
        sifted=n_sift,
        errors=n_err,
        empirical_qber=qber,
        empirical_r_sift_hz=r_sift,
        standard_errors={"qber": se_q, "r_sift_hz": se_r},
        candidates=int(gates.size),
        per_source=per_source,
    )


def merge_results(results, f_rep_duty: float) -> McResult:
    """Pool counts from independent runs of the same link.

    `f_rep_duty` is pulse rate times duty cycle, used to turn the pooled
    sifted fraction back into a rate. Pooling is associative and
    order-independent.
    """
    results = list(results)
    gates = sum(r.gates_simulated for r in results)
    det = sum(r.detections for r in results)
    sifted = sum(r.sifted for r in results)
    errors = sum(r.errors for r in results)
    qber = errors / sifted if sifted else math.nan
    var_r = sum((r.standard_errors.get("r_sift_hz", 0.0) * r.gates_simulated) ** 2 for r in results)
    return McResult(
        gates_simulated=gates,
        detections=det,
        sifted=sifted,
        errors=errors,
        empirical_qber=qber,
        empirical_r_sift_hz=sifted / gates * f_rep_duty,
        standard_errors={
            "qber": math.sqrt(qber * (1 - qber) / sifted) if sifted else math.nan,
            "r_sift_hz": math.sqrt(var_r) / gates,
        },
        candidates=sum(r.candidates for r in results),
        per_source=tuple(sum(x) for x in zip(*(r.per_source for r in results))) if results else (),
    )
