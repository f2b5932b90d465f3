"""Command-line front end.

Exit codes: 0 success, 1 plan-check violation, 2 usage error,
3 configuration or evaluation error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

from . import __version__
from . import scenario
from .config import SCHEMA_VERSION, ConfigError, LinkConfig, Protocol, dump_config, load_config
from .interference import check_plan_fwm, crosstalk_terms, required_isolation_db
from .keyrate import DomainError, LinkBudget, link_budget
from .montecarlo import simulate
from .raman import WavelengthRangeError

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _load(path: str, protocol: str | None = None, filters: bool = False) -> LinkConfig:
    cfg = load_config(path)
    if protocol:
        cfg = cfg.with_protocol(protocol)
    if filters:
        cfg = cfg.with_filter(True)
    return cfg


def _lengths(lo: float, hi: float, step: float) -> list[float]:
    if not all(math.isfinite(x) for x in (lo, hi, step)):
        raise UsageError("lengths must be finite")
    if lo < 0:
        raise UsageError("--min must be >= 0")
    if lo > hi:
        raise UsageError(f"--min ({lo}) exceeds --max ({hi})")
    if step <= 0:
        raise UsageError("--step must be > 0")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(n)]


def format_budget(b: LinkBudget, cfg: LinkConfig) -> str:
    lines = [
        f"length_km        {b.length_km:g}",
        f"protocol         {b.protocol.value}",
        f"filters          {'yes' if b.filters else 'no'}",
        f"raman_scale      {cfg.raman_scale:.6g}",
        f"mu               {b.mu:.6g}",
        f"transmission     {b.transmission:.6g}",
        "",
        "per-gate probabilities",
        f"  p_mu           {b.p_mu:.4e}",
        f"  p_ram_f        {b.p_ram_f:.4e}",
        f"  p_ram_b        {b.p_ram_b:.4e}",
        f"  p_ct           {b.p_ct:.4e}",
        f"  p_dc_gate      {b.p_dc_per_gate:.4e}",
        f"  p_ap           {b.p_ap:.4e}",
        "",
        f"qber             {100 * b.qber_total:.3f} %",
        f"  opt            {100 * b.qber_opt:.3f} %",
        f"  det            {100 * b.qber_det:.3f} %",
        f"  wdm            {100 * b.qber_wdm:.3f} %",
        f"r_sift           {b.r_sift_hz:.2f} Hz",
        f"i_ab             {b.i_ab:.5f}",
        f"i_ae             {b.i_ae:.5f}",
        f"r_ec (eff.)      {b.r_ec:.5f}",
        f"r_pa (eff.)      {b.r_pa:.5f}",
        f"r_sec            {b.r_sec_hz:.2f} bps",
    ]
    if b.clamped:
        lines.append("warning: a probability was clamped to 1")
    return "\n".join(lines)


def cmd_budget(args) -> int:
    cfg = _load(args.config, args.protocol, args.filters)
    print(format_budget(link_budget(cfg, args.length), cfg))
    return EXIT_OK


def cmd_sweep(args) -> int:
    lengths = _lengths(args.min, args.max, args.step)
    cfg = _load(args.config, args.protocol, args.filters)
    scenario.write_csv(scenario.sweep_length(cfg, lengths), args.out)
    print(f"wrote {len(lengths)} rows to {args.out}")
    return EXIT_OK


def cmd_plan_check(args) -> int:
    cfg = _load(args.config)
    rep = check_plan_fwm(cfg.plan, cfg.fibre)
    print(f"fibre length       {cfg.fibre.length_km:g} km")
    print(f"passband           {cfg.plan.passband_ghz:.2f} GHz")
    print("degenerate FWM products (offset GHz):")
    for direction, prod in rep.products:
        print(f"  {direction.value:<13} {prod:+.1f}")
    if rep.violations:
        for v in rep.violations:
            print(f"VIOLATION: pair {v.pair[0]:+g}/{v.pair[1]:+g} GHz ({v.direction.value}) "
                  f"-> product {v.product_offset_ghz:+.1f} GHz inside passband")
    else:
        print("no FWM product inside the quantum passband")
    print(f"gamma*P0*L_eff     {rep.gamma_p0_l:.3e} (P0 = {rep.p0_w:.3e} W)")
    print(f"spontaneous FWM    {'negligible' if rep.spontaneous_negligible else 'NOT negligible'}")
    print("crosstalk:")
    det, loss = cfg.detector, cfg.protocol.bob_internal_loss_db
    for t in crosstalk_terms(cfg.plan, det, cfg.filter, loss):
        need = required_isolation_db(
            cfg.plan.fibre_output_power_dbm(t.channel), cfg.plan.channel_wavelength_nm(t.channel),
            det.dark_count_prob_per_gate, det.efficiency, loss, det.gate_width_ns,
        )
        print(f"  {t.channel.offset_ghz_from_quantum:+7.1f} GHz  isolation {t.isolation_db:5.1f} dB"
              f"  needed {need:5.1f} dB  p_ct {t.probability:.3e}")
    if rep.violations:
        print(f"error: {len(rep.violations)} FWM product(s) inside the quantum passband", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_mc(args) -> int:
    if args.gates < 1:
        raise UsageError("--gates must be >= 1")
    if args.chunks < 1:
        raise UsageError("--chunks must be >= 1")
    cfg = _load(args.config, args.protocol, args.filters)
    res = simulate(cfg, args.length, args.gates, args.seed, chunks=args.chunks, poisson=args.poisson)
    b = link_budget(cfg, args.length)
    se_q, se_r = res.standard_errors["qber"], res.standard_errors["r_sift_hz"]
    z_q = (res.empirical_qber - b.qber_total) / se_q if se_q > 0 else math.nan
    z_r = (res.empirical_r_sift_hz - b.r_sift_hz) / se_r if se_r > 0 else math.nan
    print(f"mode             {'poisson' if args.poisson else 'matched'}")
    print(f"gates            {res.gates_simulated}")
    print(f"seed             {args.seed}")
    print(f"detections       {res.detections}")
    print(f"sifted           {res.sifted}")
    print(f"errors           {res.errors}")
    print(f"qber             {res.empirical_qber:.6f} +- {se_q:.6f}  analytic {b.qber_total:.6f}  z {z_q:+.2f}")
    print(f"r_sift_hz        {res.empirical_r_sift_hz:.4f} +- {se_r:.4f}  analytic {b.r_sift_hz:.4f}  z {z_r:+.2f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write("length_km,protocol,gates,seed,detections,sifted,errors,qber,qber_se,qber_analytic,"
                     "r_sift_hz,r_sift_se,r_sift_analytic\n")
            fh.write(f"{args.length:.17e},{b.protocol.value},{res.gates_simulated},{args.seed},{res.detections},"
                     f"{res.sifted},{res.errors},{res.empirical_qber:.17e},{se_q:.17e},{b.qber_total:.17e},"
                     f"{res.empirical_r_sift_hz:.17e},{se_r:.17e},{b.r_sift_hz:.17e}\n")
    return EXIT_OK


def cmd_compare_bands(args) -> int:
    lengths = _lengths(args.min, args.max, args.step)
    c1550 = load_config(args.config1550)
    c1310 = load_config(args.config1310)
    cmp = scenario.compare_bands(c1550, c1310, lengths)
    body_1550 = scenario.format_csv(cmp.rows_1550).splitlines()
    body_1310 = scenario.format_csv(cmp.rows_1310).splitlines()
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("band," + body_1550[0] + "\n")
        for line in body_1550[1:]:
            fh.write("1550," + line + "\n")
        for line in body_1310[1:]:
            fh.write("1310," + line + "\n")
    d1550, d1310 = scenario.band_max_distance(c1550, c1310)
    print(f"max distance at >= {scenario.MIN_KEY_RATE_BPS} bps: 1550 {d1550:.2f} km, 1310 {d1310:.2f} km")
    prev = None
    for L, better in zip(cmp.lengths_km, cmp.better_band):
        if better != prev:
            print(f"from {L:g} km: {better}")
            prev = better
    return EXIT_OK


def cmd_calibrate(args) -> int:
    if not 0 < args.qber < 0.5:
        raise UsageError("--qber must lie in (0, 0.5)")
    cfg = _load(args.config)
    s = scenario.calibrate_rho(cfg, args.qber, args.length)
    out = replace(cfg, raman_scale=cfg.raman_scale * s)
    dump_config(out, args.out)
    print(f"scale factor     {s:.12g}")
    print(f"raman_scale      {out.raman_scale:.12g}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_preset(args) -> int:
    dump_config(scenario.preset(args.name, calibrate=not args.uncalibrated), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qkdwdm", description="QKD link model for fibres shared with DWDM channels")
    p.add_argument("--version", action="version",
                   version=f"qkdwdm {__version__} (config schema {SCHEMA_VERSION})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def proto_opts(sp):
        sp.add_argument("--protocol", type=str.upper, choices=[x.value for x in Protocol])
        sp.add_argument("--filters", action="store_true", help="insert the narrowband filter")

    sp = sub.add_parser("budget", help="link budget at one length")
    sp.add_argument("--config", required=True)
    sp.add_argument("--length", type=float, required=True)
    proto_opts(sp)
    sp.set_defaults(func=cmd_budget)

    sp = sub.add_parser("sweep", help="CSV sweep over fibre length")
    sp.add_argument("--config", required=True)
    sp.add_argument("--min", type=float, required=True)
    sp.add_argument("--max", type=float, required=True)
    sp.add_argument("--step", type=float, required=True)
    sp.add_argument("--out", required=True)
    proto_opts(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("plan", help="channel plan tools")
    plan_sub = sp.add_subparsers(dest="plan_command", required=True, parser_class=_Parser)
    check = plan_sub.add_parser("check", help="FWM and crosstalk check")
    check.add_argument("--config", required=True)
    check.set_defaults(func=cmd_plan_check)

    sp = sub.add_parser("mc", help="Monte Carlo oracle run")
    sp.add_argument("--config", required=True)
    sp.add_argument("--length", type=float, required=True)
    sp.add_argument("--gates", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--chunks", type=int, default=1)
    sp.add_argument("--poisson", action="store_true", help="Poissonian sources with double clicks")
    sp.add_argument("--csv", help="also write a one-row CSV")
    proto_opts(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("compare-bands", help="1550 vs 1310 quantum channel")
    sp.add_argument("--config1550", required=True)
    sp.add_argument("--config1310", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--min", type=float, default=0.0)
    sp.add_argument("--max", type=float, default=100.0)
    sp.add_argument("--step", type=float, default=1.0)
    sp.set_defaults(func=cmd_compare_bands)

    sp = sub.add_parser("calibrate", help="fit the Raman scale to an observed QBER")
    sp.add_argument("--config", required=True)
    sp.add_argument("--qber", type=float, required=True, help="observed QBER as a fraction")
    sp.add_argument("--length", type=float, required=True)
    sp.add_argument("--out", required=True, help="config file to write with the fitted scale")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("preset", help="write a named configuration")
    sp.add_argument("name", choices=scenario.PRESET_NAMES)
    sp.add_argument("--out", required=True)
    sp.add_argument("--uncalibrated", action="store_true", help="keep raman_scale = 1")
    sp.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WavelengthRangeError as exc:
        print(f"error: {exc} (1310 nm configurations are evaluated through compare-bands)", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, DomainError, scenario.CalibrationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
