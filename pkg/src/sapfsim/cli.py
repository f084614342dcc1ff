"""Command line entry point.

    sapfsim [--out-dir DIR] run <config.toml>
    sapfsim analyze <trace.csv> --f0 50 --cycles 10 [--from S --to S]
    sapfsim [--out-dir DIR] compare <config.toml>

Exit codes: 0 success, 2 configuration/input error, 3 simulation blowup.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .analysis import power_metrics, spectrum, thd
from .errors import ConfigurationError, InsufficientDataError, SimulationBlowup, UndefinedMetricError
from .grid import load_config, run
from .grid.trace import SimulationTrace, write_atomic
from .report import regime_windows, summarize

log = logging.getLogger("sapfsim")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


def cmd_run(config_path: str, out_dir: Path) -> int:
    cfg = load_config(config_path)
    trace = run(cfg)
    name = cfg.sim.name
    csv_path = trace.write_csv(out_dir / f"{name}.csv")
    rep = summarize(cfg, trace)
    write_atomic(out_dir / f"{name}.report.txt", rep.to_text())
    sys.stdout.write(rep.to_text())
    log.info("wrote %s", csv_path)
    return EXIT_OK


def _default_channel(trace: SimulationTrace) -> str:
    return "i_source_a" if "i_source_a" in trace else next(iter(trace.channels))


def cmd_analyze(csv_path: str, f0: float, cycles: int, t_from: float | None, t_to: float | None) -> int:
    trace = SimulationTrace.read_csv(csv_path)
    if not trace.channels:
        raise ConfigurationError(f"{csv_path}: no data columns", key="header")
    channel = _default_channel(trace)
    span = cycles / f0
    t_all = trace.t
    t_last = float(t_all[-1]) + trace.dt
    start = t_from if t_from is not None else t_last - span
    stop = t_to if t_to is not None else t_last
    if stop - start < span - 0.5 * trace.dt:
        raise InsufficientDataError(f"window [{start:g}, {stop:g}] s is shorter than {cycles} cycles")
    i0 = max(0, trace.index_of(start))
    i1 = min(len(trace), trace.index_of(stop))
    spec = spectrum(trace[channel][i0:i1], trace.dt, f0, cycles)
    out = [
        f"channel: {channel}",
        f"window: {start:.6f} s .. {start + span:.6f} s ({cycles} cycles at {f0:g} Hz)",
        f"{'order':>5} {'freq_hz':>9} {'magnitude':>12} {'pct_fund':>9}",
    ]
    fund = spec.magnitude[0]
    for h, mag in zip(spec.orders, spec.magnitude):
        pct = 100.0 * mag / fund if fund > 0 else float("nan")
        out.append(f"{h:>5d} {h * f0:>9.2f} {mag:>12.6g} {pct:>9.3f}")
    try:
        out.append(f"THD: {100.0 * thd(spec):.2f}%")
    except UndefinedMetricError:
        out.append("THD: n/a")
    if all(f"v_{k}" in trace for k in "abc") and all(f"i_source_{k}" in trace for k in "abc"):
        n = int(round(span / trace.dt))
        sl = slice(i0, i0 + n)
        if sl.stop <= len(trace):
            try:
                pm = power_metrics(trace.phases("v")[:, sl], trace.phases("i_source")[:, sl], trace.dt, f0)
                out.append(f"P: {pm.p:.1f} W  Q: {pm.q:.1f} var  S: {pm.s:.1f} VA  pf: {pm.pf:.4f}  dpf: {pm.displacement_pf:.4f}")
            except (UndefinedMetricError, InsufficientDataError):
                out.append("P/Q/S/pf: n/a")
    sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK


def cmd_compare(config_path: str, out_dir: Path) -> int:
    from .plotting import plot_engagement_currents, plot_spectra

    cfg = load_config(config_path)
    if not cfg.sapf.enabled:
        raise ConfigurationError("compare needs the SAPF enabled", key="[sapf].enabled")
    trace = run(cfg)
    name = cfg.sim.name
    rep = summarize(cfg, trace)
    pre, post = regime_windows(cfg)
    f0 = cfg.bus.frequency
    out_dir.mkdir(parents=True, exist_ok=True)
    if pre is not None and post is not None:
        plot_spectra(trace, (pre.start, pre.stop), (post.start, post.stop), f0, out_dir / f"{name}.spectrum.svg")
    if cfg.sim.sapf_engage_time < cfg.sim.t_end:
        plot_engagement_currents(trace, cfg.sim.sapf_engage_time, f0, out_dir / f"{name}.currents.svg")
    lines = [f"{'metric':<24}{'without SAPF':>14}{'with SAPF':>14}"]
    for label, a, b, fmt in (
        ("THD source current (%)", rep.thd_pre_pct, rep.thd_post_pct, "{:.3f}"),
        ("P source (kW)", _scale(rep.p_pre_w), _scale(rep.p_post_w), "{:.3f}"),
        ("Q source (kvar)", _scale(rep.q_pre_var), _scale(rep.q_post_var), "{:.3f}"),
        ("S source (kVA)", _scale(rep.s_pre_va), _scale(rep.s_post_va), "{:.3f}"),
        ("power factor", rep.pf_pre, rep.pf_post, "{:.5f}"),
        ("displacement pf", rep.dpf_pre, rep.dpf_post, "{:.5f}"),
    ):
        lines.append(f"{label:<24}{_fmt(a, fmt):>14}{_fmt(b, fmt):>14}")
    ratio = rep.thd_ratio
    lines.append(f"{'THD ratio post/pre':<24}{_fmt(ratio, '{:.4f}'):>28}")
    text = "\n".join(lines) + "\n\n" + rep.to_text()
    write_atomic(out_dir / f"{name}.compare.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def _scale(x, k=1e-3):
    return None if x is None else x * k


def _fmt(x, fmt: str) -> str:
    return "n/a" if x is None else fmt.format(x)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for outputs (default: .)")
    parser = argparse.ArgumentParser(prog="sapfsim", description=__doc__.split("\n\n")[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", parents=[common], help="simulate a scenario, write CSV trace and report")
    p_run.add_argument("config")
    p_an = sub.add_parser("analyze", parents=[common], help="harmonic table and THD of a trace")
    p_an.add_argument("csv")
    p_an.add_argument("--f0", type=float, required=True)
    p_an.add_argument("--cycles", type=int, required=True)
    p_an.add_argument("--from", dest="t_from", type=float, default=None)
    p_an.add_argument("--to", dest="t_to", type=float, default=None)
    p_cmp = sub.add_parser("compare", parents=[common], help="before/after SAPF report and SVG plots")
    p_cmp.add_argument("config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    out_dir = Path(getattr(args, "out_dir", "."))
    try:
        if args.command == "run":
            return cmd_run(args.config, out_dir)
        if args.command == "analyze":
            if args.f0 <= 0 or args.cycles < 2:
                raise ConfigurationError("need --f0 > 0 and --cycles >= 2", key="--cycles")
            return cmd_analyze(args.csv, args.f0, args.cycles, args.t_from, args.t_to)
        return cmd_compare(args.config, out_dir)
    except (ConfigurationError, InsufficientDataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationBlowup as exc:
        print(f"error: simulation blew up at {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
