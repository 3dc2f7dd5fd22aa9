"""Command line front end.

Subcommands:
  simulate  run a scenario file or preset, write trace.csv + summary.json
  analyze   sequence/circularity report over trace windows
  margins   loop-gain margin report (and optional Bode table) for the
            balancer voltage loop
  fuse      Joule-integral fuse sizing report
  nof       normalized overhead factor of a device rating sheet

Exit codes: 0 success, 2 invalid input, 3 simulation aborted,
4 requested acceptance check failed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import analysis, presets
from .design import fuse as fuse_design
from .design import loopshape, ratings
from .harness import SimulationAborted, run_scenario
from .scenario import ScenarioError, load_scenario
from .trace import TraceFormatError, read_trace

# published postfault targets checked by `analyze --check`
_CHECK_MAX_NEG_OVER_POS = 0.05
_CHECK_MAX_CIRCULARITY = 1.10
_CHECK_PHASE_RATIO = (1.64, 1.78)
_CHECK_MIN_IMPROVEMENT = 10.0


def _fail(msg: str, code: int = 2) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _write_json(doc, path: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_simulate(args) -> int:
    if args.list_presets:
        for name in sorted(presets.PRESETS):
            print(name)
        return 0
    if not args.scenario:
        return _fail("a scenario file or preset name is required")
    try:
        if os.path.exists(args.scenario):
            scn = load_scenario(args.scenario)
        elif args.scenario in presets.PRESETS:
            scn = presets.preset(args.scenario)
        else:
            return _fail(f"no such scenario file or preset: "
                         f"{args.scenario!r}")
    except (ScenarioError, ValueError, OSError, json.JSONDecodeError) as e:
        return _fail(str(e))
    os.makedirs(args.out, exist_ok=True)
    trace_path = os.path.join(args.out, "trace.csv")
    summary_path = os.path.join(args.out, "summary.json")
    try:
        trace, summary = run_scenario(scn)
    except SimulationAborted as e:
        if e.partial_trace is not None:
            e.partial_trace.write_csv(trace_path)
        return _fail(str(e), code=3)
    trace.write_csv(trace_path)
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    det = summary.get("first_detection")
    print(f"{scn.name}: {summary['sim_steps']} steps -> {trace_path}")
    if det:
        print(f"  {det['device']} detected {det['latency_s'] * 1e3:.2f} ms "
              f"after the fault")
    for ev in summary["fuse_events"]:
        print(f"  leg {ev['leg']} fuse cleared in "
              f"{ev['clearing_time'] * 1e3:.3f} ms")
    return 0


def _parse_window(text: str) -> tuple[float, float]:
    t0, _, t1 = text.partition(":")
    lo, hi = float(t0), float(t1)
    if not lo < hi:
        raise ValueError(f"bad window {text!r}: need t0 < t1")
    return (lo, hi)


def _cmd_analyze(args) -> int:
    try:
        prefault = _parse_window(args.prefault)
        postfault = _parse_window(args.postfault)
        trace = read_trace(args.trace)
        no_strategy = (read_trace(args.no_strategy)
                       if args.no_strategy else None)
        ns_window = (_parse_window(args.no_strategy_window)
                     if args.no_strategy_window else None)
        report = analysis.negative_sequence_report(
            trace, prefault, postfault, no_strategy_trace=no_strategy,
            no_strategy_window=ns_window)
        circ_pre = analysis.flux_locus_circularity(trace, prefault)
        circ_post = analysis.flux_locus_circularity(trace, postfault)
    except (TraceFormatError, analysis.InsufficientData, ValueError,
            OSError) as e:
        return _fail(str(e))
    doc = report.to_dict()
    doc["prefault_circularity"] = circ_pre
    doc["postfault_circularity"] = circ_post
    checks = None
    if args.check:
        post = report.postfault
        ratio_lo, ratio_hi = _CHECK_PHASE_RATIO
        checks = {
            "neg_over_pos": post.neg_over_pos <= _CHECK_MAX_NEG_OVER_POS,
            "circularity": circ_post <= _CHECK_MAX_CIRCULARITY,
        }
        if report.remaining_phase_ratio is not None:
            checks["remaining_phase_ratio"] = (
                ratio_lo <= report.remaining_phase_ratio <= ratio_hi)
        if report.improvement_ratio is not None:
            checks["improvement"] = (report.improvement_ratio
                                     >= _CHECK_MIN_IMPROVEMENT)
        doc["checks"] = checks
    _write_json(doc, args.out)
    if checks is not None and not all(checks.values()):
        failed = ", ".join(k for k, ok in checks.items() if not ok)
        return _fail(f"checks failed: {failed}", code=4)
    return 0


def _cmd_margins(args) -> int:
    try:
        with open(args.params) as fh:
            doc = json.load(fh)
        scan = doc.pop("scan", {})
        f_lo = float(scan.get("f_lo", 1.0))
        f_hi = float(scan.get("f_hi", 1e6))
        p = loopshape.LoopGainParams(**doc)
        tf = loopshape.loop_gain(p)
        rep = loopshape.margins(tf, f_lo, f_hi)
    except (OSError, json.JSONDecodeError, TypeError, ValueError,
            loopshape.NoCrossover) as e:
        return _fail(str(e))
    if args.bode:
        rows = loopshape.bode_table(tf, f_lo, f_hi)
        with open(args.bode, "w", newline="\n") as fh:
            fh.write("f_hz,magnitude_db,phase_deg\n")
            for f, mag, ph in rows:
                fh.write(f"{f!r},{mag!r},{ph!r}\n")
    _write_json({
        "gain_margin_db": rep.gain_margin_db,
        "phase_margin_deg": rep.phase_margin_deg,
        "gain_crossover_hz": rep.gain_crossover_hz,
        "phase_crossover_hz": rep.phase_crossover_hz,
        "multiple_crossovers": rep.multiple_crossovers,
    }, args.out)
    return 0


def _cmd_fuse(args) -> int:
    try:
        with open(args.params) as fh:
            doc = json.load(fh)
        if "L" in doc and "C" in doc:
            p = fuse_design.fuse_params_from_circuit_literal(
                Vdc=doc["Vdc"], Rf=doc["Rf"], L=doc["L"], C=doc["C"])
        else:
            p = fuse_design.FuseDesignParams(
                Vdc=doc["Vdc"], Rf=doc["Rf"], alpha=doc["alpha"],
                omega_d=doc["omega_d"])
        curve = (fuse_design.WithstandCurve.from_csv(args.withstand)
                 if args.withstand
                 else fuse_design.WithstandCurve.placeholder())
        catalog = (tuple(float(x) for x in args.catalog.split(","))
                   if args.catalog else fuse_design.DEFAULT_CATALOG)
        t0 = args.design_time
        nominal = fuse_design.nominal_melt_energy(t0, p, curve)
        selected = fuse_design.select_fuse(nominal, catalog)
        t_blow = fuse_design.blow_time(selected, p)
    except (KeyError, TypeError) as e:
        return _fail(f"bad fuse parameter file: missing {e}")
    except (OSError, json.JSONDecodeError, ValueError) as e:
        return _fail(str(e))
    _write_json({
        "alpha": p.alpha, "omega_d": p.omega_d, "Vdc": p.Vdc, "Rf": p.Rf,
        "design_time_s": t0,
        "joule_integral_a2s": fuse_design.joule_integral(t0, p),
        "withstand_factor": curve.interpolate(t0),
        "nominal_i2t_a2s": nominal,
        "selected_i2t_a2s": selected,
        "blow_time_s": t_blow,
    }, args.out)
    return 0


def _cmd_nof(args) -> int:
    try:
        sheet = ratings.read_rating_sheet(args.sheet)
        if args.baseline_sheet:
            base = ratings.read_rating_sheet(args.baseline_sheet)
            baseline = base.total_effort()
        else:
            baseline = ratings.six_switch_baseline(args.v_bus, args.i_peak)
        value = ratings.nof(sheet, baseline)
    except (OSError, KeyError, ValueError) as e:
        return _fail(str(e))
    _write_json({
        "sheet": args.sheet,
        "total_effort_va": sheet.total_effort(),
        "baseline_effort_va": baseline,
        "nof": value,
    }, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ftdrive",
        description="Fault-tolerant converter-fed drive simulator and "
                    "design calculators.")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate",
                         help="run a scenario file or preset name")
    sim.add_argument("scenario", nargs="?",
                     help="scenario JSON path or preset name")
    sim.add_argument("-o", "--out", default=".",
                     help="output directory (default: current)")
    sim.add_argument("--list-presets", action="store_true",
                     help="list preset names and exit")
    sim.set_defaults(func=_cmd_simulate)

    ana = sub.add_parser("analyze",
                         help="sequence and flux-locus report over "
                              "trace windows")
    ana.add_argument("trace", help="trace CSV from simulate")
    ana.add_argument("--prefault", required=True, metavar="T0:T1")
    ana.add_argument("--postfault", required=True, metavar="T0:T1")
    ana.add_argument("--no-strategy", metavar="TRACE",
                     help="matching run without reconfiguration, for the "
                          "unbalance improvement ratio")
    ana.add_argument("--no-strategy-window", metavar="T0:T1",
                     help="window for the no-strategy trace (default: the "
                          "postfault window); place it right after the "
                          "fault when the unreconfigured drive stalls")
    ana.add_argument("-o", "--out", help="write the JSON report here")
    ana.add_argument("--check", action="store_true",
                     help="enforce the published postfault bounds "
                          "(exit 4 on failure)")
    ana.set_defaults(func=_cmd_analyze)

    mar = sub.add_parser("margins",
                         help="loop-gain margins from a parameter file")
    mar.add_argument("params", help="JSON file of loop-gain parameters")
    mar.add_argument("-o", "--out", help="write the JSON report here")
    mar.add_argument("--bode", metavar="CSV",
                     help="also write a Bode table CSV")
    mar.set_defaults(func=_cmd_margins)

    fus = sub.add_parser("fuse", help="Joule-integral fuse sizing")
    fus.add_argument("params",
                     help="JSON with Vdc, Rf and either alpha/omega_d "
                          "or L/C")
    fus.add_argument("--withstand", metavar="CSV",
                     help="withstand curve (time_s,fw); placeholder "
                          "curve when omitted")
    fus.add_argument("--catalog",
                     help="comma-separated I2t ratings; standard catalog "
                          "when omitted")
    fus.add_argument("--design-time", type=float, default=1e-3,
                     metavar="T0", help="sizing time point [s] "
                                        "(default 1e-3)")
    fus.add_argument("-o", "--out", help="write the JSON report here")
    fus.set_defaults(func=_cmd_fuse)

    nf = sub.add_parser("nof",
                        help="normalized overhead factor of a rating sheet")
    nf.add_argument("sheet", help="rating sheet CSV")
    nf.add_argument("--baseline-sheet", metavar="CSV",
                    help="use this sheet's effort as the baseline")
    nf.add_argument("--v-bus", type=float, default=300.0,
                    help="baseline bus voltage [V] (default 300)")
    nf.add_argument("--i-peak", type=float, default=15.0,
                    help="baseline peak current [A] (default 15)")
    nf.add_argument("-o", "--out", help="write the JSON report here")
    nf.set_defaults(func=_cmd_nof)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
