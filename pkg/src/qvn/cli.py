"""qvn command line.

Numeric results go to stdout as one JSON document (or to ``--out``).
Exit codes: 0 success, 1 invalid input, 2 file I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import models, physics, pipeline, species
from .core import MachineParams, load_circuit, load_layout, load_params, resource_table
from .errors import QvnError

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2

CIRCUIT_HELP = ('circuit JSON: [{"op":"cx","q":[0,1]},{"op":"h","q":[2]},'
                '{"op":"measure","q":[2]},{"op":"init","q":[2]}] or '
                '{"n_qubits":N,"ops":[...],"qubit_map":{"q":[zone,col,row]}}')


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        raise UsageError(message)


def _emit(args, payload):
    text = json.dumps(payload, indent=2, default=_json_default) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if hasattr(o, "to_dict"):
        return o.to_dict()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _params(path) -> MachineParams:
    return load_params(path) if path else MachineParams()


# ---------------------------------------------------------------- commands

def cmd_estimate(args):
    layout = load_layout(args.layout)
    if args.emit_layout:
        Path(args.emit_layout).write_text(json.dumps(layout.to_dict(), indent=1))
    _emit(args, resource_table(layout).to_dict())


def _simulate_one(layout_ref, circuit_path, params_path, seed):
    from .sim import run

    trace, metrics = run(load_layout(layout_ref), load_circuit(circuit_path),
                         _params(params_path), seed)
    return seed, trace, metrics


def cmd_simulate(args):
    from .sim import emit_trace

    seeds = [int(s) for s in str(args.seed).split(",")]
    jobs = [(args.layout, args.circuit, args.params, s) for s in seeds]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_simulate_one, *zip(*jobs)))
    else:
        results = [_simulate_one(*j) for j in jobs]
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    report = {}
    for seed, trace, metrics in results:
        tag = f"seed{seed}" if len(results) > 1 else "trace"
        if out_dir:
            for fmt in args.formats.split(","):
                ext = {"jsonl": "jsonl", "csv": "csv", "svg": "svg", "svg_timeline": "svg"}[fmt]
                emit_trace(trace, out_dir / f"{tag}.{ext}", fmt)
            if args.plot:
                from .plotting import timeline_figure

                timeline_figure(trace, out_dir / f"{tag}_timeline.png")
        report[str(seed)] = metrics.to_dict()
    _emit(args, report[str(seeds[0])] if len(seeds) == 1 else report)


def cmd_plot_timeline(args):
    from .plotting import timeline_figure
    from .sim import Event, EventTrace

    events, labels, zones = [], [], []
    with open(args.trace, encoding="utf-8") as fh:
        for line in fh:
            d = json.loads(line)
            extra = {k: v for k, v in d.items()
                     if k not in ("t", "seq", "kind", "subject", "zone", "dur")}
            ev = Event(round(d["t"] * 1e9), d["seq"], d["kind"], tuple(d["subject"]),
                       d.get("zone"), round(d.get("dur", 0) * 1e9), extra)
            events.append(ev)
            if ev.kind == "StageEnter" and ev.data["stage"] not in labels:
                labels.append(ev.data["stage"])
            if ev.kind == "DetectStart" and ev.zone not in zones:
                zones.append(ev.zone)
    order = {}
    for e in events:
        if e.kind == "StageEnter":
            order.setdefault(e.data["stage"], e.data["index"])
    labels.sort(key=order.get)
    timeline_figure(EventTrace(events, labels, sorted(zones)), args.out)
    _emit(argparse.Namespace(out=None), {"figure": str(args.out), "events": len(events)})


def cmd_model(args):
    m = args.model
    if m == "shor":
        model = models.ShorModel(models.ShorArch(args.arch), args.clock)
        out = {"arch": args.arch, "n": args.n, "clock_Hz": args.clock,
               "steps": models.shor_steps(args.arch, args.n),
               "time_s": models.shor_time(model, args.n),
               "qubits": models.shor_qubits(model, args.n)}
        if args.plot:
            from .plotting import shor_figure

            out["figure"] = str(shor_figure(args.plot))
    elif m == "kappa":
        if args.fraction is not None:
            k = models.kappa(models.KappaInputs(args.coherence, args.fraction, args.cycle))
            out = {"kappa": k}
        else:
            out = models.kappa_range(args.coherence, args.cycle)
    elif m == "rent":
        out = {"pins": models.rent_pins(models.RentParams(args.K, args.B, args.r))}
    elif m == "throughput":
        out = models.machine_throughput(_params(args.params))
    elif m == "syndrome":
        out = models.syndrome_sweep(args.n, args.t2q, ceil_blocks=args.ceil_blocks)
    elif m == "lo":
        out = {"fractional_stability": models.lo_stability_required(args.freq, args.time)}
    elif m == "dacram":
        out = {"bytes": models.dac_ram_requirement(args.duration, args.period, args.bits,
                                                   args.waveforms)}
    elif m == "steane":
        out = {"cycle_per_qubit_s": models.steane_cycle(args.t2q, args.tc)}
    elif m == "pipeline":
        cfg = pipeline.default_pipeline(args.qip, pipeline.Variant(args.variant))
        out = {"config": cfg.to_dict(), **pipeline.pipeline_metrics(cfg).to_dict()}
    else:  # detection
        ghz = pipeline.ghz_generation_time(args.ancillas, args.t2q)
        budget = pipeline.detection_budget(pipeline.DetectionBudget(n_ghz_ancillas=args.ancillas))
        out = {"ghz_time_s": ghz,
               "detection_zones": pipeline.required_detection_zones(ghz, args.interval),
               **budget}
    _emit(args, out)


def cmd_physics(args):
    p = args.physics
    if p == "coil":
        coils = physics.CoilSystem(physics.CoilKind(args.kind))
        ratio = physics.homogeneous_sphere_radius(coils, args.tol)
        out = {"kind": args.kind, "tolerance": args.tol, "radius_ratio": ratio}
        if args.diagonal:
            out["required_radius_m"] = (args.diagonal / 2) / ratio
        if args.plot:
            from .plotting import coil_figure

            out["figure"] = str(coil_figure(args.plot))
    elif p == "vacuum":
        out = {"collisions_per_s": physics.collision_rate(args.ions, args.pressure)}
        if args.gas:
            out["sublimation_pressure_mbar"] = physics.sublimation_pressure(args.gas,
                                                                           args.temperature)
    elif p == "capacitance":
        c = physics.plate_capacitance(args.area, args.thickness, args.eps)
        out = {"plate_capacitance_F": c}
        if args.c_shunt is not None and args.c_seg is not None:
            old = physics.CapacitanceModel.old_geometry(args.c_shunt, args.c_seg, args.eps)
            new = physics.CapacitanceModel.new_geometry(args.c_shunt, args.c_seg, c, args.eps)
            out["shunt_ratio_old"] = physics.shunt_ratio(old)
            out["shunt_ratio_new"] = physics.shunt_ratio(new)
    elif p == "clock":
        out = {"shift_Hz": physics.clock_shift(args.sensitivity, args.dB)}
    else:  # beam
        out = {"power_W": physics.beam_power_scaling(args.power, args.w_ref, args.w_new)}
    _emit(args, out)


def cmd_species(args):
    opts = species.TripleOptions() if not args.plain else species.PLAIN_FILTER
    triples = species.enumerate_triples(args.surface, args.max_ratio, opts)
    _emit(args, {"surface": args.surface, "max_ratio": args.max_ratio,
                 "triples": [t.to_dict() for t in triples],
                 "be_excluded": species.be_exclusion_check(args.surface, args.max_ratio, opts)})


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qvn", description="Trapped-ion QCCD architecture estimator and simulator")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def out_flag(p):
        p.add_argument("--out", help="write the JSON result here instead of stdout")

    p = sub.add_parser("estimate", help="resource table of a layout")
    p.add_argument("--layout", default="preset:quantum4004")
    p.add_argument("--emit-layout", help="also write the normalised layout JSON")
    out_flag(p)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("simulate", help="run a circuit", epilog=CIRCUIT_HELP)
    p.add_argument("--layout", default="preset:quantum4004")
    p.add_argument("--circuit", required=True)
    p.add_argument("--params")
    p.add_argument("--seed", default="0", help="seed or comma-separated seeds")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-dir")
    p.add_argument("--formats", default="jsonl,csv,svg_timeline")
    p.add_argument("--plot", action="store_true", help="also render a PNG timeline")
    out_flag(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("plot", help="figures from saved output")
    psub = p.add_subparsers(dest="plot", required=True, parser_class=_Parser)
    q = psub.add_parser("timeline")
    q.add_argument("--trace", required=True, help="JSONL trace")
    q.add_argument("--out", required=True, help="image path (png, pdf or svg)")
    q.set_defaults(fn=cmd_plot_timeline)

    p = sub.add_parser("model", help="closed-form architecture models")
    msub = p.add_subparsers(dest="model", required=True, parser_class=_Parser)
    q = msub.add_parser("shor")
    q.add_argument("--arch", required=True, choices=[a.value for a in models.ShorArch])
    q.add_argument("--clock", type=float, required=True, help="logical clock (Hz)")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--plot", help="write the runtime comparison figure")
    q = msub.add_parser("kappa")
    q.add_argument("--coherence", type=float, required=True)
    q.add_argument("--cycle", type=float, required=True, help="QEC cycle per qubit (s)")
    q.add_argument("--fraction", type=float)
    q = msub.add_parser("rent")
    q.add_argument("--K", type=float, required=True)
    q.add_argument("--B", type=float, required=True)
    q.add_argument("--r", type=float, required=True)
    q = msub.add_parser("throughput")
    q.add_argument("--params")
    q = msub.add_parser("syndrome")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--t2q", type=float, required=True)
    q.add_argument("--ceil-blocks", action="store_true")
    q = msub.add_parser("lo")
    q.add_argument("--freq", type=float, required=True)
    q.add_argument("--time", type=float, required=True)
    q = msub.add_parser("dacram")
    q.add_argument("--duration", type=float, required=True)
    q.add_argument("--period", type=float, required=True)
    q.add_argument("--bits", type=int, required=True)
    q.add_argument("--waveforms", type=int, required=True)
    q = msub.add_parser("steane")
    q.add_argument("--t2q", type=float, required=True)
    q.add_argument("--tc", type=float, default=0.0)
    q = msub.add_parser("pipeline")
    q.add_argument("--qip", type=float, default=20e-6)
    q.add_argument("--variant", default="CombinedString",
                   choices=[v.value for v in pipeline.Variant])
    q = msub.add_parser("detection")
    q.add_argument("--ancillas", type=int, default=7)
    q.add_argument("--t2q", type=float, default=20e-6)
    q.add_argument("--interval", type=float, default=80e-6)
    for q in msub.choices.values():
        out_flag(q)
        q.add_argument("--json", action="store_true", help="JSON output (the default; kept for scripts)")
    p.set_defaults(fn=cmd_model)

    p = sub.add_parser("physics", help="coil, vacuum, capacitance, clock and beam calculators")
    psub = p.add_subparsers(dest="physics", required=True, parser_class=_Parser)
    q = psub.add_parser("coil")
    q.add_argument("--kind", default="Helmholtz", choices=[k.value for k in physics.CoilKind])
    q.add_argument("--tol", type=float, default=1e-6)
    q.add_argument("--diagonal", type=float, help="trap diagonal (m)")
    q.add_argument("--plot", help="write the homogeneity figure")
    q = psub.add_parser("vacuum")
    q.add_argument("--ions", type=float, required=True)
    q.add_argument("--pressure", type=float, required=True, help="mbar")
    q.add_argument("--gas", choices=["H2", "He4", "He3"])
    q.add_argument("--temperature", type=float)
    q = psub.add_parser("capacitance")
    q.add_argument("--area", type=float, required=True, help="m^2")
    q.add_argument("--thickness", type=float, required=True, help="m")
    q.add_argument("--eps", type=float, default=physics.SIO2_EPS_R)
    q.add_argument("--c-shunt", type=float)
    q.add_argument("--c-seg", type=float)
    q = psub.add_parser("clock")
    q.add_argument("--sensitivity", type=float, required=True, help="Hz/mT^2")
    q.add_argument("--dB", type=float, required=True, help="mT")
    q = psub.add_parser("beam")
    q.add_argument("--power", type=float, required=True)
    q.add_argument("--w-ref", type=float, required=True)
    q.add_argument("--w-new", type=float, required=True)
    for q in psub.choices.values():
        out_flag(q)
    p.set_defaults(fn=cmd_physics)

    p = sub.add_parser("species", help="ion species selection")
    ssub = p.add_subparsers(dest="species", required=True, parser_class=_Parser)
    q = ssub.add_parser("triples")
    q.add_argument("--surface", default="aluminum")
    q.add_argument("--max-ratio", type=float, default=3.0)
    q.add_argument("--plain", action="store_true",
                   help="plain spin/D-state/mass-ratio filter without the selection refinements")
    out_flag(q)
    p.set_defaults(fn=cmd_species)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if args.cmd == "physics" and args.physics == "vacuum" and args.gas and \
                args.temperature is None:
            raise UsageError("--gas needs --temperature")
        args.fn(args)
    except UsageError as exc:
        print(f"qvn: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"qvn: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (QvnError, ValueError, KeyError) as exc:
        print(f"qvn: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
