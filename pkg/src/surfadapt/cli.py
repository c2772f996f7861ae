"""Command-line front end: ``surfadapt <command> [options]``.

Devices are given as a JSON device file or as ``example:NAME`` for one of the
built-in worked examples.  Every command exits nonzero when a contract check
fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .adapter import BANDAGE, TRADITIONAL, AdaptationExhausted, adapt_bandage, adaptation_report, report_json
from .baseline import adapt_traditional
from .circuit import (
    MEMORY_BASIS,
    PLUS,
    ZERO,
    CircuitError,
    NoiseParams,
    ShellStrategy,
    build_schedule,
    emit_circuit,
    global_grid,
    sweep_circuits,
)
from .corpus import WORKED, worked_device
from .ensemble import BOTH, EnsembleSpec, compare_methods, devices_csv, run_ensemble, summary_csv
from .lattice import X, Z, DeviceFormatError, build_lattice, inject_defects, parse_device, serialize_device
from .logical import NoLogicalPath, code_distances, count_min_weight_logicals, place_logicals, verify_logical
from .patch import CommutationError, patch, stabilizer_dump, verify_commutation
from .render import line_chart, render_lattice
from .verify import CircuitParseError, check_determinism, parse_circuit, sample_frames, write_bit_table

log = logging.getLogger("surfadapt")

WORKERS_ENV = "SURFADAPT_WORKERS"
ADAPTERS = {BANDAGE: adapt_bandage, TRADITIONAL: adapt_traditional}

# errors that mean "the input or pipeline broke a contract", reported without a traceback
PIPELINE_ERRORS = (
    DeviceFormatError,
    AdaptationExhausted,
    NoLogicalPath,
    CommutationError,
    CircuitError,
    CircuitParseError,
    KeyError,
    ValueError,
    OSError,
)


class ContractFailure(RuntimeError):
    """A check run by a command did not pass."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(2, f"\n{self.prog}: error: {message}\n")


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# helpers


def load_device(ref: str):
    if ref.startswith("example:"):
        return worked_device(ref.split(":", 1)[1])
    return parse_device(Path(ref).read_text())


def adapt(ref: str, method: str):
    lat, defects = load_device(ref)
    status = ADAPTERS[method](lat, defects)
    return lat, defects, patch(lat, status)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _logicals(code):
    x_op, z_op = place_logicals(code)
    return {X: x_op, Z: z_op}


def _check_logicals(code, logicals) -> None:
    for basis, op in logicals.items():
        rep = verify_logical(code.lattice, code.status, op, code.stabilizers, logicals[X if basis == Z else Z])
        if not rep.ok:
            raise ContractFailure(f"{basis} logical failed checks: {'; '.join(rep.failures)}")


# ---------------------------------------------------------------------------
# commands


def cmd_gen(args) -> int:
    if args.example:
        lat, defects = worked_device(args.example)
        _emit(serialize_device(lat, defects), args.out)
        return 0
    qr = args.rate if args.qubit_rate is None else args.qubit_rate
    cr = args.rate if args.coupler_rate is None else args.coupler_rate
    lat = build_lattice(args.L)
    if args.n == 1:
        _emit(serialize_device(lat, inject_defects(lat, qr, cr, args.seed)), args.out)
        return 0
    if not args.out or args.out == "-":
        raise ValueError("--out must name a directory when --n > 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.n):
        seed = args.seed + k
        (out / f"device_L{args.L}_s{seed}.json").write_text(serialize_device(lat, inject_defects(lat, qr, cr, seed)))
    return 0


def cmd_adapt(args) -> int:
    _, _, code = adapt(args.device, args.method)
    comm = verify_commutation(code.stabilizers)
    report = adaptation_report(code.status)
    if args.no_events:
        report.pop("events")
    report["stabilizers"] = stabilizer_dump(code)
    report["average_super_weight"] = code.average_super_weight()
    report["commutation_ok"] = comm.ok
    if args.format == "json":
        _emit(report_json(report), args.out)
    else:
        c = report["counts"]
        lines = [
            f"method: {args.method}",
            f"disabled: {c['disabled_total']} ({c['disabled_data']} data, {c['disabled_syndromes']} syndrome)",
        ]
        lines += [f"  {d['kind']} {tuple(d['node'])}: {d['reason']}" for d in report["disabled"]]
        lines.append(f"stabilizers: {len(code.stabilizers)}, super: {len(code.supers)}")
        for s in report["stabilizers"]:
            if s["super"]:
                members = " ".join(f"({m[0]},{m[1]})" for m in s["members"])
                lines.append(f"  {s['basis']} group {s['group']} weight {s['weight']}: {members}")
        avg = report["average_super_weight"]
        lines.append(f"average super weight: {'n/a' if avg is None else f'{avg:.4g}'}")
        lines.append(f"commutation: {'ok' if comm.ok else 'FAILED'}")
        _emit("\n".join(lines) + "\n", args.out)
    if not comm.ok:
        comm.raise_if_failed()
    return 0


def cmd_stats(args) -> int:
    rows = []
    methods = (BANDAGE, TRADITIONAL) if args.method == BOTH else (args.method,)
    for method in methods:
        _, _, code = adapt(args.device, method)
        d_x, d_z = code_distances(code.lattice, code.status, code.stabilizers)
        avg = code.average_super_weight()
        rows.append(
            {
                "method": method,
                "disabled": len(code.status.disabled),
                "disabled_data": len(code.status.disabled_data()),
                "n_super": len(code.supers),
                "super_weights": sorted(code.super_weights()),
                "average_super_weight": avg,
                "d_x": d_x,
                "d_z": d_z,
            }
        )
    if args.format == "json":
        _emit(_dumps(rows), args.out)
    else:
        lines = []
        for r in rows:
            avg = "n/a" if r["average_super_weight"] is None else f"{r['average_super_weight']:.4g}"
            lines.append(
                f"{r['method']}: dX={r['d_x']} dZ={r['d_z']} disabled={r['disabled']} "
                f"supers={r['super_weights']} avg_weight={avg}"
            )
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_distance(args) -> int:
    _, _, code = adapt(args.device, args.method)
    counts = {
        b: count_min_weight_logicals(code.lattice, code.status, b, code.stabilizers) for b in (X, Z)
    }
    if args.format == "json":
        payload = {
            "d_x": counts[X].distance,
            "d_z": counts[Z].distance,
            "min_weight_counts": {b: c.count for b, c in counts.items()},
        }
        _emit(_dumps(payload), args.out)
    else:
        lines = [f"dX={counts[X].distance} dZ={counts[Z].distance}"]
        for b, c in counts.items():
            lines.append(f"{b} weight-{c.distance} logicals: {c.count}")
        _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_circuit(args) -> int:
    _, _, code = adapt(args.device, args.method)
    strategy = ShellStrategy.parse(args.shell)
    strategy.validate(code.lattice.size)
    logicals = _logicals(code)
    _check_logicals(code, logicals)
    sched = build_schedule(code, strategy, args.state, args.cycles)
    circ = emit_circuit(sched, NoiseParams(args.p), logicals[MEMORY_BASIS[args.state]])
    _emit(circ.text, args.out)
    log.info("%d qubits, %d measurements, %d detectors", circ.n_qubits, circ.n_measurements, circ.n_detectors)
    return 0


def cmd_sweep(args) -> int:
    _, defects, code = adapt(args.device, args.method)
    L = code.lattice.size
    if args.shells:
        strategies = [ShellStrategy.parse(s) for s in args.shells]
    else:
        strategies = global_grid(L)
    for s in strategies:
        s.validate(L)
    logicals = _logicals(code)
    _check_logicals(code, logicals)
    if not args.out:
        raise ValueError("sweep needs --out DIR")
    manifest = sweep_circuits(code, defects, strategies, args.p, args.out, logicals, tuple(args.state), args.cycles)
    log.info("wrote %d circuits to %s", len(manifest["circuits"]), args.out)
    return 0


def cmd_verify(args) -> int:
    results = []
    failed = False
    for path in args.circuits:
        parsed = parse_circuit(Path(path).read_text())
        rep = check_determinism(parsed)
        failed |= not rep.ok
        results.append(
            {
                "file": path,
                "detectors": rep.n_detectors,
                "deterministic": rep.deterministic,
                "nondeterministic": rep.nondeterministic,
                "observables_ok": {str(k): v for k, v in rep.observables_ok.items()},
                "ok": rep.ok,
            }
        )
        if args.shots and rep.ok:
            tables = sample_frames(parsed, args.shots, args.seed, check=False)
            stem = Path(args.sample_dir or Path(path).parent) / Path(path).stem
            write_bit_table(tables.detectors, f"{stem}.dets.{args.bits}", args.bits)
            write_bit_table(tables.observables, f"{stem}.obs.{args.bits}", args.bits)
    if args.format == "json":
        _emit(_dumps(results), args.out)
    else:
        lines = []
        for r in results:
            tag = "ok" if r["ok"] else "FAIL"
            lines.append(f"{tag} {r['file']}: {r['deterministic']}/{r['detectors']} detectors deterministic")
            if r["nondeterministic"]:
                lines.append(f"  nondeterministic: {r['nondeterministic'][:20]}")
            for k, v in r["observables_ok"].items():
                if not v:
                    lines.append(f"  observable {k} nondeterministic")
        _emit("\n".join(lines) + "\n", args.out)
    return 1 if failed else 0


def cmd_ensemble(args) -> int:
    if not args.out:
        raise ValueError("ensemble needs --out DIR")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    workers = args.workers or default_workers()
    failed = False
    series: dict[str, list[tuple[float, float]]] = {}
    for rate in args.rate:
        qr = rate if args.qubit_rate is None else args.qubit_rate
        cr = rate if args.coupler_rate is None else args.coupler_rate
        spec = EnsembleSpec(args.L, qr, cr, args.n, args.seed, args.method)
        tag = f"L{args.L}_q{qr:g}_c{cr:g}"
        if args.method == BOTH:
            cmp = compare_methods(spec, workers)
            stats = cmp.stats
            summary = {
                "spec_hash": spec.digest(),
                "mean_distance_gain_pct": cmp.mean_distance_gain_pct,
                "dominance": cmp.dominance,
            }
            (out / f"compare_{tag}.json").write_text(_dumps(summary))
            if not cmp.dominated_everywhere:
                log.error("%s: paired dominance violated on %d device(s)", tag, cmp.dominance["violations"])
                failed = True
        else:
            stats = run_ensemble(spec, workers)
        (out / f"devices_{tag}.csv").write_text(devices_csv(stats))
        (out / f"summary_{tag}.csv").write_text(summary_csv(stats))
        for method, st in stats.items():
            if st.avg_dX is not None:
                series.setdefault(f"{method} dX", []).append((rate, st.avg_dX))
                series.setdefault(f"{method} dZ", []).append((rate, st.avg_dZ))
    if len(args.rate) > 1:
        chart = line_chart(series, f"mean distance, L={args.L}", "defect rate", "distance")
        (out / f"distance_L{args.L}.svg").write_text(chart)
    return 1 if failed else 0


def cmd_render(args) -> int:
    _, _, code = adapt(args.device, args.method)
    logicals = []
    if not args.no_logicals:
        logicals = list(_logicals(code).values())
    _emit(render_lattice(code, logicals, title=f"{args.method} L={code.lattice.size}"), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _shared(p, method_choices=(BANDAGE, TRADITIONAL), default_method=BANDAGE, formats=("text", "json")):
    p.add_argument("--method", choices=method_choices, default=default_method)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=formats, default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surfadapt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write device files with random defects or a worked example")
    _shared(p, formats=("json",))
    p.add_argument("--L", type=int, default=7)
    p.add_argument("--rate", type=float, default=0.0, help="defect rate for qubits and couplers")
    p.add_argument("--qubit-rate", type=float)
    p.add_argument("--coupler-rate", type=float)
    p.add_argument("--n", type=int, default=1, help="number of devices (seeds seed..seed+n-1)")
    p.add_argument("--example", choices=sorted(WORKED))
    p.set_defaults(func=cmd_gen)

    device_help = "device JSON file or example:NAME"
    p = sub.add_parser("adapt", help="adapt a device and print the report and stabilizers")
    p.add_argument("device", help=device_help)
    _shared(p, formats=("json", "text"))
    p.add_argument("--no-events", action="store_true", help="omit the step-by-step event log")
    p.set_defaults(func=cmd_adapt)

    p = sub.add_parser("stats", help="distances, disabled counts and super-stabilizer weights")
    p.add_argument("device", help=device_help)
    _shared(p, method_choices=(BANDAGE, TRADITIONAL, BOTH), default_method=BOTH)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("distance", help="code distances and minimum-weight logical counts")
    p.add_argument("device", help=device_help)
    _shared(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("circuit", help="emit one memory-experiment circuit")
    p.add_argument("device", help=device_help)
    _shared(p, formats=("stim",))
    p.add_argument("--shell", default="GLOBAL:1", help="GLOBAL:n, LOCALAVG:r or LOCALMAX:r")
    p.add_argument("--state", choices=(ZERO, PLUS), default=ZERO)
    p.add_argument("--p", type=float, default=0.0, help="SI1000 physical error rate")
    p.add_argument("--cycles", type=int, help="measurement cycles (default L)")
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("sweep", help="emit circuits over shell strategies and error rates")
    p.add_argument("device", help=device_help)
    _shared(p, formats=("stim",))
    p.add_argument("--shells", nargs="*", help="strategies (default GLOBAL:1..(L-1)/2)")
    p.add_argument("--p", type=float, nargs="+", default=[0.001])
    p.add_argument("--state", nargs="+", choices=(ZERO, PLUS), default=[ZERO, PLUS])
    p.add_argument("--cycles", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check detector determinism, optionally sample noisy shots")
    p.add_argument("circuits", nargs="+")
    _shared(p)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--bits", choices=("01", "b8"), default="01")
    p.add_argument("--sample-dir")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ensemble", help="Monte-Carlo statistics over random devices, written as CSV")
    _shared(p, method_choices=(BANDAGE, TRADITIONAL, BOTH), default_method=BOTH, formats=("csv",))
    p.add_argument("--L", type=int, default=27)
    p.add_argument("--rate", type=float, nargs="+", default=[0.01])
    p.add_argument("--qubit-rate", type=float)
    p.add_argument("--coupler-rate", type=float)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--workers", type=int, help=f"worker processes (default ${WORKERS_ENV} or 1)")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("render", help="SVG drawing of the adapted lattice")
    p.add_argument("device", help=device_help)
    _shared(p, formats=("svg",))
    p.add_argument("--no-logicals", action="store_true")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ContractFailure as exc:
        print(f"surfadapt {args.command}: {exc}", file=sys.stderr)
        return 1
    except PIPELINE_ERRORS as exc:
        print(f"surfadapt {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
