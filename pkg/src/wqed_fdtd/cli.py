"""Command-line driver: input file in, output files and manifest out.

Exit codes: 0 success, 1 internal error, 2 usage or invalid input,
3 allocation failure, 4 solver failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import io
from .exact import SingularFormulaError
from .grid import AllocationError, GeometryError, UnwrittenReadError, initialize
from .kernel import SingularUpdateError
from .params import InputError, load
from .postprocess import InSituCollector
from .schedulers import BENCH_HEADER, Mode, SchedulerDeadlock, benchmark, run
from .special_gamma import GammaConvergenceError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_ALLOCATION = 3
EXIT_SOLVER = 4
EXIT_IO = 5

log = logging.getLogger("wqed_fdtd")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="wqed-fdtd", description="FDTD solver for the two-excitation delay PDE")
    ap.add_argument("--input", required=True, help="key=value input file")
    ap.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.SERIAL_NO_OVERHEAD.value,
                    help="march strategy (default: plain serial march)")
    ap.add_argument("--workers", type=int, default=None, help="worker count (default: Nth)")
    ap.add_argument("--outdir", default=".", help="output directory")
    ap.add_argument("--bench", action="store_true", help="time the march and print CSV")
    ap.add_argument("--repeats", type=int, default=10, help="benchmark repetitions")
    ap.add_argument("--debug", action="store_true", help="enable the read-before-write sentinel")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def write_outputs(outdir: Path, g, collector: InSituCollector, timings: dict):
    p = g.params
    plan = io.OutputPlan.from_params(p)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if plan.save_psi:
        io.write_psi_text(outdir / io.PSI_TEXT, g.data, plan, p)
    if plan.save_psi_binary:
        io.write_psi_binary(outdir / io.PSI_BINARY, g.data, plan, p)
    if plan.save_chi:
        io.write_chi_text(outdir / io.CHI_TEXT, collector.chi, p)
    if plan.save_psi_square_integral:
        io.write_integrals(outdir / io.INTEGRAL_TEXT, collector.integrals, p)
    if plan.measure_NM:
        io.write_nm(outdir / io.NM_TEXT, collector.nm.records, p)
    timings["write"] = time.perf_counter() - t0
    return io.write_manifest(outdir, p, plan.files(), timings)


def _run(args) -> int:
    p = load(args.input)
    workers = p.Nth if args.workers is None else args.workers
    if workers < 1:
        raise UsageError("--workers must be positive")
    if args.bench:
        if args.repeats < 1:
            raise UsageError("--repeats must be at least 1")
        print(BENCH_HEADER)
        for s in benchmark(p, args.mode, workers, args.repeats):
            print(s.csv(), flush=True)
        return EXIT_OK

    timings = {}
    t0 = time.perf_counter()
    g = initialize(p, debug=args.debug)
    timings["initialize"] = time.perf_counter() - t0
    collector = InSituCollector(g)
    t0 = time.perf_counter()
    run(g, p, args.mode, workers, hooks=collector)
    timings["march"] = time.perf_counter() - t0
    log.info("march finished in %.3f s", timings["march"])
    manifest = write_outputs(Path(args.outdir), g, collector, timings)
    log.info("wrote %s", manifest)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if not Path(args.input).is_file():
        parser.print_usage(sys.stderr)
        print(f"error: input file {args.input!r} not found", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _run(args)
    except (UsageError, InputError, SingularFormulaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AllocationError, MemoryError, OverflowError) as exc:
        print(f"allocation error: {exc}", file=sys.stderr)
        return EXIT_ALLOCATION
    except (UnwrittenReadError, SchedulerDeadlock, SingularUpdateError, GammaConvergenceError,
            GeometryError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
