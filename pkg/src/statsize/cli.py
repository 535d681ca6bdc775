"""Command-line front end: ``statsize analyze | optimize | mc``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from .netlist import CellLibrary, Circuit, InvariantError, NetlistError, Sizing, circuit_area, \
    format_sizing, parse_library, parse_netlist, parse_sizing
from .optimizer import OptimizerConfig, SizingResult, statistical_greedy
from .oracle import monte_carlo
from .pdf_engine import DEFAULT_SAMPLES, propagate_full
from .wnss import trace_wnss

EXIT_IO = 1
EXIT_INVALID = 2


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def g6(x: float) -> str:
    return f"{x:.6g}"


@dataclass
class RunReport:
    circuit: str
    gates: int
    lam: float
    mu0: float
    sigma0: float
    area0: float
    mu1: float
    sigma1: float
    area1: float
    wall_time: float
    termination: str

    HEADER = ("circuit", "gates", "lambda", "mu0", "sigma0", "sigma/mu0", "area0",
              "mu", "sigma", "sigma/mu", "area", "dmu%", "dsigma%", "dA%", "time_s", "reason")

    @classmethod
    def from_result(cls, circuit: Circuit, res: SizingResult) -> "RunReport":
        return cls(circuit.name, len(circuit), res.lam, res.initial_moments.mu,
                   res.initial_moments.sigma, res.initial_area, res.final_moments.mu,
                   res.final_moments.sigma, res.final_area, res.wall_time, res.termination_reason)

    @staticmethod
    def _pct(new, old):
        return 100.0 * (new - old) / old if old else 0.0

    def row(self) -> tuple[str, ...]:
        ratio0 = self.sigma0 / self.mu0 if self.mu0 else 0.0
        ratio1 = self.sigma1 / self.mu1 if self.mu1 else 0.0
        return (self.circuit, str(self.gates), g6(self.lam), g6(self.mu0), g6(self.sigma0),
                g6(ratio0), g6(self.area0), g6(self.mu1), g6(self.sigma1), g6(ratio1),
                g6(self.area1), f"{self._pct(self.mu1, self.mu0):+.1f}",
                f"{self._pct(self.sigma1, self.sigma0):+.1f}",
                f"{self._pct(self.area1, self.area0):+.1f}", f"{self.wall_time:.2f}",
                self.termination)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _load(args) -> tuple[CellLibrary, Circuit, Sizing]:
    lib_text = _read(args.library)
    net_text = _read(args.netlist)
    size_text = _read(args.sizing) if args.sizing else None
    try:
        lib = parse_library(lib_text)
        circuit = parse_netlist(net_text, lib)
        sizing = parse_sizing(size_text, circuit, lib) if size_text is not None \
            else Sizing.smallest(circuit)
    except InvariantError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    except NetlistError as exc:
        raise CliError(str(exc), EXIT_IO) from None
    return lib, circuit, sizing


def cmd_analyze(args) -> int:
    lib, circuit, sizing = _load(args)
    ann = propagate_full(circuit, sizing, lib, args.samples)
    m = ann.circuit_moments
    print(f"circuit {circuit.name}  gates {len(circuit)}")
    print(f"mu {g6(m.mu)}  sigma {g6(m.sigma)}  sigma/mu {g6(m.sigma / m.mu if m.mu else 0.0)}  "
          f"area {g6(circuit_area(circuit, sizing, lib))}")
    if args.wnss:
        path = trace_wnss(circuit, ann, args.lam, 0.01, lib.c)
        print("WNSS path:")
        sys.stdout.write(path.report(circuit, ann))
    if args.emit_pdf:
        _write(args.emit_pdf, ann.circuit_rv.to_csv())
    return 0


def _parse_sweep(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(f"bad --lambda-sweep value {text!r}", EXIT_INVALID) from None
    if not vals or any(v < 0 for v in vals):
        raise CliError("--lambda-sweep needs non-negative values", EXIT_INVALID)
    return vals


def cmd_optimize(args) -> int:
    lib, circuit, sizing = _load(args)
    base = dict(depth=args.depth, samples=args.samples, max_outer_iters=args.max_iters,
                patience=args.patience)
    try:
        OptimizerConfig(lam=args.lam, **base)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None

    if args.lambda_sweep:
        rows = ["lambda,mu,sigma,area"]
        for lam in _parse_sweep(args.lambda_sweep):
            res = statistical_greedy(circuit, lib, OptimizerConfig(lam=lam, **base), sizing)
            rows.append(f"{g6(lam)},{g6(res.final_moments.mu)},{g6(res.final_moments.sigma)},"
                        f"{g6(res.final_area)}")
        text = "\n".join(rows) + "\n"
        if args.sweep_csv:
            _write(args.sweep_csv, text)
        else:
            sys.stdout.write(text)
        return 0

    res = statistical_greedy(circuit, lib, OptimizerConfig(lam=args.lam, **base), sizing)
    report = RunReport.from_result(circuit, res)
    print("  ".join(RunReport.HEADER))
    print("  ".join(report.row()))
    if args.out_sizing:
        _write(args.out_sizing, format_sizing(circuit, res.final_sizing, lib))
    if args.trace_csv:
        _write(args.trace_csv, res.trace_csv())
    return 0


def cmd_mc(args) -> int:
    if args.trials < 1:
        raise CliError("--trials must be >= 1", EXIT_INVALID)
    lib, circuit, sizing = _load(args)
    res = monte_carlo(circuit, sizing, lib, args.trials, args.seed, truncate=args.truncate,
                      keep_samples=bool(args.dump_samples))
    print(f"trials {res.trials}  seed {args.seed}")
    print(f"mean {g6(res.mean)}  std {g6(res.std)}")
    print("quantiles " + "  ".join(f"q{q:g}={g6(v)}" for q, v in res.quantiles.items()))
    if args.compare:
        m = propagate_full(circuit, sizing, lib, args.samples).circuit_moments
        dmu = 100.0 * (m.mu - res.mean) / res.mean if res.mean else 0.0
        dsd = 100.0 * (m.sigma - res.std) / res.std if res.std else 0.0
        print(f"fullssta mean {g6(m.mu)}  std {g6(m.sigma)}")
        print(f"delta mean {dmu:+.3f}%  delta std {dsd:+.3f}%")
    if args.dump_samples:
        _write(args.dump_samples, res.to_csv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="statsize",
                                description="Statistical gate sizing for timing-variance reduction.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--netlist", required=True, help="BLIF-subset netlist")
    common.add_argument("--library", required=True, help="cell library file")
    common.add_argument("--sizing", help="initial sizing file (default: smallest variants)")
    common.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="points per pdf")

    a = sub.add_parser("analyze", parents=[common], help="full statistical timing")
    a.add_argument("--emit-pdf", metavar="CSV", help="write the circuit delay pdf")
    a.add_argument("--wnss", action="store_true", help="print the WNSS path")
    a.add_argument("--lambda", dest="lam", type=float, default=3.0)
    a.set_defaults(func=cmd_analyze)

    o = sub.add_parser("optimize", parents=[common], help="statistical greedy sizing")
    o.add_argument("--lambda", dest="lam", type=float, default=3.0)
    o.add_argument("--depth", type=int, default=2)
    o.add_argument("--max-iters", type=int, default=100)
    o.add_argument("--patience", type=int, default=OptimizerConfig.patience)
    o.add_argument("--out-sizing", metavar="PATH")
    o.add_argument("--trace-csv", metavar="PATH")
    o.add_argument("--lambda-sweep", metavar="L1,L2,...")
    o.add_argument("--sweep-csv", metavar="PATH")
    o.set_defaults(func=cmd_optimize)

    m = sub.add_parser("mc", parents=[common], help="Monte Carlo reference")
    m.add_argument("--trials", type=int, default=100_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--compare", action="store_true", help="also run the pdf engine")
    m.add_argument("--truncate", action="store_true", help="clip sampled delays at zero")
    m.add_argument("--dump-samples", metavar="CSV")
    m.set_defaults(func=cmd_mc)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"statsize: error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"statsize: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
