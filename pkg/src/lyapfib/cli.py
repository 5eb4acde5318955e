"""Command-line entry point.

Exit codes: 0 success, 1 computation error (possibly after partial output),
2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from . import export
from .core import CapacityError, Seed, make_model
from .montecarlo import (
    DEFAULT_CHAIN_DEPTH,
    DEFAULT_PILOT_STEPS,
    invariant_sample,
    mc_lambda,
    mc_lambda_curve,
    mc_variance_curve,
    parameter_grid,
)
from .recursion import DEFAULT_DEPTH_CAP, bounds_from_log_c, log_c

DEFAULT_RANGES = {"bernoulli": (0.0, 1.0), "cauchy": (-20.0, 20.0)}
DEFAULT_STEPS = {"bernoulli": 0.01, "cauchy": 0.25}
DESK_M = 10_000


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    param: float | None = None
    n: int | None = None
    m: int | None = None
    k: float | None = None
    range: tuple[float, float] | None = None
    depth: int = DEFAULT_CHAIN_DEPTH
    depth_cap: int = DEFAULT_DEPTH_CAP
    nmax: int | None = None
    engine: str = "streaming"
    count: int | None = None
    pilot_steps: int = DEFAULT_PILOT_STEPS
    seed: int = 0
    workers: int = 1
    out: Path | None = None
    format: str = "csv"

    def validate(self) -> None:
        """Check every parameter against the target operation before any work is done."""
        if self.workers < 1:
            raise UsageError("--workers must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if self.format in ("svg", "both") and self.out is None:
            raise UsageError("--format svg/both needs --out")
        if self.command == "bounds":
            if self.nmax < 0:
                raise UsageError("--nmax must be >= 0")
        if self.command in ("lambda-curve", "variance-curve"):
            a, b = self.range
            try:
                grid = parameter_grid(a, b, self.k)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            if self.model == "bernoulli" and (grid[0] < 0 or grid[-1] > 1):
                raise UsageError("Bernoulli range must lie within [0, 1]")
            if self.n < 1:
                raise UsageError("--n must be >= 1")
        if self.command == "variance-curve" and self.m < 2:
            raise UsageError("--m must be >= 2")
        if self.command == "estimate":
            try:
                make_model(self.model, self.param)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            if self.n < 1 or self.m < 1:
                raise UsageError("--n and --m must be >= 1")
        if self.command == "invariant":
            if not 0.0 < self.param < 1.0:
                raise UsageError("--p must lie in (0, 1)")
            if self.count < 1 or self.depth < 1:
                raise UsageError("--count and --depth must be >= 1")

    @property
    def wants_csv(self) -> bool:
        return self.format in ("csv", "both")

    @property
    def wants_svg(self) -> bool:
        return self.format in ("svg", "both")

    @property
    def svg_path(self) -> Path:
        return self.out.with_suffix(".svg")


def _count(text: str) -> int:
    """Integer that may be written as ``1e6``."""
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value) or value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--out", type=Path, default=None, help="CSV path (SVG goes next to it)")
    common.add_argument("--format", choices=["csv", "svg", "both"], default="csv")
    common.add_argument("--full-scale", action="store_true", help="replica counts for full-size variance curves")

    parser = argparse.ArgumentParser(prog="lyapfib", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", parents=[common], help="recursion bracket p_n <= lambda <= q_n")
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--engine", choices=["streaming", "multiset"], default="streaming")
    p.add_argument("--depth-cap", type=int, default=DEFAULT_DEPTH_CAP)

    def model_args(p):
        p.add_argument("--model", choices=["bernoulli", "cauchy"], required=True)
        p.add_argument("--range", type=float, nargs=2, metavar=("A", "B"), default=None)
        p.add_argument("--k", type=float, default=None)

    p = sub.add_parser("lambda-curve", parents=[common], help="Monte Carlo exponent over a grid")
    model_args(p)
    p.add_argument("--n", type=_count, default=1_000_000)

    p = sub.add_parser("variance-curve", parents=[common], help="CLT variance over a grid")
    model_args(p)
    p.add_argument("--n", type=_count, default=1000)
    p.add_argument("--m", type=_count, default=None)
    p.add_argument("--pilot-steps", type=_count, default=DEFAULT_PILOT_STEPS)

    p = sub.add_parser("estimate", parents=[common], help="exponent at one parameter")
    p.add_argument("--model", choices=["bernoulli", "cauchy"], required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=float)
    g.add_argument("--xi", type=float)
    p.add_argument("--n", type=_count, default=1_000_000)
    p.add_argument("--m", type=_count, default=30, help="independent replicas")

    p = sub.add_parser("invariant", parents=[common], help="draws from the invariant law")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--count", type=_count, default=100_000)
    p.add_argument("--depth", type=_count, default=DEFAULT_CHAIN_DEPTH)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        seed=args.seed,
        workers=args.workers,
        out=args.out,
        format=args.format,
    )
    if args.command == "bounds":
        cfg.nmax = args.nmax if args.nmax is not None else 25
        cfg.engine = args.engine
        cfg.depth_cap = args.depth_cap
    elif args.command in ("lambda-curve", "variance-curve"):
        cfg.model = args.model
        cfg.range = tuple(args.range) if args.range else DEFAULT_RANGES[args.model]
        cfg.k = args.k if args.k is not None else DEFAULT_STEPS[args.model]
        cfg.n = args.n
        if args.command == "variance-curve":
            cfg.pilot_steps = args.pilot_steps
            if args.m is not None:
                cfg.m = args.m
            elif args.full_scale:
                wide = args.model == "cauchy" and cfg.range == (-20.0, 20.0)
                cfg.m = 5_000_000 if wide else 1_000_000
            else:
                cfg.m = DESK_M
    elif args.command == "estimate":
        cfg.model = args.model
        value = args.p if args.p is not None else args.xi
        if (args.model == "bernoulli") != (args.p is not None):
            raise UsageError("use --p with bernoulli and --xi with cauchy")
        cfg.param = value
        cfg.n = args.n
        cfg.m = args.m
    elif args.command == "invariant":
        cfg.param = args.p
        cfg.count = args.count
        cfg.depth = args.depth
    return cfg


@contextlib.contextmanager
def _csv_sink(cfg: RunConfig):
    if not cfg.wants_csv:
        yield None
    elif cfg.out is None:
        yield sys.stdout
    else:
        with open(cfg.out, "w", newline="\n", encoding="ascii") as fh:
            yield fh


def cmd_bounds(cfg: RunConfig) -> int:
    header = ["n", "log_c", "lower", "upper", "width"]
    rows = []
    status = 0
    with _csv_sink(cfg) as fh:
        if fh is not None:
            fh.write(",".join(header) + "\n")
        for level in range(cfg.nmax + 1):
            try:
                lc = log_c(level, cfg.engine, workers=cfg.workers, depth_cap=cfg.depth_cap)
            except (CapacityError, OverflowError, MemoryError) as exc:
                print(f"error: level {level} failed: {exc}", file=sys.stderr)
                status = 1
                break
            b = bounds_from_log_c(level, lc)
            row = (level, lc, b.lower, b.upper, b.width)
            rows.append(row)
            if fh is not None:
                fh.write(",".join(export.format_value(v) for v in row) + "\n")
                fh.flush()
    if cfg.wants_svg and rows:
        export.plot_bounds(rows, cfg.svg_path)
    return status


def cmd_lambda_curve(cfg: RunConfig) -> int:
    a, b = cfg.range
    curve = mc_lambda_curve(cfg.model, a, b, cfg.k, cfg.n, Seed(cfg.seed), workers=cfg.workers)
    if cfg.model == "bernoulli":
        header = ["param", "lambda_hat", "analytic_lower", "analytic_upper"]
    else:
        header = ["param", "lambda_hat", "lambda_exact"]
    with _csv_sink(cfg) as fh:
        if fh is not None:
            export.write_csv(fh, header, curve.rows())
    if cfg.wants_svg:
        export.plot_lambda_curve(curve, cfg.svg_path)
    return 0


def cmd_variance_curve(cfg: RunConfig) -> int:
    a, b = cfg.range
    curve = mc_variance_curve(
        cfg.model, a, b, cfg.k, cfg.n, cfg.m, Seed(cfg.seed),
        pilot_steps=cfg.pilot_steps, workers=cfg.workers,
    )
    with _csv_sink(cfg) as fh:
        if fh is not None:
            export.write_csv(fh, ["param", "variance", "stderr"], curve.rows())
    if cfg.wants_svg:
        export.plot_variance_curve(curve, cfg.svg_path)
    return 0


def cmd_estimate(cfg: RunConfig) -> int:
    model = make_model(cfg.model, cfg.param)
    est = mc_lambda(model, cfg.n, Seed(cfg.seed), replicas=cfg.m, workers=cfg.workers)
    stderr = est.stderr if est.stderr is not None else float("nan")
    with _csv_sink(cfg) as fh:
        if fh is not None:
            export.write_csv(
                fh,
                ["param", "lambda_hat", "stderr", "replicas", "steps"],
                [(cfg.param, est.value, stderr, est.replicas, est.steps)],
            )
    return 0


def cmd_invariant(cfg: RunConfig) -> int:
    sample = invariant_sample(cfg.param, cfg.count, cfg.depth, Seed(cfg.seed), cfg.workers)
    with _csv_sink(cfg) as fh:
        if fh is not None:
            export.write_csv(fh, ["value"], ((v,) for v in sample.values.tolist()))
    if cfg.wants_svg:
        export.plot_invariant(sample, cfg.svg_path)
    return 0


COMMANDS = {
    "bounds": cmd_bounds,
    "lambda-curve": cmd_lambda_curve,
    "variance-curve": cmd_variance_curve,
    "estimate": cmd_estimate,
    "invariant": cmd_invariant,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        cfg.validate()
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[cfg.command](cfg)
    except (CapacityError, ArithmeticError, ValueError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
