"""Command line entry point: ``simulate``, ``selftest`` and ``flops``."""

import argparse
import sys

import numpy as np

from . import selftest
from .receivers import flop_estimate
from .sim import curves_to_csv, load_config, run_sweep


def parse_grid(text: str) -> tuple:
    """``start:step:stop`` (inclusive) or a comma separated list of dB values."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[1] <= 0:
            raise argparse.ArgumentTypeError(f"expected start:step:stop with a positive step, got {text!r}")
        start, step, stop = parts
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(start + i * step) for i in range(max(count, 0)))
    return tuple(float(v) for v in text.split(",") if v.strip())


def _simulate(args) -> int:
    cfg = load_config(args.config)
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.receivers is not None:
        changes["receivers"] = tuple(r for r in args.receivers.split(",") if r)
    if args.ebn0 is not None:
        changes["ebn0_grid_db"] = args.ebn0
    if changes:
        cfg = cfg.replace(**changes)
    try:
        curves = run_sweep(cfg, workers=args.workers, out=args.out)
    except KeyboardInterrupt:
        if args.out:
            print(f"interrupted; partial results written to {args.out}", file=sys.stderr)
        return 130
    if args.out is None:
        sys.stdout.write(curves_to_csv(curves))
    return 0


def _flops(args) -> int:
    print(f"{flop_estimate(args.receiver, args.mt, args.mr, args.k):.10g}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="tensorofdm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo SER sweep and write CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--receivers", help="comma separated, e.g. zf,ilsp,rlsp")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--ebn0", type=parse_grid, help="start:step:stop in dB, e.g. 0:4:28")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_simulate)

    p = sub.add_parser("selftest", help="run the quick invariant checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=lambda a: 0 if selftest.run(a.seed) else 1)

    p = sub.add_parser("flops", help="operation count per subcarrier (and iteration)")
    p.add_argument("--receiver", required=True, choices=["zf", "ilsp", "rlsp"])
    p.add_argument("--mt", type=int, required=True)
    p.add_argument("--mr", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=_flops)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
