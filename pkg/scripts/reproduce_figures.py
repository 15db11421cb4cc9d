#!/usr/bin/env python3
"""Regenerate the full headline data bundle with the packaged CLI.

Thin driver around `lightqueue figures` so the whole pipeline stays a
single recorded run; pass --fast for a coarse smoke-test bundle.
"""

import argparse
import subprocess
import sys

FAST_OVERRIDES = [
    "green.dx=0.1", "green.x_min=-5.0", "green.x_max=5.0",
    "green.dt=0.1", "green.t_max=7.0",
    "metrics.tau_max=3.0", "metrics.dtau=0.25",
    "metrics.x_lo=-5.0", "metrics.x_hi=5.0",
]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="figures", help="bundle directory")
    ap.add_argument("--config", default=None, help="TOML config file")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--set", dest="overrides", action="append", default=[],
                    metavar="KEY=VALUE", help="config override (repeatable)")
    ap.add_argument("--fast", action="store_true",
                    help="coarse grids for a quick smoke run")
    args = ap.parse_args()

    cmd = [sys.executable, "-m", "lightqueue.cli", "figures",
           "--outdir", args.outdir, "--threads", str(args.threads)]
    if args.config:
        cmd += ["--config", args.config]
    pairs = (FAST_OVERRIDES if args.fast else []) + args.overrides
    for pair in pairs:
        cmd += ["--set", pair]
    print("+", " ".join(cmd))
    return subprocess.call(cmd)


if __name__ == "__main__":
    sys.exit(main())
