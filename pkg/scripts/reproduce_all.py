"""Run the three reference experiments and collect their reports under one directory.

Equivalent to calling ``ddsched reproduce`` for each example. The data-driven
run also leaves j_test_values.csv (histogram data) and the exceedance table
in its report.
"""
import argparse
import sys
from pathlib import Path

from ddsched.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--restarts", type=int, default=200)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    status = 0
    for example in ("unicast-mixture", "broadcast-mixture", "data-driven"):
        argv = ["reproduce", example, "--restarts", str(args.restarts), "--out", str(Path(args.out) / example)]
        if args.threads:
            argv += ["--threads", str(args.threads)]
        print(f"== {example}", flush=True)
        status = max(status, cli(argv))
    return status


if __name__ == "__main__":
    sys.exit(main())
