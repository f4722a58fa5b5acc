"""Run a benchmark sweep from a TOML config and write the CSV reports.

    python scripts/run_sweep.py configs/zout_sweep.toml --out results/zout
"""

import argparse
import sys

from attrsbm.cli import main as cli_main


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--trials", type=int)
    args = p.parse_args()
    argv = ["sweep", "--config", args.config, "--out", args.out, "--workers", str(args.workers)]
    if args.trials:
        argv += ["--trials", str(args.trials)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
