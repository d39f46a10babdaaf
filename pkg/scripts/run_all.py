"""Run every config in configs/ through the CLI, one output directory per config."""

import argparse
import sys
import time
from pathlib import Path

from renyi_probe.cli import run

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=ROOT / "runs")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("names", nargs="*", help="config stems (default: all)")
    args = ap.parse_args()
    configs = sorted((ROOT / "configs").glob("*.ini"))
    if args.names:
        configs = [c for c in configs if c.stem in args.names]
    for cfg in configs:
        experiment = next(line.split("=", 1)[1].strip() for line in cfg.read_text().splitlines()
                          if line.replace(" ", "").startswith("experiment="))
        t0 = time.perf_counter()
        out = run(experiment, cfg, args.seed, args.out / cfg.stem, args.threads)
        print(f"{cfg.stem:20s} {time.perf_counter() - t0:8.1f}s  {out}", flush=True)


if __name__ == "__main__":
    sys.exit(main())
