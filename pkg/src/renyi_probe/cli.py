"""Command line: ``renyi-probe <experiment> --config <file> --seed <u64> --out <dir> [--threads N]``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .experiments import DRIVERS, EXPERIMENTS, ConfigError, format_rows, load_config, resolved_text

log = logging.getLogger("renyi_probe")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        w.writerows(format_rows(rows))


def run(experiment: str, config_path: Path, seed: int, out: Path, threads: int = 1, records: bool = False) -> Path:
    cfg = load_config(config_path.read_text(), experiment)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    driver = DRIVERS[experiment]
    kwargs = {"records_dir": out / "records"} if records and experiment == "estimate" else {}
    columns, rows = driver(cfg, seed, threads=threads, **kwargs)
    elapsed = time.perf_counter() - start
    results = out / "results.csv"
    write_csv(results, columns, rows)
    outputs = [results] + sorted((out / "records").glob("*")) if kwargs else [results]
    lines = [
        f"experiment: {experiment}",
        f"seed: {seed}",
        f"version: {__version__}",
        f"threads: {threads}",
        f"wall_clock_seconds: {elapsed:.3f}",
        "checksums:",
        *[f"  {p.relative_to(out)} sha256={_sha256(p)}" for p in outputs],
        "config:",
        *["  " + ln for ln in resolved_text(cfg).splitlines()],
    ]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")
    log.info("%s: %d rows in %.1f s -> %s", experiment, len(rows), elapsed, results)
    return results


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="renyi-probe", description="Randomized-measurement Renyi entropy experiments")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--seed", required=True, type=_u64)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--records", action="store_true", help="dump measurement records (estimate only)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        run(args.experiment, args.config, args.seed, args.out, args.threads, args.records)
    except (ConfigError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
