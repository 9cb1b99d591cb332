"""Run every config in ``configs/`` and print a one-line verdict per report row.

    python3 scripts/run_all.py [--out-dir out] [--seed N] [--only NAME ...]
"""

import argparse
import time
from pathlib import Path

from rarelab.expcli import parse_config, run_experiment, write_outputs
from rarelab.processes import resolve_threads

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default=str(ROOT / "out"))
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--only", nargs="*", default=None, help="config stems to run")
    args = ap.parse_args()

    failed = 0
    for path in sorted((ROOT / "configs").glob("*.toml")):
        if args.only and path.stem not in args.only:
            continue
        cfg = parse_config(path)
        t0 = time.perf_counter()
        res = run_experiment(cfg, args.seed, resolve_threads(args.threads))
        write_outputs(cfg, res, Path(args.out_dir) / path.stem)
        dt = time.perf_counter() - t0
        for r in res.rows:
            failed += not r.passed
            print(f"{path.stem:28s} l={r.l:<4d} {r.test:32s} stat={r.stat:.5f} tol={r.tol:.3f} "
                  f"{'PASS' if r.passed else 'FAIL'}")
        print(f"{path.stem:28s} {dt:.1f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
