"""Rerun configs under several seeds and report whether each row's verdict is stable.

    python3 scripts/seed_stability.py [--seeds 1 2 3 4 5] [--only NAME ...]
"""

import argparse
from collections import defaultdict
from pathlib import Path

from rarelab.expcli import parse_config, run_experiment
from rarelab.processes import resolve_threads

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    ap.add_argument("--only", nargs="*", default=None)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()

    unstable = 0
    for path in sorted((ROOT / "configs").glob("*.toml")):
        if args.only and path.stem not in args.only:
            continue
        cfg = parse_config(path)
        stats, verdicts = defaultdict(list), defaultdict(set)
        for seed in args.seeds:
            for r in run_experiment(cfg, seed, resolve_threads(args.threads)).rows:
                stats[(r.l, r.test)].append(r.stat)
                verdicts[(r.l, r.test)].add(r.passed)
        for (l, test), vals in stats.items():
            stable = len(verdicts[(l, test)]) == 1
            unstable += not stable
            shown = " ".join(f"{v:.4f}" for v in vals)
            print(f"{path.stem:28s} l={l:<4d} {test:32s} [{shown}] max={max(vals):.4f} "
                  f"{'stable' if stable else 'UNSTABLE'}")
    return 1 if unstable else 0


if __name__ == "__main__":
    raise SystemExit(main())
