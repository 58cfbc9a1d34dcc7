"""Run theorem-level experiments at their default configs and write JSON reports.

Usage: python3 scripts/run_experiments.py [OUT_DIR] [ID ...]
"""

import sys
import time
from pathlib import Path

from fpplab.harness import EXPERIMENTS, run_experiment


def main(argv):
    out = Path(argv[0]) if argv else Path("reports")
    names = argv[1:] or sorted(EXPERIMENTS)
    out.mkdir(parents=True, exist_ok=True)
    for name in names:
        t = time.time()
        rep = run_experiment(name)
        rep.write(out / f"{name}.json")
        print(f"{name}: {rep.verdict} ({time.time() - t:.0f} s)", flush=True)
        for key, val in rep.checks.items():
            print(f"  {key}: {val}", flush=True)


if __name__ == "__main__":
    main(sys.argv[1:])
