"""Time the numba kernels against the interpreted fallback on the same workload.

    python benchmarks/bench_kernels.py [--scale N] [--heavy]

Each backend runs in its own process because the choice is made at import.
The numba run is repeated once so compilation (cached on disk) is excluded.
"""

import argparse
import json
import os
import subprocess
import sys

HERE = os.path.dirname(os.path.abspath(__file__))


def run_backend(no_numba, scale, heavy):
    env = dict(os.environ, PCSP_NO_NUMBA="1" if no_numba else "0")
    cmd = [sys.executable, os.path.join(HERE, "workload.py"), str(scale)] + (["--heavy"] if heavy else [])
    r = subprocess.run(cmd,
                       env=env, capture_output=True, text=True, check=True)
    return json.loads(r.stdout)


def main():
    p = argparse.ArgumentParser(description="numba vs interpreted kernels")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--heavy", action="store_true", help="add the olsak (K3,K5) indicator search")
    args = p.parse_args()
    run_backend(False, args.scale, args.heavy)          # warm the compile cache
    fast = run_backend(False, args.scale, args.heavy)
    slow = run_backend(True, args.scale, args.heavy)
    same = fast["results"] == slow["results"]
    print(f"{'stage':<18}{'numba s':>10}{'python s':>10}{'speedup':>9}")
    for stage in fast["times"]:
        a, b = fast["times"][stage], slow["times"][stage]
        print(f"{stage:<18}{a:>10.3f}{b:>10.3f}{b / a:>8.1f}x")
    print(f"results identical: {same}")
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
