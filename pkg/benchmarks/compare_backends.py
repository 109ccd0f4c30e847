"""Time the group kernels on the compiled (blst) and pure-Python (py_ecc) backends.

    python3 benchmarks/compare_backends.py [--trials N] [--python-trials N]
"""

import argparse

from eepaeks.bench import compare_backends


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20, help="repetitions per kernel, native backend")
    ap.add_argument("--python-trials", type=int, default=2, help="repetitions per kernel, pure-Python backend")
    args = ap.parse_args()
    rows = compare_backends(args.trials, args.python_trials)
    print(f"{'kernel':<12}{'native ms':>12}{'python ms':>12}{'speed-up':>10}")
    for r in rows:
        nat, py = r.get("native_ns"), r.get("purepy_ns")
        fmt = lambda v: f"{v / 1e6:12.3f}" if v is not None else f"{'-':>12}"  # noqa: E731
        sp = f"{r['speedup']:9.0f}x" if "speedup" in r else f"{'-':>10}"
        print(f"{r['kernel']:<12}{fmt(nat)}{fmt(py)}{sp}")


if __name__ == "__main__":
    main()
