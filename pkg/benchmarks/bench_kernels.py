"""Compare the compiled and numpy sphere-ascent kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--json]

Each case runs ``sphere_extremum`` on a power-sum objective with both
backends, reports the best wall time over ``--repeat`` runs and checks that
the two backends agree on the extremum.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from pframes import OptimizerConfig, PowerSum, SphereProblem, sphere_extremum
from pframes import optimizer as opt

CASES = [
    # (name, k, rows, exponent, blocks)
    ("k=3 m=6 p=1.5", 3, 6, 1.5, False),
    ("k=3 m=6 p=3", 3, 6, 3.0, False),
    ("k=5 m=12 p=3", 5, 12, 3.0, False),
    ("k=8 m=16 p=1.5", 8, 16, 1.5, False),
    ("k=6 m=12 p=3 product ratio", 6, 12, 3.0, True),
]


def make_objective(k: int, m: int, p: float, blocks: bool, seed: int = 0) -> PowerSum:
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((m, k))
    if not blocks:
        return PowerSum(rows, 1.0, p)
    half = k // 2
    rows[: m // 2, half:] = 0.0
    rows[m // 2:, :half] = 0.0
    return PowerSum(rows, 1.0, p, blocks=[0] * half + [1] * (k - half), bcoef=[1.0, 2.0], bexp=p)


def time_backend(name: str, obj: PowerSum, k: int, cfg: OptimizerConfig, repeat: int):
    best, value = float("inf"), None
    with opt.use_backend(name):
        for _ in range(repeat):
            t0 = time.perf_counter()
            lo = sphere_extremum(SphereProblem(k, obj, "min", cfg))
            hi = sphere_extremum(SphereProblem(k, obj, "max", cfg))
            best = min(best, time.perf_counter() - t0)
            value = (lo.value, hi.value)
    return best, value


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--starts", type=int, default=32)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    have = opt.available_backends()
    if "compiled" not in have:
        print("compiled kernel not built; only the numpy backend is available", file=sys.stderr)
        return 1
    cfg = OptimizerConfig(starts=args.starts, spectral_quadratic=False)
    rows = []
    for name, k, m, p, blocks in CASES:
        obj = make_objective(k, m, p, blocks)
        tc, vc = time_backend("compiled", obj, k, cfg, args.repeat)
        tp, vp = time_backend("python", obj, k, cfg, args.repeat)
        agree = all(abs(a - b) <= 1e-9 * max(abs(a), abs(b), 1e-300) for a, b in zip(vc, vp))
        rows.append({"case": name, "compiled_s": tc, "python_s": tp,
                     "speedup": tp / tc if tc > 0 else float("inf"), "agree": agree})

    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'case':32s} {'compiled':>10s} {'numpy':>10s} {'speedup':>8s}  agree")
        for r in rows:
            print(f"{r['case']:32s} {r['compiled_s'] * 1e3:8.2f}ms {r['python_s'] * 1e3:8.2f}ms "
                  f"{r['speedup']:7.1f}x  {r['agree']}")
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
