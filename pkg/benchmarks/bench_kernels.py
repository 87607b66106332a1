"""Time the compiled kernels against the numpy / pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--out bench.csv]

Each case runs on every importable backend; the fastest of ``--repeat`` runs
is reported together with the speedup of the compiled backend.
"""

from __future__ import annotations

import argparse
import csv
import sys
import timeit

import numpy as np

from ranklab import kernels
from ranklab.core import all_permutations, bin_rel_rows, relevance_grid, relevance_index
from ranklab.losses import LossSpec, loss_table


def _loss_grid_case(name, K, B, p):
    P, Y = all_permutations(K), relevance_grid(K, B)
    code = kernels.LOSS_CODES[name]
    return f"loss_grid {name} K={K} B={B}", lambda mod: mod.loss_grid(code, P, Y, p)


def _subadditivity_case(K, B, p, c):
    L = np.ascontiguousarray(loss_table(LossSpec("sum", p), K, B))
    P = all_permutations(K)
    bidx = np.ascontiguousarray(
        np.stack([relevance_index(bin_rel_rows(P, j), B) for j in range(1, p + 1)], axis=1)
    )
    return f"subadditivity sum@{p} K={K} B={B}", lambda mod: mod.subadditivity_violations(L, bidx, c, 1e-9)


def _shatter_case(n_points, n_rows, seed=0):
    rng = np.random.default_rng(seed)
    rows = [int(v) for v in rng.integers(0, 2 ** n_points, size=n_rows)]
    return f"max_shattered n={n_points} rows={n_rows}", lambda mod: mod.max_shattered(rows, n_points, n_points)


CASES = [
    _loss_grid_case("sum", 5, 2, 2),
    _loss_grid_case("ap", 6, 1, 6),
    _loss_grid_case("dcg", 5, 2, 3),
    _loss_grid_case("auc", 6, 1, 6),
    _subadditivity_case(4, 2, 2, 4.0),
    _subadditivity_case(5, 1, 2, 4.0),
    _shatter_case(10, 200),
    _shatter_case(14, 600),
]


def run(repeat: int = 5):
    backends = kernels.available_backends()
    rows = []
    for label, fn in CASES:
        row = {"case": label}
        for name, mod in backends.items():
            fn(mod)  # warm up caches and lazy imports
            row[f"{name}_ms"] = 1e3 * min(timeit.repeat(lambda: fn(mod), number=1, repeat=repeat))
        if "cython" in backends:
            row["speedup"] = row["python_ms"] / max(row["cython_ms"], 1e-9)
        rows.append(row)
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--out", help="optional CSV path")
    args = ap.parse_args(argv)

    rows = run(args.repeat)
    cols = list(rows[0])
    if "cython" not in kernels.available_backends():
        print("compiled kernels not built; timing the fallback only", file=sys.stderr)
    print(f"{'case':<36}" + "".join(f"{c:>14}" for c in cols[1:]))
    for r in rows:
        print(f"{r['case']:<36}" + "".join(f"{r[c]:>14.3f}" for c in cols[1:]))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
