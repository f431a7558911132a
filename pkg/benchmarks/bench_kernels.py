"""Time the numba kernels against the numpy fallback on triplet-family workloads.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are called explicitly in one process; the first numba call
(compilation or cache load) is timed separately and excluded from the
steady-state numbers. Results are checked for agreement before timing.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np
import scipy.sparse as sp

from spinfact import _accel
from spinfact.lie import from_family


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n-strings", type=int, default=2000, help="rotations in the apply benchmark")
    ap.add_argument("--columns", type=int, default=16, help="state columns in the apply benchmark")
    args = ap.parse_args()

    mats = [sp.coo_matrix(m) for m in from_family("s4_triplet").mats]
    n = int(round(np.log2(mats[0].shape[0])))

    def decompose(backend):
        return [_accel.decompose_masks(m.row, m.col, m.data, n, backend=backend) for m in mats]

    rng = np.random.default_rng(0)
    dim = 2 ** n
    xs = rng.integers(0, dim, args.n_strings)
    zs = rng.integers(0, dim, args.n_strings)
    angles = rng.uniform(-np.pi, np.pi, args.n_strings)
    state = rng.normal(size=(dim, args.columns)) + 1j * rng.normal(size=(dim, args.columns))

    def apply(backend):
        return _accel.apply_rotations(state, xs, zs, angles, backend=backend)

    rows = {}
    if _accel.numba is None:
        print("numba unavailable; timing the numpy path only")
        backends = ["numpy"]
    else:
        backends = ["numba", "numpy"]
        t = time.perf_counter()
        decompose("numba"), apply("numba")
        rows["numba_first_call_s"] = time.perf_counter() - t
        a, b = decompose("numba"), decompose("numpy")
        for (x1, z1, h1), (x2, z2, h2) in zip(a, b):
            assert np.array_equal(x1, x2) and np.array_equal(z1, z2) and np.allclose(h1, h2, atol=1e-13)
        assert np.allclose(apply("numba"), apply("numpy"), atol=1e-10)

    for be in backends:
        rows[f"decompose_{be}_s"] = _best(lambda: decompose(be), args.repeat)
        rows[f"apply_{be}_s"] = _best(lambda: apply(be), args.repeat)
    if len(backends) == 2:
        rows["decompose_speedup"] = rows["decompose_numpy_s"] / rows["decompose_numba_s"]
        rows["apply_speedup"] = rows["apply_numpy_s"] / rows["apply_numba_s"]
    rows["workload"] = {"decompose_matrices": len(mats), "n_qubits": n, "apply_strings": args.n_strings,
                        "apply_columns": args.columns}
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
