"""Time the numeric kernels under both backends.

Each backend runs in its own interpreter because the choice is fixed at
import time through ``DIGROWTH_BACKEND``.

Usage:
    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeat 20 --output bench.json
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from digrowth import _jit, _kernels
from digrowth.config import load_network
from digrowth.network import SystemParams, assemble
from digrowth.analysis import sweep

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)

def metzler(n):
    A = rng.uniform(0, 1, (n, n))
    np.fill_diagonal(A, rng.uniform(-3, 1, n))
    return A

def timed(fn, *args):
    fn(*args)  # warm-up and compilation
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat

net = load_network("section33")
sys_ = assemble(net, SystemParams(0.01, 24.0))
gens = np.ascontiguousarray(np.stack([A for _, A in sys_.segments]))
durs = np.array([d for d, _ in sys_.segments])
M = _kernels.switched_product(durs, gens)
A6 = metzler(6)
out = {
    "backend": _jit.BACKEND,
    "expm_metzler_6x6": timed(_kernels.expm_metzler, A6, 3.0),
    "expm_pade_6x6": timed(_kernels.expm_pade, A6, 3.0),
    "switched_product_3x3": timed(_kernels.switched_product, durs, gens),
    "power_iteration_3x3": timed(_kernels.power_iteration, M / M.max(), 1e-12, 100000),
    "sweep_8x8": timed(lambda: sweep(net, np.geomspace(1e-4, 1, 8), np.linspace(10, 40, 8))),
}
print(json.dumps(out))
"""


def run(backend: str, repeat: int) -> dict:
    env = dict(os.environ, DIGROWTH_BACKEND=backend)
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--output", default=None)
    args = ap.parse_args()

    results = {b: run(b, args.repeat) for b in ("numpy", "numba")}
    keys = [k for k in results["numpy"] if k != "backend"]
    print(f"{'kernel':<24}{'numpy [us]':>14}{'numba [us]':>14}{'speedup':>10}")
    for k in keys:
        a, b = results["numpy"][k], results["numba"][k]
        print(f"{k:<24}{a * 1e6:>14.1f}{b * 1e6:>14.1f}{a / b:>10.1f}")
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
