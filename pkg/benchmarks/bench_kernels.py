"""Time the numba and numpy kernel backends on representative inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from grassrelay import _kernels
from grassrelay.numerics import RngStream, random_unit_vectors, sample_complex_gaussian_matrix


def ascent_case(seed=0, m=3, starts=12):
    gen = RngStream(seed).generator()
    H1 = sample_complex_gaussian_matrix(gen, m, m)
    H0 = sample_complex_gaussian_matrix(gen, m, m)
    return (H1.conj().T @ H1, H0.conj().T @ H0, 0.9, 0.5, random_unit_vectors(gen, starts, m),
            1e-10, 500, 1e-4, 0.5)


def packing_case(seed=0, dim=3, N=16):
    W0 = random_unit_vectors(RngStream(seed).generator(), N, dim)
    return W0, np.geomspace(0.1, 1e-4, 6), 100, 0.2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = {"numpy": _kernels.numpy_impl}
    if _kernels.numba_impl is not None:
        impls["numba"] = _kernels.numba_impl
    cases = {"sphere_ascent (m=3, 12 starts)": ("sphere_ascent", ascent_case()),
             "packing_refine (dim 3, N=16, 600 steps)": ("packing_refine", packing_case())}
    print(f"active backend: {_kernels.BACKEND}")
    for label, (fn, inputs) in cases.items():
        times = {}
        for name, mod in impls.items():
            call = getattr(mod, fn)
            call(*inputs)  # compile / warm up
            number = 20 if fn == "sphere_ascent" else 2
            best = min(timeit.repeat(lambda: call(*inputs), number=number, repeat=args.repeat)) / number
            times[name] = best
        row = "  ".join(f"{k} {v * 1e3:8.3f} ms" for k, v in times.items())
        speed = f"  speedup x{times['numpy'] / times['numba']:.1f}" if "numba" in times else ""
        print(f"{label:42s} {row}{speed}")


if __name__ == "__main__":
    main()
