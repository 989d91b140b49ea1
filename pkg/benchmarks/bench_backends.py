"""Compare the compiled and numpy sweep kernels on the same inputs.

    python benchmarks/bench_backends.py [--repeat 20]

Prints time per multigroup sweep for each backend and checks that both
produce bitwise-identical angular fluxes.
"""

import argparse
import time

import numpy as np

from snrqi import kernels
from snrqi.geometry import build_quadrature

CASES = [
    # (label, (nx, ny, nz), groups, quadrature order)
    ("slab 60x1x1, 4 groups, S8", (60, 1, 1), 4, 8),
    ("box 8x8x8, 2 groups, S4", (8, 8, 8), 2, 4),
    ("box 12x12x12, 1 group, S8", (12, 12, 12), 1, 8),
]


def make_inputs(shape, groups, order, seed=0):
    rng = np.random.default_rng(seed)
    nx, ny, nz = shape
    nc = nx * ny * nz
    quad = build_quadrature(order)
    na = quad.nangles
    sigma_t = rng.uniform(0.5, 2.0, (groups, nc))
    source = rng.uniform(0.0, 1.0, (groups, na, nc))
    widths = [rng.uniform(0.5, 1.5, n) for n in shape]
    inflow = (rng.uniform(0, 1, (groups, na, nz, ny)), rng.uniform(0, 1, (groups, na, nz, nx)),
              rng.uniform(0, 1, (groups, na, ny, nx)))
    return sigma_t, source, np.ascontiguousarray(quad.directions), widths, inflow


def run(kernel, inputs):
    sigma_t, source, omega, widths, inflow = inputs
    g, na, nc = source.shape
    psi = np.empty((g, na, nc))
    out = tuple(np.empty_like(f) for f in inflow)
    kernel(sigma_t, source, omega, *widths, *inflow, psi, *out)
    return psi


def bench(kernel, inputs, repeat):
    run(kernel, inputs)
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        run(kernel, inputs)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()
    names = sorted(kernels.BACKENDS)
    if "compiled" not in names:
        print("compiled backend not built; timing the numpy fallback only")
    print(f"{'case':32s}" + "".join(f"{n:>14s}" for n in names) + f"{'speedup':>10s}  identical")
    for label, shape, groups, order in CASES:
        inputs = make_inputs(shape, groups, order)
        times = {n: bench(kernels.BACKENDS[n], inputs, args.repeat) for n in names}
        results = {n: run(kernels.BACKENDS[n], inputs) for n in names}
        same = all(np.array_equal(results[names[0]], r) for r in results.values())
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        row = "".join(f"{times[n] * 1e3:11.3f} ms" for n in names)
        print(f"{label:32s}{row}{speed:9.1f}x  {same}")


if __name__ == "__main__":
    main()
