"""
Compare the numba kernels against the pure-numpy fallback.

Two levels are timed:

* the kernels themselves (truncated jet product and the SS-HOPM sweep),
  called in-process with identical inputs;
* the full ``check`` pipeline, run in a subprocess with
  ``CENTROAFFINE_DISABLE_NUMBA`` set to 0 and to 1.

Usage::

    python3 benchmarks/bench_jet_kernels.py [--repeat 5] [--nvars 3] [--samples 20]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time

import numpy as np

from centroaffine import _kernels, jets


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def bench_mul(nvars, batch, repeat):
    sp = jets.space(nvars)
    rng = np.random.default_rng(0)
    a = rng.normal(size=(batch, sp.size))
    b = rng.normal(size=(batch, sp.size))
    args = (sp._ia, sp._ib, sp._ic, sp._starts)
    rows = {"numpy": best_of(lambda: _kernels.mul_numpy(a, b, *args), repeat)}
    if _kernels.HAVE_NUMBA:
        _kernels.mul_numba(a, b, *args)  # compile outside the timing
        rows["numba"] = best_of(lambda: _kernels.mul_numba(a, b, *args), repeat)
    return rows


def bench_sshopm(n, nstarts, repeat):
    rng = np.random.default_rng(1)
    t = rng.normal(size=(n, n, n))
    cubic = sum(np.transpose(t, p) for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]) / 6
    starts = rng.normal(size=(nstarts, n))
    alpha = 1.0 + np.linalg.norm(cubic)
    call = (cubic, starts, alpha, 1e-12, 500)
    rows = {"numpy": best_of(lambda: _kernels.sshopm_numpy(*call), repeat)}
    if _kernels.HAVE_NUMBA:
        _kernels.sshopm_numba(*call)
        rows["numba"] = best_of(lambda: _kernels.sshopm_numba(*call), repeat)
    return rows


def bench_pipeline(surface, samples, disable):
    env = dict(os.environ, **{_kernels.DISABLE_ENV: "1" if disable else "0"})
    env.pop("CAFF_JOBS", None)
    cmd = [sys.executable, "-m", "centroaffine", "check", surface, "--samples", str(samples),
           "--checks", "inequality,residuals,ejiri", "--json"]
    t0 = time.perf_counter()
    subprocess.run(cmd, env=env, check=True, stdout=subprocess.DEVNULL)
    return time.perf_counter() - t0


def report(title, rows):
    print(title)
    for name, (best, median) in rows.items():
        print(f"  {name:<6} best {best * 1e3:9.3f} ms   median {median * 1e3:9.3f} ms")
    if "numba" in rows:
        print(f"  speedup (best) {rows['numpy'][0] / rows['numba'][0]:.1f}x")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--nvars", type=int, default=3)
    parser.add_argument("--batch", type=int, default=200, help="jets multiplied per call")
    parser.add_argument("--samples", type=int, default=20, help="points in the pipeline run")
    parser.add_argument("--surface", default="perturbed_graph_3")
    args = parser.parse_args(argv)

    print(f"backend in this process: {_kernels.BACKEND}")
    report(f"jet product, nvars={args.nvars}, batch={args.batch}", bench_mul(args.nvars, args.batch, args.repeat))
    report(f"SS-HOPM, n={args.nvars}, {10 * args.nvars} starts", bench_sshopm(args.nvars, 10 * args.nvars, args.repeat))

    print(f"pipeline: check {args.surface} --samples {args.samples} (wall time incl. start-up and JIT)")
    for disable in (False, True):
        label = "numpy" if disable else "numba"
        print(f"  {label:<6} {bench_pipeline(args.surface, args.samples, disable):8.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
