"""Compare the compiled kernels with the pure-numpy fallback.

Usage:  python benchmarks/bench_kernels.py [--repeat N]

Times each kernel on identical inputs with both backends, checks the
outputs agree, and times one full training epoch (loss + parameter-shift
gradient) on each preset with either backend plugged in.
"""
import argparse
import timeit

import numpy as np

from latentqde import _kernels_py, kernels
from latentqde.presets import PRESETS, preset
from latentqde.training import Objective, TrainConfig

try:
    from latentqde import _kernels as compiled
except ImportError:  # pragma: no cover
    compiled = None


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_cases(rng):
    n, layers = 4, 7
    thetas = rng.uniform(-np.pi, np.pi, (2 * n * layers, n * layers))
    d = 16
    g = rng.normal(size=(64, d)) + 1j * rng.normal(size=(64, d))
    h = rng.normal(size=(64, d)) + 1j * rng.normal(size=(64, d))
    return [
        ("ansatz_states 56x(4q, 7 layers)", "ansatz_states", (thetas, n, layers)),
        ("chebyshev_product 64x16", "chebyshev_product", (g, h)),
        ("fourier_product 64x16", "fourier_product", (g, h)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'case':40s} {'compiled':>12s} {'python':>12s} {'speedup':>8s}")
    for label, name, inputs in kernel_cases(rng):
        a = getattr(compiled, name)(*inputs)
        b = getattr(_kernels_py, name)(*inputs)
        assert np.allclose(a, b, atol=1e-12), name
        tc = _time(lambda: getattr(compiled, name)(*inputs), args.repeat)
        tp = _time(lambda: getattr(_kernels_py, name)(*inputs), args.repeat)
        print(f"{label:40s} {tc * 1e3:10.3f}ms {tp * 1e3:10.3f}ms {tp / tc:7.1f}x")
    saved = kernels._impl
    try:
        for name in PRESETS:
            obj = Objective(preset(name), TrainConfig())
            params = obj.initial_params(0)
            times = {}
            for label, impl in (("compiled", compiled), ("python", _kernels_py)):
                kernels._impl = impl
                times[label] = _time(lambda: obj.value_and_grad(params), args.repeat)
            print(f"{'epoch ' + name:40s} {times['compiled'] * 1e3:10.3f}ms "
                  f"{times['python'] * 1e3:10.3f}ms {times['python'] / times['compiled']:7.1f}x")
    finally:
        kernels._impl = saved
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
