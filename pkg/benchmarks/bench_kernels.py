"""Compiled vs numpy kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each row times the same inputs through both backends and reports the speedup
and the largest difference between their outputs.
"""
import argparse
import time
import warnings

import numpy as np

from liesynth import kernels
from liesynth.control import build_control_basis, components_in_basis
from liesynth.matrix_core import BranchAmbiguityWarning, mat_log_unitary
from liesynth.reproduce import jxi
from liesynth.wei_norman import WeiNormanProblem, find_coordinates


def best_of(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases(rng):
    a4 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    a15 = rng.normal(size=(15, 15))
    basis = build_control_basis()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BranchAmbiguityWarning)
        x = components_in_basis(mat_log_unitary(jxi()), basis)
    prob = WeiNormanProblem.from_basis(basis.matrices, x)
    tau = rng.uniform(-0.2, 0.2, 15)

    def loop(k, fn):
        return lambda: [fn() for _ in range(k)][-1]

    return [
        ("expm 4x4 complex (x1000)", loop(1000, lambda: kernels.expm(a4))),
        ("expm 15x15 real (x1000)", loop(1000, lambda: kernels.expm(a15))),
        ("wn_rhs 15-dim (x1000)", loop(1000, lambda: kernels.wn_rhs(prob.adjoint_mats, tau, x)[0])),
        ("Wei-Norman j x i, dt 1e-3", lambda: find_coordinates(prob)[0]),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    have = kernels.available_backends()
    if "compiled" not in have:
        print("compiled extension not built; only the python backend is available")
    print(f"{'kernel':<28}{'python s':>10}{'compiled s':>12}{'speedup':>9}{'max diff':>10}")
    for name, _ in cases(np.random.default_rng(0)):
        times, outs = {}, {}
        for backend in have:
            with kernels.use_backend(backend):
                fn = dict(cases(np.random.default_rng(0)))[name]
                times[backend], outs[backend] = best_of(fn, args.repeat)
        py = times["python"]
        if "compiled" in times:
            c = times["compiled"]
            diff = float(np.abs(np.asarray(outs["python"]) - np.asarray(outs["compiled"])).max())
            print(f"{name:<28}{py:>10.4f}{c:>12.4f}{py / c:>8.1f}x{diff:>10.1e}")
        else:
            print(f"{name:<28}{py:>10.4f}{'-':>12}{'-':>9}{'-':>10}")


if __name__ == "__main__":
    main()
