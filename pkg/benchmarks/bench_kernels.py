"""Compare the compiled kernels with the NumPy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--sizes 8 16 32] [--repeat 5]``.
Each kernel is timed on the same seeded input for both backends and the
outputs are cross-checked.
"""
import argparse
import timeit

import numpy as np

from wienerhinf import _pykernels

try:
    from wienerhinf import _kernels
except ImportError:  # extension not built
    _kernels = None


def _schur(mod, m):
    t = m.copy()
    q = np.eye(m.shape[0], dtype=np.complex128)
    mod.hessenberg_inplace(t, q)
    mod.schur_inplace(t, q, 30 * m.shape[0])
    mod.order_stable_first(t, q)
    return t, q


def _trsyl(mod, ta, tb, f):
    y = f.copy()
    mod.trsyl_inplace(ta, tb, y)
    return y


def cases(n, rng):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    ta = np.triu(m) + 2 * n * np.eye(n)
    tb = np.triu(m.T.copy()) + 2 * n * np.eye(n)
    f = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return {
        "schur": lambda mod: _schur(mod, np.ascontiguousarray(m)),
        "trsyl": lambda mod: _trsyl(mod, np.ascontiguousarray(ta), np.ascontiguousarray(tb), np.ascontiguousarray(f)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    print(f"{'kernel':<7} {'n':>4} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for n in args.sizes:
        for name, fn in cases(n, rng).items():
            t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat))
            if _kernels is None:
                print(f"{name:<7} {n:>4} {1e3 * t_py:>12.3f} {'n/a':>12} {'n/a':>8}")
                continue
            t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
            ref = fn(_pykernels)
            out = fn(_kernels)
            ref = ref[0] if isinstance(ref, tuple) else ref
            out = out[0] if isinstance(out, tuple) else out
            assert np.allclose(np.sort_complex(np.diag(ref)), np.sort_complex(np.diag(out)), atol=1e-8 * n)
            print(f"{name:<7} {n:>4} {1e3 * t_py:>12.3f} {1e3 * t_cy:>12.3f} {t_py / t_cy:>8.1f}")


if __name__ == "__main__":
    main()
