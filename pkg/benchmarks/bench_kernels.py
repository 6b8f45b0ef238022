"""Time the compiled kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--max-bits B]

Each kernel is checked for bitwise agreement before it is timed.
"""
import argparse
import timeit

import numpy as np

from dysonrg import _kernels_py

try:
    from dysonrg import _ckernels
except ImportError:
    _ckernels = None


def _best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench_wht(bits, repeat, rng):
    a = rng.normal(size=1 << bits)

    def py():
        x = a.copy()
        _kernels_py.wht_inplace(x)
        return x

    def cy():
        x = a.copy()
        _ckernels.wht_inplace(x, 1)
        return x

    assert np.array_equal(py(), cy())
    return _best(py, repeat), _best(cy, repeat)


def bench_wht_interval(bits, repeat, rng):
    mid = rng.normal(size=1 << bits)
    lo, hi = mid - 1e-12, mid + 1e-12

    def py():
        x, y = lo.copy(), hi.copy()
        _kernels_py.wht_interval_inplace(x, y)
        return x, y

    def cy():
        x, y = lo.copy(), hi.copy()
        _ckernels.wht_interval_inplace(x, y, 1)
        return x, y

    (a, b), (c, d) = py(), cy()
    assert np.array_equal(a, c) and np.array_equal(b, d)
    return _best(py, repeat), _best(cy, repeat)


def bench_pair_energies(n, repeat, rng):
    k = rng.uniform(size=(n, n))
    k = np.triu(k, 1) + np.triu(k, 1).T

    def py():
        return _kernels_py.pair_energies(k)

    def cy():
        return _ckernels.pair_energies(k)

    assert np.allclose(py(), cy(), rtol=1e-13, atol=1e-12)
    return _best(py, repeat), _best(cy, repeat)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--max-bits", type=int, default=20)
    args = parser.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    rng = np.random.default_rng(0)
    rows = []
    for bits in range(8, args.max_bits + 1, 4):
        rows.append(("wht", f"2^{bits}", *bench_wht(bits, args.repeat, rng)))
    for bits in range(8, args.max_bits + 1, 4):
        rows.append(("wht_interval", f"2^{bits}", *bench_wht_interval(bits, args.repeat, rng)))
    for n in (8, 12, 16, 20):
        rows.append(("pair_energies", f"{n} sites", *bench_pair_energies(n, args.repeat, rng)))
    print(f"{'kernel':<15}{'size':>10}{'numpy (s)':>14}{'cython (s)':>14}{'speedup':>10}")
    for name, size, t_py, t_cy in rows:
        print(f"{name:<15}{size:>10}{t_py:>14.3e}{t_cy:>14.3e}{t_py / t_cy:>10.1f}")


if __name__ == "__main__":
    main()
