"""Compare Gram assembly time between the compiled extension and the numpy fallback.

Usage::

    python3 benchmarks/bench_gram.py [--sizes 50 100 200] [--repeat 5]

Both backends are checked for agreement before timing.
"""
import argparse
import timeit

import numpy as np

from gpforecast import _backend


def points(rng, n):
    return np.column_stack([np.arange(1.0, n + 1.0), rng.normal(size=(n, 3))])


def best_of(fn, repeat):
    number = 1
    # scale the inner loop so one measurement takes about 0.1 s
    while timeit.timeit(fn, number=number) < 0.1 and number < 1 << 16:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    ext = _backend.extension()
    if ext is None:
        parser.exit(1, "compiled extension unavailable; build it with pip install -e . first\n")
    rng = np.random.default_rng(0)
    theta = rng.uniform(-1.0, 1.0, 12)
    nat = np.exp(theta)

    print(f"{'n':>5} {'grads':>5} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n in args.sizes:
        X = points(rng, n)
        for grads in (False, True):
            K_py, G_py = _backend.python_gram(X, theta, grads)
            K_cy, G_cy = ext.gram_core(X, nat, grads)
            np.testing.assert_allclose(K_cy, K_py, rtol=1e-12, atol=1e-14)
            if grads:
                np.testing.assert_allclose(G_cy, G_py, rtol=1e-10, atol=1e-13)
            t_py = best_of(lambda: _backend.python_gram(X, theta, grads), args.repeat)
            t_cy = best_of(lambda: ext.gram_core(X, nat, grads), args.repeat)
            print(f"{n:>5} {str(grads):>5} {1e3 * t_py:>10.3f} {1e3 * t_cy:>10.3f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
