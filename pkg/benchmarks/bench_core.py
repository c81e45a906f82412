"""Compare the compiled core with the numpy fallback on the two hot loops.

    python3 benchmarks/bench_core.py [--repeat 5]

Prints the best wall time of each backend and the speed-up, and checks that
both produce the same output.
"""

import argparse
import timeit

import numpy as np

from kme_decon import _fallback

try:
    from kme_decon import _core
except ImportError:
    _core = None


def cases():
    rng = np.random.default_rng(0)
    for n, d in ((500, 1), (2000, 1), (2000, 5)):
        a = rng.normal(size=(n, d))
        ls = np.full(d, 0.7)
        yield f"gram n={n} d={d}", "gaussian_gram", (a, a, ls, 1.0)
    for r, s in ((512, 1000), (2048, 1000)):
        grid = np.linspace(0, 5, r)[:, None]
        g = _fallback.gaussian_gram(grid, grid, np.array([0.3]), 1.0)
        mu = g @ rng.dirichlet(np.ones(r))
        yield f"herd R={r} S={s}", "herd", (mu, g, s, False)


def best_time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _core is None:
        print("compiled core not built; only the fallback is available")
    print(f"{'case':<22}{'python [ms]':>13}{'cython [ms]':>13}{'speed-up':>10}  same")
    for name, func, call in cases():
        slow_fn = getattr(_fallback, func)
        t_slow = best_time(slow_fn, call, args.repeat)
        if _core is None:
            print(f"{name:<22}{t_slow * 1e3:>13.2f}{'-':>13}{'-':>10}")
            continue
        fast_fn = getattr(_core, func)
        t_fast = best_time(fast_fn, call, args.repeat)
        out_slow, out_fast = slow_fn(*call), fast_fn(*call)
        if func == "herd":
            same = np.array_equal(out_slow[0], np.asarray(out_fast[0]))
        else:
            same = np.allclose(out_slow, out_fast, rtol=1e-14, atol=0)
        print(f"{name:<22}{t_slow * 1e3:>13.2f}{t_fast * 1e3:>13.2f}{t_slow / t_fast:>9.1f}x  {same}")


if __name__ == "__main__":
    main()
