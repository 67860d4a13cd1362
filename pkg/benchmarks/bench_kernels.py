"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--traces 2000] [--samples 500] [--draws 20000] [--threads 1]

Each kernel runs on identical inputs in both backends; the outputs are
compared before the timings are reported.
"""
import argparse
import time

import numpy as np

from adla import _backend, _fallback, _ziggurat


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--traces", type=int, default=2000)
    ap.add_argument("--samples", type=int, default=500)
    ap.add_argument("--draws", type=int, default=20000, help="Monte Carlo draws of the limiting series")
    ap.add_argument("--j-max", type=int, default=1000)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if _backend.NAME != "cython":
        raise SystemExit("compiled kernels are not available; build them with "
                         "`python setup.py build_ext --inplace`")
    fast, slow = _backend.kernels, _fallback

    rng = np.random.default_rng(0)
    xs = np.ascontiguousarray(rng.standard_normal((args.samples, args.traces)))
    ys = np.ascontiguousarray(rng.standard_normal((args.samples, args.traces)) + 0.01)
    key = _ziggurat.seed_key(1)
    zig = (_ziggurat.KI, _ziggurat.WI, _ziggurat.FI, _ziggurat.ZIGGURAT_R)

    cases = {
        f"welch_columns {args.samples}x{args.traces}":
            (lambda k: k.welch_columns(xs, ys, args.threads), lambda o: np.asarray(o[0])),
        f"ad_columns    {args.samples}x{args.traces}":
            (lambda k: k.ad_columns(xs, ys, args.threads), np.asarray),
        f"a2inf_draws   {args.draws} x j_max={args.j_max}":
            (lambda k: k.a2inf_draws(args.draws, args.j_max, key, 0, *zig, args.threads), np.asarray),
    }

    print(f"{'kernel':44s} {'cython s':>10s} {'numpy s':>10s} {'speedup':>8s}  max rel diff")
    for name, (run, pick) in cases.items():
        t_fast, out_fast = best_of(lambda: run(fast), args.repeat)
        t_slow, out_slow = best_of(lambda: run(slow), 1)
        a, b = pick(out_fast), pick(out_slow)
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        print(f"{name:44s} {t_fast:10.4f} {t_slow:10.4f} {t_slow / t_fast:8.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
