"""Timing comparison of the compiled kernels against the numpy fallback.

Run as a script:

    python benchmarks/bench_kernels.py [--repeats 20]

Times the cross-Gram builds and the marginal-likelihood evaluations on
shapes matching real fitting workloads (up to 100 observations, up to 20
channels) and prints one table row per case with the speedup ratio.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bora import _gram_np

try:
    from bora import _gram_cy
except ImportError:
    _gram_cy = None


def _time(fn, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _se_case(rng, n: int, d: int):
    x = rng.normal(0.0, 1.0, (n, d))
    ell = rng.uniform(0.3, 2.0, d)
    diff = x[:, None, :] - x[None, :, :]
    d2 = np.ascontiguousarray(diff * diff)
    y = rng.normal(0.0, 1.0, n)
    return x, ell, d2, y


def _wse_case(rng, n: int, m: int):
    w = rng.dirichlet(np.ones(m), n)
    tv = np.ascontiguousarray(0.5 * np.abs(w[:, None, :] - w[None, :, :]).sum(-1))
    y = rng.normal(0.0, 1.0, n)
    return w, tv, y


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    if _gram_cy is None:
        print("compiled backend unavailable; nothing to compare")
        return 1

    rng = np.random.default_rng(0)
    rows = []

    for n, d in [(30, 2), (100, 2), (100, 20)]:
        x, ell, d2, y = _se_case(rng, n, d)
        rows.append((
            f"se_cross_gram n={n} d={d}",
            _time(lambda: _gram_np.se_cross_gram(x, x, ell, 1.0), args.repeats),
            _time(lambda: _gram_cy.se_cross_gram(x, x, ell, 1.0), args.repeats),
        ))
        inv_ell2 = 1.0 / ell**2
        rows.append((
            f"lml_se        n={n} d={d}",
            _time(lambda: _gram_np.lml_se(d2, inv_ell2, 1.0, 0.1, y), args.repeats),
            _time(lambda: _gram_cy.lml_se(d2, inv_ell2, 1.0, 0.1, y), args.repeats),
        ))

    for n, m in [(30, 2), (100, 2), (100, 20)]:
        w, tv, y = _wse_case(rng, n, m)
        rows.append((
            f"wse_cross_gram n={n} m={m}",
            _time(lambda: _gram_np.wse_cross_gram(w, w, 2.0, 0.5, 1.0), args.repeats),
            _time(lambda: _gram_cy.wse_cross_gram(w, w, 2.0, 0.5, 1.0), args.repeats),
        ))
        rows.append((
            f"lml_wse        n={n} m={m}",
            _time(lambda: _gram_np.lml_wse(tv, 2.0, 0.5, 1.0, 0.1, y), args.repeats),
            _time(lambda: _gram_cy.lml_wse(tv, 2.0, 0.5, 1.0, 0.1, y), args.repeats),
        ))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numpy':>10}  {'cython':>10}  {'speedup':>7}")
    for name, t_np, t_cy in rows:
        print(f"{name:<{width}}  {t_np * 1e6:>8.1f}us  {t_cy * 1e6:>8.1f}us  {t_np / t_cy:>6.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
