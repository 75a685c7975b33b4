"""Compare the compiled Newton kernel against the pure-NumPy fallback.

Two representative shapes: the loadings update (p feature problems over the
score design) and one SOC proximal pass (n sample problems over a loading
design with offset and proximal pull). Run from the repo root:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from ecca._kernels import newton_py

try:
    from ecca._kernels import _newton_cy
except ImportError:
    _newton_cy = None

KIND_BINOMIAL = newton_py.KIND_BINOMIAL


def loadings_case(rng, n=50, p=30, q=8):
    design = np.linalg.qr(rng.standard_normal((n, q)))[0]
    t_true = rng.standard_normal((p, q)) * 50
    theta = t_true @ design.T
    x = rng.binomial(100, 1 / (1 + np.exp(-theta / 100))) / 100.0
    t0 = np.zeros((p, q))
    return dict(x=x, design=design, t0=t0, kind=KIND_BINOMIAL, trials=100.0)


def soc_case(rng, n=50, p=20, q=4):
    design = rng.standard_normal((p, q)) * 30
    scores = np.linalg.qr(rng.standard_normal((n, q)))[0]
    base = rng.standard_normal((n, p)) * 5
    theta = base + scores @ design.T
    x = rng.binomial(100, 1 / (1 + np.exp(-theta / 100))) / 100.0
    return dict(x=x, design=design, t0=scores, kind=KIND_BINOMIAL,
                trials=100.0, offset=base, prox_weight=1000.0,
                prox_center=scores)


def run(fn, case, repeats):
    fn(**case)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        out = fn(**case)
    elapsed = (time.perf_counter() - start) / repeats
    return elapsed, out


def main():
    rng = np.random.default_rng(7)
    cases = {"loadings (50x30, q=8)": (loadings_case(rng), 200),
             "soc prox (50x20, q=4)": (soc_case(rng), 500)}
    print(f"{'case':<26} {'numpy':>12} {'cython':>12} {'speedup':>9}")
    for name, (case, repeats) in cases.items():
        t_py, out_py = run(newton_py.newton_rows, case, repeats)
        if _newton_cy is None:
            print(f"{name:<26} {t_py * 1e3:>10.3f}ms {'missing':>12}")
            continue
        t_cy, out_cy = run(_newton_cy.newton_rows, case, repeats)
        gap = np.max(np.abs(out_py[0] - out_cy[0]))
        print(f"{name:<26} {t_py * 1e3:>10.3f}ms {t_cy * 1e3:>10.3f}ms "
              f"{t_py / t_cy:>8.1f}x  (max |diff| {gap:.2e})")


if __name__ == "__main__":
    main()
