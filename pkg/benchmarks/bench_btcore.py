"""Benchmark: compiled kernels vs the pure-NumPy fallback.

Times the per-iteration kernels and a full strength estimation at the
production problem size (15 items) and a couple of others.

    python benchmarks/bench_btcore.py
"""

import time

import numpy as np

from hapref import _btcore_py

try:
    from hapref import _btcore
except ImportError:
    _btcore = None


def random_wins(rng, n, alpha=0.01):
    wins = rng.integers(0, 4, size=(n, n)).astype(float) + alpha
    np.fill_diagonal(wins, 0.0)
    return np.ascontiguousarray(wins)


def time_call(fn, *args, repeat=2000):
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def estimate(core, wins, tol=1e-8, max_iter=10_000):
    n = wins.shape[0]
    pi = np.ones(n)
    theta = np.zeros(n)
    for it in range(1, max_iter + 1):
        pi = np.ascontiguousarray(core.ilsr_pi_step(wins, pi))
        new = np.log(pi)
        new -= new.mean()
        delta = np.abs(new - theta).max()
        theta = new
        pi = np.exp(theta)
        if delta < tol:
            return it
    return max_iter


def main():
    if _btcore is None:
        print("compiled kernels not built; run pip install -e . first")
        return
    rng = np.random.default_rng(0)
    rows = []
    for n in (5, 15, 30):
        wins = random_wins(rng, n)
        pi = np.ones(n)
        theta = np.ascontiguousarray(rng.normal(0, 1, n))
        for label, fn_c, fn_py, args in (
            (f"ilsr_pi_step          n={n:2d}", _btcore.ilsr_pi_step,
             _btcore_py.ilsr_pi_step, (wins, pi)),
            (f"mm_pi_step            n={n:2d}", _btcore.mm_pi_step,
             _btcore_py.mm_pi_step, (wins, pi)),
            (f"matrix_log_likelihood n={n:2d}", _btcore.matrix_log_likelihood,
             _btcore_py.matrix_log_likelihood, (wins, theta)),
        ):
            t_c = time_call(fn_c, *args)
            t_py = time_call(fn_py, *args)
            rows.append((label, t_c, t_py))

    wins15 = random_wins(rng, 15)
    reps = 200
    t0 = time.perf_counter()
    for _ in range(reps):
        iters = estimate(_btcore, wins15)
    t_full_c = (time.perf_counter() - t0) / reps
    t0 = time.perf_counter()
    for _ in range(reps):
        estimate(_btcore_py, wins15)
    t_full_py = (time.perf_counter() - t0) / reps
    rows.append((f"full estimate ({iters} iter) n=15", t_full_c, t_full_py))

    print(f"{'kernel':<34} {'compiled':>12} {'python':>12} {'speedup':>9}")
    for label, t_c, t_py in rows:
        print(f"{label:<34} {t_c * 1e6:>10.1f}us {t_py * 1e6:>10.1f}us "
              f"{t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
