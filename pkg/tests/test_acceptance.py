"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import math
import time

import numpy as np
import pytest

from liplab.bounds import dudley_entropy_integral, shallow_log_covering
from liplab.exact_lip import exact_lipschitz
from liplab.experiments import (
    collapse_sandwich,
    deep_lower_event,
    example_network,
    gradient_fd_check,
    isotropy_check,
    oracle_agreement,
    pattern_bound,
    scaling_shallow,
)
from scipy.special import erfc


def test_01_counterexample_exactness(record):
    t0 = time.perf_counter()
    r = exact_lipschitz(example_network(), sup_all=True)
    dt = time.perf_counter() - t0
    e1 = abs(r.lip - math.sqrt(2))
    e2 = abs(r.sup_all_patterns - math.sqrt(5))
    ok = e1 <= 1e-9 and e2 <= 1e-9 and dt < 1.0
    record("1 example net lip = sqrt2, pattern sup = sqrt5", ok, f"|err| {e1:.1e}, {e2:.1e}; {dt:.3f} s")


def test_02_collapse_sandwich(record):
    t0 = time.perf_counter()
    rep = collapse_sandwich(R=100, seed=2)
    dt = time.perf_counter() - t0
    bad = rep.aggregates["violations"]
    record("2 lip >= |W1 W0|/2 on 100 shallow nets", bad == 0 and dt < 30, f"{bad} violations; {dt:.1f} s")


def test_03_oracle_agreement(record):
    t0 = time.perf_counter()
    rep = oracle_agreement(R=50, d=2, max_N=5, max_L=2, n_samples=100_000, ball_radius=1e3, sphere_radius=1e6, seed=3)
    dt = time.perf_counter() - t0
    a = rep.aggregates
    ok = a["enumeration_below_sampling"] == 0 and a["agreements"] >= 0.95 * 50 and dt < 300
    record("3 enumeration vs sampling oracle", ok,
           f"{a['agreements']}/50 agree within 1e-9, {a['enumeration_below_sampling']} below; {dt:.1f} s")


def test_04_pattern_bound(record):
    rep = pattern_bound(R=100, max_d=2, max_N=8, max_L=2, seed=4)
    a = rep.aggregates
    record("4 pattern count <= (eN/(d+1))^(L(d+1))", a["violations"] == 0,
           f"{a['violations']} violations, max count/bound {a['max_count_over_bound']:.3g}")


@pytest.mark.slow
def test_05_shallow_scaling(record):
    t0 = time.perf_counter()
    rep = scaling_shallow(ds=(2, 4, 8, 16), Ns=(64,), R=200, lip_method="auto", seed=5)
    dt = time.perf_counter() - t0
    slope = rep.aggregates["slope_N=64"]
    ratios = {d: rep.aggregates[f"d={d},N=64"]["median_ratio_sqrt_d"] for d in (2, 4, 8, 16)}
    lo = 1 / (4 * math.sqrt(2))
    ok = 0.4 <= slope <= 0.6 and all(lo <= r <= 20 for r in ratios.values()) and dt < 900
    detail = f"slope {slope:.3f}; median lip/sqrt(d) " + ", ".join(f"d={d}: {r:.3f}" for d, r in ratios.items())
    record("5 shallow scaling lip ~ sqrt(d)", ok, f"{detail}; {dt:.0f} s")


def test_06_isotropy(record):
    t0 = time.perf_counter()
    x = np.array([1.0, 1.0, 0.0, 0.0]) / math.sqrt(2)
    rep = isotropy_check(k=4, N=32, x=x, bias={"kind": "gaussian", "sigma": 1.0}, M=100_000, seed=6)
    dt = time.perf_counter() - t0
    err = rep.aggregates["frobenius_error"]
    record("6 isotropy |Sigma_hat - I|_F <= 0.05", err <= 0.05 and dt < 60, f"{err:.4f}; {dt:.1f} s")


def test_07_deep_lower_event(record):
    t0 = time.perf_counter()
    rep = deep_lower_event(d=4, N=256, L=2, bias="zero", R=500, seed=7)
    cont = deep_lower_event(d=4, N=256, L=2, bias={"kind": "gaussian", "sigma": 1.0}, R=500, seed=7)
    dt = time.perf_counter() - t0
    f = rep.aggregates["freq_grad_ge_sqrt_d_over_4"]
    fd = cont.aggregates["freq_differentiable_at_x0"]
    ok = f >= 0.9 and fd == 1.0 and dt < 120
    record("7 deep lower-bound event", ok, f"freq |grad| >= sqrt(d)/4 = {f:.3f}; differentiable {fd:.3f}; {dt:.1f} s")


def test_08_gradient_fd(record):
    rep = gradient_fd_check(R=1000, min_margin=1e-4, h=1e-5, rtol=1e-6, seed=8)
    a = rep.aggregates
    record("8 finite differences match gradient_at", a["failures"] == 0,
           f"{1000 - a['failures']}/1000 pairs, worst rel. error {a['worst_rel_error']:.1e}")


def test_09_dudley_quadrature(record):
    got = dudley_entropy_integral(shallow_log_covering(1.0, 1), 1.0)
    t0 = math.sqrt(math.log(9.0))
    oracle = 9.0 * (t0 * math.exp(-t0 * t0) + math.sqrt(math.pi) / 2 * erfc(t0))
    rel = abs(got - oracle) / oracle
    record("9 entropy integral vs erfc closed form", rel <= 1e-5, f"{got:.10f} vs {oracle:.10f}, rel. error {rel:.1e}")


def test_10_determinism(record):
    runs = {
        "collapse_sandwich": lambda th: collapse_sandwich(R=12, seed=10, threads=th),
        "oracle_agreement": lambda th: oracle_agreement(R=6, n_samples=2000, seed=10, threads=th),
        "scaling_shallow": lambda th: scaling_shallow(ds=(2, 4), R=4, n_samples=500, hill_climb=5, seed=10, threads=th),
        "deep_lower_event": lambda th: deep_lower_event(N=64, R=8, seed=10, threads=th),
        "isotropy_check": lambda th: isotropy_check(k=3, N=8, M=25_000, seed=10, threads=th),
    }
    diffs = []
    for name, fn in runs.items():
        texts = {fn(th).rows_csv() for th in (1, 2, 3)}
        if len(texts) != 1:
            diffs.append(name)
    record("10 rows.csv identical for 1, 2, 3 workers", not diffs,
           f"{len(runs) - len(diffs)}/{len(runs)} experiments identical" + (f", differ: {diffs}" if diffs else ""))
