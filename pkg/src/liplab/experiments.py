"""Monte Carlo verification harness.

Every experiment is a list of independent trials.  Trial ``i`` draws all of
its randomness from ``derive_trial_rng(master_seed, i)``, so the per-trial
rows do not depend on how many workers run them or in which order.  Rows are
folded into aggregates in trial order.

Checks are split into assertive ones (constant-free or construction-exact
claims, which decide the exit status) and descriptive ones (claims that carry
unknown absolute constants, reported but never failed).
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import bounds
from .estimators import (
    fixed_point_report,
    pattern_hill_climb,
    sample_points,
    sampled_lip_search,
    shallow_collapse_lower,
)
from .exact_lip import (
    ALL_REALIZABLE,
    Budget,
    BudgetExceeded,
    enumerate_regions,
    estimated_region_count,
    exact_lipschitz,
    pattern_count_bound,
)
from .feasibility import IndeterminateError
from .net_core import evaluate, gradient_at, linear_collapse, make_network
from .rand_init import BiasSpec, derive_trial_rng, sample_network_widths

ROW_FIELDS = ("experiment", "trial", "d", "N", "L", "seed", "quantity", "value")


def wilson(k: int, n: int, z: float = 3.0) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    assertive: bool = True

    def line(self) -> str:
        tag = ("PASS" if self.passed else "FAIL") if self.assertive else "INFO"
        return f"{tag} {self.name}: {self.detail}"


@dataclass
class ExperimentReport:
    name: str
    config: dict
    rows: list[dict] = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.assertive)

    def values(self, quantity: str, **where) -> np.ndarray:
        out = [
            r["value"]
            for r in self.rows
            if r["quantity"] == quantity and all(r[k] == v for k, v in where.items())
        ]
        return np.asarray(out, dtype=float)

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in self.rows:
            v = r["value"]
            w.writerow([r[k] for k in ROW_FIELDS[:-1]] + [repr(float(v))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "experiment": self.name,
            "config": self.config,
            "aggregates": self.aggregates,
            "checks": [
                {"name": c.name, "passed": c.passed, "assertive": c.assertive, "detail": c.detail}
                for c in self.checks
            ],
            "passed": self.passed,
        }

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "rows.csv").write_text(self.rows_csv())
        (out / "summary.json").write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n")


def default_threads() -> int:
    env = os.environ.get("LIPLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_trials(fn: Callable, jobs: list, threads: int = 1) -> list:
    """Apply ``fn`` to every job; results come back in job order."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    chunk = max(1, len(jobs) // (4 * threads))
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


def _row(exp, trial, d, N, L, seed, quantity, value):
    return {
        "experiment": exp,
        "trial": trial,
        "d": d,
        "N": N,
        "L": L,
        "seed": seed,
        "quantity": quantity,
        "value": float(value),
    }


def _flatten(results):
    return [row for rows in results for row in rows]


def _bias(obj) -> BiasSpec:
    return obj if isinstance(obj, BiasSpec) else BiasSpec.from_dict(obj)


# -- estimating lip inside a trial ----------------------------------------------


def estimate_lip(net, rng, method: str, n_samples: int, hill_climb: int, max_regions: float, budget_lps: int):
    """Returns (lip, method_used, sampled_lower); lip is None when exact failed."""
    X = np.vstack(
        [
            sample_points("gaussian", 1.0, n_samples, net.d, rng),
            sample_points("multiscale_ball", 1e3, n_samples, net.d, rng),
        ]
    )
    sb = sampled_lip_search(net, X)
    use_exact = method == "exact" or (method == "auto" and estimated_region_count(net) <= max_regions)
    if use_exact:
        try:
            res = exact_lipschitz(net, budget=Budget(max_lps=budget_lps))
            return res.lip, "exact", sb.value
        except (BudgetExceeded, IndeterminateError):
            return None, "exact", sb.value
    lip = sb.value
    if hill_climb > 0 and sb.point is not None:
        lip = pattern_hill_climb(net, sb.point, hill_climb).grad_norm
    return lip, "sampled", sb.value


# -- scaling law ----------------------------------------------------------------


def _scaling_trial(job):
    p, trial, d, N = job
    rng = derive_trial_rng(p["seed"], trial)
    net = sample_network_widths(d, (N,), _bias(p["bias"]), rng)
    lip, used, lower = estimate_lip(
        net, rng, p["lip_method"], p["n_samples"], p["hill_climb"], p["max_regions"], p["budget_lps"]
    )
    out = [_row("scaling_shallow", trial, d, N, 1, p["seed"], "sampled_lower", lower)]
    out.append(_row("scaling_shallow", trial, d, N, 1, p["seed"], "exact_method", used == "exact"))
    if lip is None:
        out.append(_row("scaling_shallow", trial, d, N, 1, p["seed"], "budget_failure", 1))
        return out
    out.append(_row("scaling_shallow", trial, d, N, 1, p["seed"], "lip", lip))
    out.append(_row("scaling_shallow", trial, d, N, 1, p["seed"], "ratio_sqrt_d", lip / math.sqrt(d)))
    return out


def scaling_shallow(
    ds=(2, 4, 8, 16),
    Ns=(64,),
    R: int = 200,
    lip_method: str = "auto",
    bias=None,
    seed: int = 0,
    n_samples: int = 2000,
    hill_climb: int = 50,
    max_regions: float = 500,
    budget_lps: int = 100_000,
    slope_window=(0.4, 0.6),
    ratio_window=(1 / (4 * math.sqrt(2)), 20.0),
    threads: int = 1,
) -> ExperimentReport:
    """lip of shallow nets against sqrt(d): per-cell medians and log-log slope.

    ``lip_method`` is ``exact``, ``sampled`` (samples refined by hill climbing)
    or ``auto`` (exact when the estimated region count is at most
    ``max_regions``).
    """
    if lip_method not in ("exact", "sampled", "auto"):
        raise ValueError("lip_method must be exact, sampled or auto")
    bias = _bias(bias or {"kind": "gaussian", "sigma": 1.0})
    p = dict(
        seed=seed,
        bias=bias.to_dict(),
        lip_method=lip_method,
        n_samples=n_samples,
        hill_climb=hill_climb,
        max_regions=max_regions,
        budget_lps=budget_lps,
    )
    jobs, trial = [], 0
    for N in Ns:
        for d in ds:
            for _ in range(R):
                jobs.append((p, trial, d, N))
                trial += 1
    rep = ExperimentReport(
        "scaling_shallow",
        dict(p, ds=list(ds), Ns=list(Ns), R=R, slope_window=list(slope_window), ratio_window=list(ratio_window)),
    )
    rep.rows = _flatten(run_trials(_scaling_trial, jobs, threads))

    threshold = 1 / (4 * math.sqrt(2))
    cells = {}
    for N in Ns:
        medians = []
        for d in ds:
            lips = rep.values("lip", d=d, N=N)
            failures = int(rep.values("budget_failure", d=d, N=N).sum())
            exact_share = float(rep.values("exact_method", d=d, N=N).mean())
            med = float(np.median(lips)) if lips.size else float("nan")
            medians.append(med)
            ratio = lips / math.sqrt(d)
            hits = int((ratio >= threshold).sum())
            cells[f"d={d},N={N}"] = {
                "n": int(lips.size),
                "budget_failures": failures,
                "exact_fraction": exact_share,
                "median_lip": med,
                "mean_lip": float(lips.mean()) if lips.size else float("nan"),
                "q10_lip": float(np.quantile(lips, 0.1)) if lips.size else float("nan"),
                "q90_lip": float(np.quantile(lips, 0.9)) if lips.size else float("nan"),
                "stderr_lip": float(lips.std(ddof=1) / math.sqrt(lips.size)) if lips.size > 1 else float("nan"),
                "median_ratio_sqrt_d": float(np.median(ratio)) if lips.size else float("nan"),
                "freq_lip_ge_sqrt_d_over_4sqrt2": hits / lips.size if lips.size else float("nan"),
            }
            lo, hi = ratio_window
            mr = cells[f"d={d},N={N}"]["median_ratio_sqrt_d"]
            rep.checks.append(
                Check(f"median lip/sqrt(d) in window, d={d} N={N}", bool(lo <= mr <= hi), f"{mr:.4f} in [{lo:.4f}, {hi}]")
            )
            k = hits
            wl, wh = wilson(k, lips.size)
            rep.checks.append(
                Check(
                    f"frequency lip >= sqrt(d)/(4 sqrt 2), d={d} N={N}",
                    True,
                    f"{k}/{lips.size}, 3-sigma Wilson [{wl:.3f}, {wh:.3f}]",
                    assertive=False,
                )
            )
        if len(ds) >= 2:
            slope = float(np.polyfit(np.log(ds), np.log(medians), 1)[0])
            cells[f"slope_N={N}"] = slope
            lo, hi = slope_window
            rep.checks.append(
                Check(f"log-log slope of median lip vs d, N={N}", bool(lo <= slope <= hi), f"{slope:.4f} in [{lo}, {hi}]")
            )
    order_ok = True
    for t in range(trial):
        lip = [r["value"] for r in rep.rows if r["trial"] == t and r["quantity"] == "lip"]
        low = [r["value"] for r in rep.rows if r["trial"] == t and r["quantity"] == "sampled_lower"]
        if lip and lip[0] < low[0] - 1e-9 * (1 + low[0]):
            order_ok = False
    rep.checks.append(Check("lip >= sampled lower bound in every trial", order_ok, f"{trial} trials"))
    rep.aggregates = cells
    return rep


# -- isotropy and sub-gaussian rows -----------------------------------------------


def _masked_rows(rng, k: int, N: int, x: np.ndarray, bias: BiasSpec, M: int) -> np.ndarray:
    """M independent rows of sqrt(N) * 1{w.x + b > 0} * w with w ~ N(0, 2/N I_k)."""
    W = math.sqrt(2.0 / N) * rng.standard_normal((M, k))
    b = bias.sample(rng, M)
    on = (W @ x + b) > 0
    return math.sqrt(N) * on[:, None] * W


def _isotropy_chunk(job):
    seed, idx, k, N, x, bias, m = job
    rng = derive_trial_rng(seed, idx)
    V = _masked_rows(rng, k, N, np.asarray(x), _bias(bias), m)
    P = V[:, :, None] * V[:, None, :]
    return P.sum(axis=0), (P * P).sum(axis=0), m


ISO_CHUNK = 10_000


def isotropy_check(
    k: int = 4,
    N: int = 32,
    x=None,
    bias=None,
    M: int = 100_000,
    seed: int = 0,
    tol: float = 0.05,
    threads: int = 1,
) -> ExperimentReport:
    x = np.full(k, 1.0) if x is None else np.asarray(x, dtype=float)
    if x.shape != (k,):
        raise ValueError("x must have length k")
    if not np.any(x != 0):
        raise ValueError("isotropy needs x != 0")
    bias = _bias(bias or "zero")
    control = not bias.symmetric
    jobs = []
    for idx, start in enumerate(range(0, M, ISO_CHUNK)):
        jobs.append((seed, idx, k, N, x.tolist(), bias.to_dict(), min(ISO_CHUNK, M - start)))
    parts = run_trials(_isotropy_chunk, jobs, threads)
    S = sum(p[0] for p in parts)
    S2 = sum(p[1] for p in parts)
    Sigma = S / M
    var = np.maximum(S2 / M - Sigma**2, 0.0)
    se = np.sqrt(var / M)
    err = Sigma - np.eye(k)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, err / se, 0.0)
    frob = float(np.linalg.norm(err))
    band = 3.0 * math.sqrt(float(var.sum()) / M)
    name = "isotropy_check"
    rep = ExperimentReport(
        name,
        {"k": k, "N": N, "x": x.tolist(), "bias": bias.to_dict(), "M": M, "seed": seed, "tol": tol,
         "negative_control": control},
    )
    for i in range(k):
        for j in range(k):
            rep.rows.append(_row(name, 0, k, N, 1, seed, f"sigma_{i}{j}", Sigma[i, j]))
            rep.rows.append(_row(name, 0, k, N, 1, seed, f"z_{i}{j}", z[i, j]))
    rep.rows.append(_row(name, 0, k, N, 1, seed, "frobenius_error", frob))
    rep.aggregates = {
        "frobenius_error": frob,
        "max_abs_z": float(np.abs(z).max()),
        "three_sigma_frobenius_band": band,
        "sigma_hat": Sigma.tolist(),
    }
    detail = f"|Sigma - I|_F = {frob:.5f} vs tol {tol} (3-sigma sampling band {band:.4f})"
    if control:
        rep.checks.append(Check("negative control: asymmetric bias", True, detail, assertive=False))
    else:
        rep.checks.append(Check("isotropic rows", frob <= tol, detail))
    return rep


def subgaussian_tail_check(
    k: int = 4,
    N: int = 32,
    x=None,
    bias=None,
    M: int = 1_000_000,
    n_directions: int = 3,
    s_grid=(0.0, 1.0, 2.0, 3.0, 4.0),
    seed: int = 0,
) -> ExperimentReport:
    """Tail frequencies of <row, y> against the envelope 2 exp(-s^2/8)."""
    x = np.full(k, 1.0) if x is None else np.asarray(x, dtype=float)
    if not np.any(x != 0):
        raise ValueError("the tail check needs x != 0")
    bias = _bias(bias or "zero")
    rng = derive_trial_rng(seed, 0)
    Y = rng.standard_normal((k, n_directions))
    Y[:, 0] = 0.0
    Y[0, 0] = 1.0
    Y /= np.linalg.norm(Y, axis=0, keepdims=True)
    counts = np.zeros((n_directions, len(s_grid)), dtype=np.int64)
    for idx, start in enumerate(range(0, M, 100_000)):
        m = min(100_000, M - start)
        V = _masked_rows(derive_trial_rng(seed, idx + 1), k, N, x, bias, m)
        P = np.abs(V @ Y)
        for si, s in enumerate(s_grid):
            counts[:, si] += (P >= s).sum(axis=0)
    name = "subgaussian_tail_check"
    rep = ExperimentReport(
        name, {"k": k, "N": N, "x": x.tolist(), "bias": bias.to_dict(), "M": M, "seed": seed, "s_grid": list(s_grid)}
    )
    ok = True
    proxies = []
    for j in range(n_directions):
        freqs = counts[j] / M
        for si, s in enumerate(s_grid):
            rep.rows.append(_row(name, j, k, N, 1, seed, f"tail_freq_s={s:g}", freqs[si]))
            lo, _ = wilson(int(counts[j, si]), M)
            if lo > min(1.0, 2.0 * math.exp(-s * s / 8.0)):
                ok = False
        s_arr = np.asarray(s_grid, dtype=float)
        use = (freqs > 0) & (s_arr > 0)
        if use.sum() >= 2:
            slope = np.polyfit(s_arr[use] ** 2, np.log(freqs[use]), 1)[0]
            proxy = math.sqrt(-1.0 / slope) if slope < 0 else float("inf")
        else:
            proxy = 0.0
        proxies.append(proxy)
        rep.rows.append(_row(name, j, k, N, 1, seed, "fitted_subgaussian_proxy", proxy))
    rep.aggregates = {"fitted_proxies": proxies}
    rep.checks.append(
        Check("tails below 2 exp(-s^2/8)", ok, "3-sigma Wilson lower ends compared against the envelope")
    )
    return rep


# -- fixed-point experiments ---------------------------------------------------------


def _fixed_point_trial(job):
    p, trial = job
    d, N, L = p["d"], p["N"], p["L"]
    rng = derive_trial_rng(p["seed"], trial)
    net = sample_network_widths(d, (N,) * L, _bias(p["bias"]), rng)
    x0 = np.asarray(p["x0"], dtype=float)
    rep = fixed_point_report(net, x0, n_probes=p.get("probes", 0), rng=rng)
    name = p["name"]
    seed = p["seed"]
    out = [
        _row(name, trial, d, N, L, seed, "grad_norm", rep.grad_norm),
        _row(name, trial, d, N, L, seed, "all_preactivations_nonzero", rep.all_preactivations_nonzero),
        _row(name, trial, d, N, L, seed, "all_layers_nonvanishing", all(rep.layer_nonvanishing)),
    ]
    for ell in range(L):
        out.append(_row(name, trial, d, N, L, seed, f"sigma_min_{ell + 1}", rep.sigma_min[ell]))
        out.append(_row(name, trial, d, N, L, seed, f"sigma_max_{ell + 1}", rep.sigma_max[ell]))
        if rep.probe_min:
            out.append(_row(name, trial, d, N, L, seed, f"probe_min_{ell + 1}", rep.probe_min[ell]))
            out.append(_row(name, trial, d, N, L, seed, f"probe_max_{ell + 1}", rep.probe_max[ell]))
    if p.get("check_sup"):
        try:
            sup = exact_lipschitz(net, sup_all=True, budget=Budget(max_lps=p.get("budget_lps", 100_000))).sup_all_patterns
            out.append(_row(name, trial, d, N, L, seed, "sup_all_patterns", sup))
        except (BudgetExceeded, IndeterminateError):
            out.append(_row(name, trial, d, N, L, seed, "budget_failure", 1))
    return out


def near_isometry_check(
    d: int = 4,
    N: int = 1024,
    L: int = 3,
    x0=None,
    bias=None,
    R: int = 100,
    P: int = 16,
    u: float = 1.0,
    C: float = 1.0,
    seed: int = 0,
    threads: int = 1,
) -> ExperimentReport:
    x0 = np.eye(d)[0] if x0 is None else np.asarray(x0, dtype=float)
    if not np.any(x0 != 0):
        raise ValueError("x0 must be non-zero")
    bias = _bias(bias or "zero")
    p = {"name": "near_isometry_check", "d": d, "N": N, "L": L, "x0": x0.tolist(), "bias": bias.to_dict(),
         "seed": seed, "probes": P}
    rep = ExperimentReport("near_isometry_check", dict(p, R=R, u=u, C=C))
    rep.rows = _flatten(run_trials(_fixed_point_trial, [(p, t) for t in range(R)], threads))
    dev = []
    for t in range(R):
        worst = 0.0
        for ell in range(1, L + 1):
            smin = rep.values(f"sigma_min_{ell}", trial=t)[0]
            smax = rep.values(f"sigma_max_{ell}", trial=t)[0]
            worst = max(worst, abs(smax - 1.0), abs(1.0 - smin))
        dev.append(worst)
    dev = np.asarray(dev)
    ev1 = rep.values("all_preactivations_nonzero")
    ev2 = rep.values("all_layers_nonvanishing")
    eps = C * (math.sqrt(d) + u) / math.sqrt(N)
    per_layer = {}
    for ell in range(1, L + 1):
        smin = rep.values(f"sigma_min_{ell}")
        smax = rep.values(f"sigma_max_{ell}")
        inside = (smin >= bounds.pos(1 - eps) ** ell) & (smax <= (1 + eps) ** ell)
        per_layer[ell] = {
            "median_sigma_min": float(np.median(smin)),
            "median_sigma_max": float(np.median(smax)),
            "sandwich_frequency": float(inside.mean()),
            "predicted_probability": bounds.pos(1 - 2.0 ** (-N) - math.exp(-u * u)) ** ell,
        }
    rep.aggregates = {
        "median_max_deviation": float(np.median(dev)),
        "reference_scale_sqrt_d_over_sqrt_N": math.sqrt(d / N),
        "freq_all_preactivations_nonzero": float(ev1.mean()),
        "freq_all_layers_nonvanishing": float(ev2.mean()),
        "layers": per_layer,
    }
    k2 = int(ev2.sum())
    _, hi = wilson(k2, R)
    target = 1.0 - L * 2.0 ** (-N)
    rep.checks.append(Check("layer outputs never vanish", hi >= target - 1e-12, f"{k2}/{R}, Wilson upper {hi:.4f} vs {target:.4f}"))
    rep.checks.append(
        Check("median max |ratio - 1|", True, f"{np.median(dev):.4f} (sqrt(d/N) = {math.sqrt(d / N):.4f})", assertive=False)
    )
    return rep


def deep_lower_event(
    d: int = 4,
    N: int = 256,
    L: int = 2,
    bias=None,
    R: int = 500,
    x0=None,
    seed: int = 0,
    min_frequency: float = 0.9,
    C_stand_in: float = 16.0,
    check_sup: bool = False,
    threads: int = 1,
) -> ExperimentReport:
    x0 = np.eye(d)[0] if x0 is None else np.asarray(x0, dtype=float)
    bias = _bias(bias or "zero")
    p = {"name": "deep_lower_event", "d": d, "N": N, "L": L, "x0": x0.tolist(), "bias": bias.to_dict(),
         "seed": seed, "check_sup": check_sup}
    rep = ExperimentReport(
        "deep_lower_event",
        dict(p, R=R, min_frequency=min_frequency, C_stand_in=C_stand_in, regime_ok=N >= C_stand_in * d * L * L,
             symmetric_bias=bias.symmetric),
    )
    rep.rows = _flatten(run_trials(_fixed_point_trial, [(p, t) for t in range(R)], threads))
    g = rep.values("grad_norm")
    hits = int((g >= math.sqrt(d) / 4).sum())
    diff = rep.values("all_preactivations_nonzero")
    freq = hits / R
    wl, wh = wilson(hits, R)
    rep.aggregates = {
        "freq_grad_ge_sqrt_d_over_4": freq,
        "wilson_3sigma": [wl, wh],
        "freq_differentiable_at_x0": float(diff.mean()),
        "median_grad_norm": float(np.median(g)),
    }
    rep.checks.append(Check("frequency |grad Phi(x0)| >= sqrt(d)/4", freq >= min_frequency,
                            f"{hits}/{R} = {freq:.3f} >= {min_frequency} (3-sigma Wilson [{wl:.3f}, {wh:.3f}])"))
    rep.checks.append(
        Check("differentiable at x0 in every trial", bool(diff.min() == 1.0) if bias.continuous else True,
              f"frequency {diff.mean():.4f}", assertive=bias.continuous)
    )
    if check_sup:
        ok = True
        for t in range(R):
            s = rep.values("sup_all_patterns", trial=t)
            if s.size and g[t] > s[0] + 1e-9 * (1 + s[0]):
                ok = False
        rep.checks.append(Check("grad norm at x0 <= sup over patterns", ok, "enumerated trials only"))
    return rep


# -- constructions and exact-route suites -------------------------------------------


def example_network():
    """Two inputs, three hidden neurons: lip = sqrt 2, pattern sup = sqrt 5."""
    return make_network([[[1, -1], [-1, 1], [2, -1]], [[-1, 1, 1]]])


def collapse_gap_network():
    """relu(x+y) - relu(x) - relu(y): lip 1, while the linear collapse is 0."""
    return make_network([[[1, 1], [1, 0], [0, 1]], [[1, -1, -1]]])


def dead_deep_network():
    """relu(-relu(x)) = 0: lip 0, while the linear collapse has lip 1."""
    return make_network([[[1]], [[-1]], [[1]]])


_RANDOM_BIASES = (
    {"kind": "zero"},
    {"kind": "gaussian", "sigma": 1.0},
    {"kind": "uniform", "m": 1.0},
    {"kind": "rademacher", "scale": 1.0},
)


def _sandwich_trial(job):
    seed, trial = job
    rng = derive_trial_rng(seed, trial)
    d = int(rng.integers(1, 4))
    N = int(rng.integers(1, 7))
    bias = BiasSpec.from_dict(_RANDOM_BIASES[int(rng.integers(len(_RANDOM_BIASES)))])
    net = sample_network_widths(d, (N,), bias, rng)
    lip = exact_lipschitz(net).lip
    half = shallow_collapse_lower(net)
    return [
        _row("collapse_sandwich", trial, d, N, 1, seed, "lip", lip),
        _row("collapse_sandwich", trial, d, N, 1, seed, "half_lip_linear", half),
    ]


def collapse_sandwich(R: int = 100, seed: int = 0, threads: int = 1) -> ExperimentReport:
    """lip >= |W1 W0| / 2 on random one-hidden-layer nets, any bias law."""
    rep = ExperimentReport("collapse_sandwich", {"R": R, "seed": seed})
    rep.rows = _flatten(run_trials(_sandwich_trial, [(seed, t) for t in range(R)], threads))
    lip = rep.values("lip")
    half = rep.values("half_lip_linear")
    bad = int((lip < half - 1e-12 * (1 + half)).sum())
    rep.aggregates = {"violations": bad, "min_gap": float((lip - half).min())}
    rep.checks.append(Check("lip >= half linear-collapse lip", bad == 0, f"{bad} violations in {R} nets"))
    return rep


def counterexample_suite(n_random: int = 100, seed: int = 0, threads: int = 1) -> ExperimentReport:
    rep = ExperimentReport("counterexample_suite", {"n_random": n_random, "seed": seed})
    name = rep.name

    net = example_network()
    r = exact_lipschitz(net, sup_all=True)
    rep.rows += [_row(name, 0, 2, 3, 1, seed, "lip", r.lip), _row(name, 0, 2, 3, 1, seed, "sup_all_patterns", r.sup_all_patterns)]
    ok = abs(r.lip - math.sqrt(2)) <= 1e-9 and abs(r.sup_all_patterns - math.sqrt(5)) <= 1e-9
    rep.checks.append(Check("(a) example net: lip = sqrt 2, pattern sup = sqrt 5", ok,
                            f"lip={r.lip!r}, sup={r.sup_all_patterns!r}"))

    net = collapse_gap_network()
    lip = exact_lipschitz(net).lip
    lin = linear_collapse(net)[1]
    rep.rows += [_row(name, 1, 2, 3, 1, seed, "lip", lip), _row(name, 1, 2, 3, 1, seed, "lip_linear", lin)]
    rep.checks.append(Check("(b) collapse gap net: lip_linear = 0 < lip = 1",
                            lin == 0.0 and abs(lip - 1.0) <= 1e-9, f"lip_linear={lin!r}, lip={lip!r}"))

    net = dead_deep_network()
    lip = exact_lipschitz(net).lip
    lin = linear_collapse(net)[1]
    rep.rows += [_row(name, 2, 1, 1, 2, seed, "lip", lip), _row(name, 2, 1, 1, 2, seed, "lip_linear", lin)]
    rep.checks.append(Check("(c) dead deep net: lip = 0 < lip_linear = 1",
                            lip == 0.0 and abs(lin - 1.0) <= 1e-12, f"lip={lip!r}, lip_linear={lin!r}"))

    sand = collapse_sandwich(n_random, seed, threads)
    for row in sand.rows:
        rep.rows.append(dict(row, experiment=name, trial=row["trial"] + 3))
    c = sand.checks[0]
    rep.checks.append(Check("(d) random shallow nets: lip >= lip_linear / 2", c.passed, c.detail))
    return rep


def _oracle_trial(job):
    p, trial = job
    rng = derive_trial_rng(p["seed"], trial)
    L = int(rng.integers(1, p["max_L"] + 1))
    N = int(rng.integers(1, p["max_N"] + 1))
    d = p["d"]
    net = sample_network_widths(d, (N,) * L, _bias(p["bias"]), rng)
    lip = exact_lipschitz(net).lip
    X = np.vstack(
        [
            sample_points("multiscale_ball", p["ball_radius"], p["n_samples"], d, rng),
            sample_points("sphere", p["sphere_radius"], p["n_samples"], d, rng),
        ]
    )
    sampled = sampled_lip_search(net, X).value
    name = "oracle_agreement"
    return [
        _row(name, trial, d, N, L, p["seed"], "lip", lip),
        _row(name, trial, d, N, L, p["seed"], "sampled_max", sampled),
    ]


def oracle_agreement(
    R: int = 50,
    d: int = 2,
    max_N: int = 5,
    max_L: int = 2,
    n_samples: int = 100_000,
    ball_radius: float = 1e3,
    sphere_radius: float = 1e6,
    bias=None,
    seed: int = 0,
    min_agreement: float = 0.95,
    tol: float = 1e-9,
    threads: int = 1,
) -> ExperimentReport:
    """Enumerated lip against the largest sampled gradient norm.

    Samples come from a radius-``ball_radius`` ball (uniform direction,
    log-uniform radius so that bounded cells near the origin are hit) and from
    the radius-``sphere_radius`` sphere (unbounded cells).
    """
    bias = _bias(bias or {"kind": "gaussian", "sigma": 1.0})
    p = {"seed": seed, "d": d, "max_N": max_N, "max_L": max_L, "n_samples": n_samples, "ball_radius": ball_radius,
         "sphere_radius": sphere_radius, "bias": bias.to_dict()}
    rep = ExperimentReport("oracle_agreement", dict(p, R=R, min_agreement=min_agreement, tol=tol))
    rep.rows = _flatten(run_trials(_oracle_trial, [(p, t) for t in range(R)], threads))
    lip = rep.values("lip")
    smp = rep.values("sampled_max")
    below = int((lip < smp - tol * (1 + smp)).sum())
    agree = int((np.abs(lip - smp) <= tol).sum())
    rep.aggregates = {"agreements": agree, "enumeration_below_sampling": below, "max_gap": float((lip - smp).max())}
    rep.checks.append(Check("enumeration >= sampling in every trial", below == 0, f"{below} violations"))
    rep.checks.append(Check("enumeration = sampling within tol", agree >= min_agreement * R,
                            f"{agree}/{R} within {tol:g} (need {min_agreement:.0%})"))
    return rep


def _pattern_bound_trial(job):
    p, trial = job
    rng = derive_trial_rng(p["seed"], trial)
    d = int(rng.integers(1, p["max_d"] + 1))
    N = int(rng.integers(d + 3, p["max_N"] + 1))
    L = int(rng.integers(1, p["max_L"] + 1))
    net = sample_network_widths(d, (N,) * L, _bias(p["bias"]), rng)
    count = len(enumerate_regions(net, ALL_REALIZABLE, Budget(max_lps=p["budget_lps"])).regions)
    bound = pattern_count_bound(d, N, L)
    return [
        _row("pattern_bound", trial, d, N, L, p["seed"], "pattern_count", count),
        _row("pattern_bound", trial, d, N, L, p["seed"], "bound", bound),
    ]


def pattern_bound(
    R: int = 100, max_d: int = 2, max_N: int = 8, max_L: int = 2, bias=None, seed: int = 0,
    budget_lps: int = 1_000_000, threads: int = 1,
) -> ExperimentReport:
    """Realizable pattern counts against (eN/(d+1))^(L(d+1)) for d + 2 < N."""
    if max_N < max_d + 3 or max_N < 4:
        raise ValueError("need room for d + 2 < N")
    bias = _bias(bias or {"kind": "gaussian", "sigma": 1.0})
    p = {"seed": seed, "max_d": max_d, "max_N": max_N, "max_L": max_L, "bias": bias.to_dict(), "budget_lps": budget_lps}
    rep = ExperimentReport("pattern_bound", dict(p, R=R))
    rep.rows = _flatten(run_trials(_pattern_bound_trial, [(p, t) for t in range(R)], threads))
    c = rep.values("pattern_count")
    b = rep.values("bound")
    bad = int((c > b).sum())
    rep.aggregates = {"violations": bad, "max_count_over_bound": float((c / b).max())}
    rep.checks.append(Check("pattern count <= (eN/(d+1))^(L(d+1))", bad == 0, f"{bad} violations in {R} nets"))
    return rep


def gradient_fd_check(
    R: int = 1000, min_margin: float = 1e-4, h: float = 1e-5, rtol: float = 1e-6, seed: int = 0
) -> ExperimentReport:
    """Central finite differences against gradient_at on random (net, x) pairs."""
    rep = ExperimentReport("gradient_fd_check", {"R": R, "min_margin": min_margin, "h": h, "rtol": rtol, "seed": seed})
    worst, bad, trial, attempt = 0.0, 0, 0, 0
    while trial < R:
        rng = derive_trial_rng(seed, attempt)
        attempt += 1
        d = int(rng.integers(1, 5))
        N = int(rng.integers(1, 9))
        L = int(rng.integers(1, 4))
        bias = BiasSpec.from_dict(_RANDOM_BIASES[int(rng.integers(len(_RANDOM_BIASES)))])
        net = sample_network_widths(d, (N,) * L, bias, rng)
        x = rng.standard_normal(d)
        g, margin = gradient_at(net, x)
        if margin <= min_margin:
            continue
        fd = np.array([(evaluate(net, x + h * e) - evaluate(net, x - h * e)) / (2 * h) for e in np.eye(d)])
        err = float(np.max(np.abs(fd - g)) / (np.linalg.norm(g) + 1.0))
        worst = max(worst, err)
        bad += err > rtol
        rep.rows.append(_row(rep.name, trial, d, N, L, seed, "fd_rel_error", err))
        trial += 1
    rep.aggregates = {"worst_rel_error": worst, "failures": bad, "attempts": attempt}
    rep.checks.append(Check("finite differences match gradient_at", bad == 0, f"{bad}/{R} above {rtol:g}, worst {worst:.2e}"))
    return rep


EXPERIMENTS = {
    "scaling_shallow": scaling_shallow,
    "isotropy_check": isotropy_check,
    "subgaussian_tail_check": subgaussian_tail_check,
    "near_isometry_check": near_isometry_check,
    "deep_lower_event": deep_lower_event,
    "counterexample_suite": counterexample_suite,
    "collapse_sandwich": collapse_sandwich,
    "oracle_agreement": oracle_agreement,
    "pattern_bound": pattern_bound,
    "gradient_fd_check": gradient_fd_check,
}
