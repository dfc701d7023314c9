"""Empirical Lipschitz lower bounds and fixed-point gradient quantities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exact_lip import HypothesisError, region_system
from .feasibility import Status, solve_margin
from .net_core import ActivationPattern, NetworkParams, batch_patterns, forward, linear_collapse, pattern_gradient

SAMPLE_LAWS = ("gaussian", "sphere", "ball", "multiscale_ball")
CHUNK = 20_000


@dataclass(frozen=True)
class EstimateConfig:
    """How to search for large gradients.

    ``sample_law`` is one of ``gaussian`` (standard normal), ``sphere`` (uniform
    on the radius-r sphere), ``ball`` (uniform in the radius-r ball) or
    ``multiscale_ball`` (uniform direction, log-uniform radius in [r*1e-6, r]).
    """

    n_samples: int = 10_000
    sample_law: str = "gaussian"
    radius: float = 1.0
    hill_climb_steps: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.sample_law not in SAMPLE_LAWS:
            raise ValueError(f"sample_law must be one of {SAMPLE_LAWS}")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.hill_climb_steps < 0:
            raise ValueError("hill_climb_steps must be >= 0")


def sample_points(law: str, radius: float, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    G = rng.standard_normal((n, d))
    if law == "gaussian":
        return G
    U = G / np.linalg.norm(G, axis=1, keepdims=True)
    if law == "sphere":
        return radius * U
    if law == "ball":
        return radius * U * rng.uniform(size=(n, 1)) ** (1.0 / d)
    if law == "multiscale_ball":
        return radius * U * 10.0 ** rng.uniform(-6.0, 0.0, size=(n, 1))
    raise ValueError(f"unknown sample law {law!r}")


def batch_gradient_norms(net: NetworkParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradient norms, margins and flat patterns for every row of X."""
    bits, margin = batch_patterns(net, X)
    V = np.broadcast_to(net.weights[-1][0], (X.shape[0], net.weights[-1].shape[1])).copy()
    offsets = np.cumsum((0,) + net.hidden_widths)
    for ell in range(net.L - 1, -1, -1):
        V = (V * bits[:, offsets[ell] : offsets[ell + 1]]) @ net.weights[ell]
    return np.linalg.norm(V, axis=1), margin, bits


@dataclass
class SampledBound:
    value: float
    point: np.ndarray | None
    pattern: ActivationPattern | None
    n_used: int


def sampled_lip_search(net: NetworkParams, X: np.ndarray) -> SampledBound:
    best, best_x, best_bits, used = 0.0, None, None, 0
    for i in range(0, X.shape[0], CHUNK):
        chunk = X[i : i + CHUNK]
        norms, margin, bits = batch_gradient_norms(net, chunk)
        ok = margin > 0
        used += int(ok.sum())
        if not ok.any():
            continue
        norms = np.where(ok, norms, -1.0)
        k = int(np.argmax(norms))
        if best_x is None or norms[k] > best:
            best, best_x, best_bits = float(norms[k]), chunk[k].copy(), bits[k]
    pattern = None if best_bits is None else ActivationPattern.from_flat(best_bits.astype(int), net.hidden_widths)
    return SampledBound(best, best_x, pattern, used)


def sampled_lip_lower(net: NetworkParams, cfg: EstimateConfig) -> float:
    """max |grad Phi(x)| over sampled points strictly inside a region."""
    return sampled_lip_detail(net, cfg).value


def sampled_lip_detail(net: NetworkParams, cfg: EstimateConfig) -> SampledBound:
    rng = np.random.default_rng(cfg.seed)
    X = sample_points(cfg.sample_law, cfg.radius, cfg.n_samples, net.d, rng)
    return sampled_lip_search(net, X)


@dataclass
class HillClimbResult:
    pattern: ActivationPattern
    grad_norm: float
    history: list[float] = field(default_factory=list)
    witness: np.ndarray | None = None


def pattern_hill_climb(net: NetworkParams, start, steps: int, seed: int = 0) -> HillClimbResult:
    """Greedy single-bit flips over full-dimensional neighbouring regions.

    Each step takes the flip with the largest gradient norm among flips that
    increase it and whose region is full-dimensional.  The returned norm never
    exceeds the exact Lipschitz constant.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    start = np.asarray(start, dtype=np.float64)
    _, trace = forward(net, start)
    if trace.boundary_margin <= 0:
        start = start + 1e-6 * np.random.default_rng(seed).standard_normal(net.d)
        _, trace = forward(net, start)
        if trace.boundary_margin <= 0:
            raise ValueError("hill-climb start lies on a region boundary")
    current = trace.pattern
    value = float(np.linalg.norm(pattern_gradient(net, current)))
    history, witness = [value], start
    for _ in range(steps):
        cands = []
        for ell, layer in enumerate(current.bits):
            for i in range(len(layer)):
                q = current.flip(ell, i)
                g = float(np.linalg.norm(pattern_gradient(net, q)))
                if g > value:
                    cands.append((g, ell, i, q))
        cands.sort(key=lambda c: (-c[0], c[1], c[2]))
        moved = False
        for g, _, _, q in cands:
            res = solve_margin(region_system(net, q), start=witness)
            if res.status is Status.FULL_DIM:
                current, value, witness = q, g, res.witness
                history.append(value)
                moved = True
                break
        if not moved:
            break
    return HillClimbResult(current, value, history, witness)


def shallow_collapse_lower(net: NetworkParams) -> float:
    """Half the norm of the linear collapse; a lower bound on lip for L = 1 only."""
    if net.L != 1:
        raise HypothesisError(
            "the half-linear-collapse lower bound holds only for one hidden layer; "
            "for L=2 relu(-relu(x)) has lip 0 while its linear collapse has lip 1"
        )
    return 0.5 * linear_collapse(net)[1]


@dataclass
class FixedPointReport:
    x0: np.ndarray
    grad_norm: float
    all_preactivations_nonzero: bool
    layer_nonvanishing: list[bool]
    sigma_min: list[float]  # smallest singular value of D W ... D W, per depth 1..L
    sigma_max: list[float]
    probe_min: list[float]  # extremes of |D W ... D W y| / |y| over the probes
    probe_max: list[float]
    boundary_margin: float = 0.0

    def to_dict(self) -> dict:
        return {
            "x0": self.x0.tolist(),
            "grad_norm": self.grad_norm,
            "all_preactivations_nonzero": self.all_preactivations_nonzero,
            "layer_nonvanishing": self.layer_nonvanishing,
            "sigma_min": self.sigma_min,
            "sigma_max": self.sigma_max,
            "probe_min": self.probe_min,
            "probe_max": self.probe_max,
        }


def fixed_point_report(net: NetworkParams, x0, n_probes: int = 0, rng: np.random.Generator | None = None) -> FixedPointReport:
    x0 = np.asarray(x0, dtype=np.float64)
    if not np.any(x0 != 0):
        raise ValueError("the fixed point x0 must be non-zero")
    _, trace = forward(net, x0)
    g = pattern_gradient(net, trace.pattern)
    Y = None
    if n_probes > 0:
        rng = rng or np.random.default_rng(0)
        Y = rng.standard_normal((net.d, n_probes))
        Y /= np.linalg.norm(Y, axis=0, keepdims=True)
    M = np.eye(net.d)
    smin, smax, pmin, pmax = [], [], [], []
    for ell in range(net.L):
        s = np.asarray(trace.pattern.bits[ell], dtype=np.float64)
        M = s[:, None] * (net.weights[ell] @ M)
        sv = np.linalg.svd(M, compute_uv=False)
        smax.append(float(sv[0]))
        smin.append(float(sv[-1]) if M.shape[0] >= net.d else 0.0)
        if Y is not None:
            r = np.linalg.norm(M @ Y, axis=0)
            pmin.append(float(r.min()))
            pmax.append(float(r.max()))
    return FixedPointReport(
        x0=x0,
        grad_norm=float(np.linalg.norm(g)),
        all_preactivations_nonzero=trace.boundary_margin > 0,
        layer_nonvanishing=[bool(np.any(h != 0)) for h in trace.post[1:]],
        sigma_min=smin,
        sigma_max=smax,
        probe_min=pmin,
        probe_max=pmax,
        boundary_margin=trace.boundary_margin,
    )
