"""Exact Lipschitz constants of small ReLU networks by region enumeration.

Phi is affine on every open cell of its activation-region decomposition and
those cells cover R^d up to a null set, so lip(Phi) is the largest gradient
norm over the full-dimensional cells.  Cells are found by splitting on one
neuron at a time, in input coordinates, and pruning empty branches with the
LP oracle in :mod:`liplab.feasibility`.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .feasibility import TAU, HalfspaceSystem, IndeterminateError, Status, solve_margin
from .net_core import ActivationPattern, NetworkParams, pattern_gradient

FULL_DIM_ONLY = "full"
ALL_REALIZABLE = "all"


class BudgetExceeded(RuntimeError):
    pass


class HypothesisError(ValueError):
    """A structural hypothesis of a bound or estimate does not hold for the given network."""


@dataclass
class Budget:
    max_lps: int = 1_000_000
    max_seconds: float = 60.0
    max_estimated_regions: float | None = None


@dataclass(frozen=True)
class RegionCertificate:
    pattern: ActivationPattern
    witness: np.ndarray
    margin: float
    status: Status
    A: np.ndarray  # pre-activations of the last hidden layer on the region: A x + c
    c: np.ndarray

    def system(self, net: NetworkParams) -> HalfspaceSystem:
        return region_system(net, self.pattern)


@dataclass
class Enumeration:
    regions: list[RegionCertificate]
    lp_calls: int = 0
    flagged: int = 0


@dataclass
class LipResult:
    lip: float
    argmax_region: RegionCertificate | None
    full_dim_region_count: int
    all_pattern_count: int | None = None
    sup_all_patterns: float | None = None
    lp_calls: int = 0
    flagged_regions: int = 0
    grad_norms: list[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = {
            "lip": self.lip,
            "region_count": self.full_dim_region_count,
            "argmax_pattern": str(self.argmax_region.pattern) if self.argmax_region else None,
            "witness": self.argmax_region.witness.tolist() if self.argmax_region else None,
            "lp_calls": self.lp_calls,
        }
        if self.sup_all_patterns is not None:
            out["sup_all_patterns"] = self.sup_all_patterns
            out["all_pattern_count"] = self.all_pattern_count
        if self.flagged_regions:
            out["flagged_regions"] = self.flagged_regions
        return out


def estimated_region_count(net: NetworkParams) -> float:
    """Product over layers of the hyperplane-arrangement cell bound sum_{i<=d} C(N, i)."""
    total = 1.0
    for n in net.hidden_widths:
        total *= sum(math.comb(n, i) for i in range(min(net.d, n) + 1))
    return total


def region_system(net: NetworkParams, pattern: ActivationPattern) -> HalfspaceSystem:
    """Input-space inequalities whose solution set realizes exactly ``pattern``."""
    sys = HalfspaceSystem.empty(net.d)
    A, c = net.weights[0], net.biases[0]
    for ell, bits in enumerate(pattern.bits):
        s = np.asarray(bits, dtype=bool)
        sys = sys.extend(A, c, s)
        if ell + 1 < net.L:
            A = net.weights[ell + 1] @ (s[:, None] * A)
            c = net.weights[ell + 1] @ (s * c) + net.biases[ell + 1]
    return sys


class _Walker:
    def __init__(self, net: NetworkParams, mode: str, budget: Budget):
        self.net = net
        self.mode = mode
        self.budget = budget
        self.lp_calls = 0
        self.flagged = 0
        self.t0 = time.monotonic()
        self.out: list[RegionCertificate] = []

    def classify(self, sys: HalfspaceSystem, witness, parent_full: bool):
        if parent_full:
            m = sys.ball_margin(witness)
            if m > TAU:
                return Status.FULL_DIM, witness, m
        if self.lp_calls >= self.budget.max_lps:
            raise BudgetExceeded(f"LP budget of {self.budget.max_lps} calls exhausted")
        if time.monotonic() - self.t0 > self.budget.max_seconds:
            raise BudgetExceeded(f"wall-clock budget of {self.budget.max_seconds:g} s exhausted")
        self.lp_calls += 1
        res = solve_margin(sys, start=witness)
        return res.status, res.witness, res.margin

    def run(self):
        net = self.net
        witness = np.zeros(net.d)
        stack = [(0, 0, HalfspaceSystem.empty(net.d), net.weights[0], net.biases[0], (), (), witness, 1.0, True)]
        # explicit stack; children pushed off-then-on so "on" is explored first
        while stack:
            ell, j, sys, A, c, done, cur, w, margin, full = stack.pop()
            n_ell = net.hidden_widths[ell]
            if j == n_ell:
                done = done + (cur,)
                if ell == net.L - 1:
                    status = Status.FULL_DIM if full else Status.LOWER_DIM
                    self.out.append(RegionCertificate(ActivationPattern(done), w, margin, status, A, c))
                    continue
                s = np.asarray(cur, dtype=float)
                A2 = net.weights[ell + 1] @ (s[:, None] * A)
                c2 = net.weights[ell + 1] @ (s * c) + net.biases[ell + 1]
                stack.append((ell + 1, 0, sys, A2, c2, done, (), w, margin, full))
                continue
            children = []
            for bit in (1, 0):
                child = sys.add(A[j], c[j], bit == 1)
                try:
                    status, cw, cm = self.classify(child, w, full)
                except IndeterminateError:
                    self.flagged += 1
                    continue
                if status is Status.INFEASIBLE:
                    continue
                if status is Status.LOWER_DIM and self.mode == FULL_DIM_ONLY:
                    continue
                children.append((ell, j + 1, child, A, c, done, cur + (bit,), cw, cm, status is Status.FULL_DIM))
            stack.extend(reversed(children))
        return self.out


def enumerate_regions(
    net: NetworkParams, mode: str = FULL_DIM_ONLY, budget: Budget | None = None
) -> Enumeration:
    """All full-dimensional regions (or all realizable patterns) with certificates.

    Depth-first over layers and neurons in index order, "on" branch first.
    Raises BudgetExceeded rather than returning a partial list.
    """
    if mode not in (FULL_DIM_ONLY, ALL_REALIZABLE):
        raise ValueError(f"mode must be {FULL_DIM_ONLY!r} or {ALL_REALIZABLE!r}")
    budget = budget or Budget()
    if budget.max_estimated_regions is not None:
        est = estimated_region_count(net)
        if est > budget.max_estimated_regions:
            raise BudgetExceeded(
                f"estimated {est:.3g} regions exceeds the budget of {budget.max_estimated_regions:.3g}"
            )
    walker = _Walker(net, mode, budget)
    regions = walker.run()
    return Enumeration(regions, walker.lp_calls, walker.flagged)


def _product_norm_bound(net: NetworkParams) -> float:
    return float(np.prod([np.linalg.norm(W, 2) for W in net.weights]))


def exact_lipschitz(net: NetworkParams, sup_all: bool = False, budget: Budget | None = None) -> LipResult:
    mode = ALL_REALIZABLE if sup_all else FULL_DIM_ONLY
    enum_ = enumerate_regions(net, mode, budget)
    lip, best, norms = 0.0, None, []
    sup = 0.0
    n_full = 0
    for reg in enum_.regions:
        g = float(np.linalg.norm(pattern_gradient(net, reg.pattern)))
        sup = max(sup, g)
        if reg.status is Status.FULL_DIM:
            n_full += 1
            norms.append(g)
            if best is None or g > lip:
                lip, best = g, reg
    if enum_.flagged and _product_norm_bound(net) > lip:
        raise IndeterminateError(
            f"{enum_.flagged} regions could not be classified and could exceed lip={lip:.6g}"
        )
    return LipResult(
        lip=lip,
        argmax_region=best,
        full_dim_region_count=n_full,
        all_pattern_count=len(enum_.regions) if sup_all else None,
        sup_all_patterns=sup if sup_all else None,
        lp_calls=enum_.lp_calls,
        flagged_regions=enum_.flagged,
        grad_norms=norms,
    )


def sup_all_patterns(net: NetworkParams, budget: Budget | None = None) -> float:
    """max |pattern_gradient| over every realizable pattern, boundaries included."""
    return exact_lipschitz(net, sup_all=True, budget=budget).sup_all_patterns


def pattern_count_bound(d: int, N: int, L: int) -> float:
    return (math.e * N / (d + 1)) ** (L * (d + 1))


def pattern_count_check(net: NetworkParams, budget: Budget | None = None) -> tuple[int, float, bool]:
    N = net.constant_width
    if N is None:
        raise HypothesisError("the pattern-count bound needs constant hidden width")
    if not net.d + 2 < N:
        raise HypothesisError(f"pattern-count bound requires d+2 < N (got d={net.d}, N={N})")
    count = len(enumerate_regions(net, ALL_REALIZABLE, budget).regions)
    bound = pattern_count_bound(net.d, N, net.L)
    return count, bound, count <= bound
