"""Small dense LP oracle for systems of linear inequalities over R^d.

Each row reads ``a . x + b > 0`` (strict) or ``a . x + b <= 0``.  The oracle
decides whether the solution set is open and full-dimensional, non-empty but
lower-dimensional, or empty, and returns a witness point.

Rows with ``a != 0`` are rescaled to unit ``|a|`` before solving, so the
reported margin is the radius of a Euclidean ball around the witness that
stays inside the region (capped at ``cap``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

TAU = 1e-8
PIVOT_EPS = 1e-11
MAX_PIVOTS = 5000


class IndeterminateError(ArithmeticError):
    """The simplex did not converge or produced an unsound witness."""


class Status(enum.Enum):
    FULL_DIM = "FullDim"
    LOWER_DIM = "FeasibleLowerDim"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class HalfspaceSystem:
    A: np.ndarray  # (m, d)
    b: np.ndarray  # (m,)
    strict: np.ndarray  # (m,) bool; False means "<= 0"

    @classmethod
    def empty(cls, d: int) -> "HalfspaceSystem":
        return cls(np.zeros((0, d)), np.zeros(0), np.zeros(0, dtype=bool))

    @classmethod
    def from_rows(cls, rows, d: int) -> "HalfspaceSystem":
        """``rows`` holds ``(a, b, relation)`` triples, relation in {"gt", "le"}."""
        sys = cls.empty(d)
        for a, b, rel in rows:
            if rel not in ("gt", "le"):
                raise ValueError(f"relation must be 'gt' or 'le', got {rel!r}")
            sys = sys.add(a, b, rel == "gt")
        return sys

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def __len__(self):
        return self.A.shape[0]

    def add(self, a, b: float, strict: bool) -> "HalfspaceSystem":
        a = np.asarray(a, dtype=np.float64).reshape(1, -1)
        return HalfspaceSystem(
            np.vstack([self.A, a]), np.append(self.b, float(b)), np.append(self.strict, bool(strict))
        )

    def extend(self, A, b, strict) -> "HalfspaceSystem":
        return HalfspaceSystem(
            np.vstack([self.A, A]), np.concatenate([self.b, b]), np.concatenate([self.strict, strict])
        )

    def signed_slack(self, x) -> np.ndarray:
        """Per-row slack, positive when the row holds with room to spare."""
        s = self.A @ np.asarray(x, dtype=np.float64) + self.b
        return np.where(self.strict, s, -s)

    def contains(self, x) -> bool:
        s = self.A @ np.asarray(x, dtype=np.float64) + self.b
        return bool(np.all(np.where(self.strict, s > 0, s <= 0)))

    def ball_margin(self, x, cap: float = 1.0) -> float:
        """Radius of the largest ball at x inside the open region, capped."""
        norms = np.linalg.norm(self.A, axis=1)
        slack = self.signed_slack(x)
        live = norms > 0
        if np.any(~live & (slack <= 0)):
            return 0.0
        if not np.any(live):
            return cap
        return float(min(cap, np.min(slack[live] / norms[live])))


@dataclass(frozen=True)
class FeasibilityResult:
    status: Status
    witness: np.ndarray | None
    margin: float


# -- dense two-phase simplex -------------------------------------------------


def _pivot(T: np.ndarray, obj: np.ndarray, basis: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    obj -= obj[c] * T[r]
    basis[r] = c


def _run(T: np.ndarray, obj: np.ndarray, basis: np.ndarray, allowed: int) -> None:
    """Maximize with Bland's rule; ``obj`` holds reduced costs, last entry -value."""
    for _ in range(MAX_PIVOTS):
        cand = np.nonzero(obj[:allowed] > PIVOT_EPS)[0]
        if cand.size == 0:
            return
        c = cand[0]
        colv = T[:, c]
        rows = np.nonzero(colv > PIVOT_EPS)[0]
        if rows.size == 0:
            raise IndeterminateError("LP unbounded; the margin cap should prevent this")
        ratios = T[rows, -1] / colv[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        r = ties[np.argmin(basis[ties])]
        _pivot(T, obj, basis, r, c)
    raise IndeterminateError(f"simplex did not converge within {MAX_PIVOTS} pivots")


def simplex_max(c: np.ndarray, A: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Maximize c.z subject to A z <= b, z >= 0.  Returns None if infeasible.

    Rows with negative right-hand side get an artificial variable and a
    phase-I pass.  The objective must be bounded on the feasible set.
    """
    m, n = A.shape
    neg = b < 0
    k = int(neg.sum())
    T = np.zeros((m, n + m + k + 1))
    T[:, :n] = A
    T[:, n : n + m] = np.eye(m)
    T[:, -1] = b
    T[neg] *= -1.0
    basis = np.arange(n, n + m)
    art = n + m + np.arange(k)
    T[np.nonzero(neg)[0], art] = 1.0
    basis[neg] = art

    if k:
        obj = np.zeros(n + m + k + 1)
        obj[art] = -1.0
        for r in np.nonzero(neg)[0]:
            obj += T[r]  # make reduced costs of basic artificials zero
        obj[art] = 0.0
        _run(T, obj, basis, n + m + k)
        if obj[-1] > 1e-9 * (1.0 + np.abs(b).max()):
            return None
        # drive remaining artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n + m:
                nz = np.nonzero(np.abs(T[r, : n + m]) > PIVOT_EPS)[0]
                if nz.size:
                    _pivot(T, obj, basis, r, nz[0])
                else:
                    keep[r] = False
        T = np.delete(T[keep], art, axis=1)
        basis = basis[keep]

    obj = np.zeros(T.shape[1])
    obj[:n] = c
    for r, j in enumerate(basis):
        if obj[j] != 0.0:
            obj -= obj[j] * T[r]
    _run(T, obj, basis, n + m)
    z = np.zeros(n + m)
    z[basis] = T[:, -1]
    return z[:n]


# -- margin LPs ---------------------------------------------------------------


def _normalized(sys: HalfspaceSystem):
    """Drop constant rows (deciding them directly) and rescale the rest.

    Returns (A, b, strict) of the live rows, or None if a constant row is
    violated everywhere.
    """
    norms = np.linalg.norm(sys.A, axis=1)
    const = norms == 0.0
    if np.any(const):
        bc, sc = sys.b[const], sys.strict[const]
        if np.any(sc & (bc <= 0)) or np.any(~sc & (bc > 0)):
            return None
    live = ~const
    return sys.A[live] / norms[live, None], sys.b[live] / norms[live], sys.strict[live]


def _interior_lp(A, b, sigma, x0, cap):
    """max t s.t. sigma_i (a_i.x + b_i) >= t for all rows, t <= cap.

    Solved around x0 with t shifted so the origin is feasible; no phase I.
    """
    m, d = A.shape
    s0 = sigma * (A @ x0 + b)
    shift = max(cap, -float(s0.min())) + 1.0
    # variables: p (d), q (d), s = t + shift
    G = np.zeros((m + 1, 2 * d + 1))
    G[:m, :d] = -sigma[:, None] * A
    G[:m, d : 2 * d] = sigma[:, None] * A
    G[:m, -1] = 1.0
    G[m, -1] = 1.0
    h = np.append(s0 + shift, shift + cap)
    c = np.zeros(2 * d + 1)
    c[-1] = 1.0
    z = simplex_max(c, G, h)
    if z is None:
        raise IndeterminateError("interior LP reported infeasible at a feasible start")
    return x0 + z[:d] - z[d : 2 * d], z[-1] - shift


def _strict_lp(A, b, strict, x0, cap):
    """max t s.t. strict rows >= t, non-strict rows hard (<= 0), 0 <= t <= cap."""
    m, d = A.shape
    G = np.zeros((m + 1, 2 * d + 1))
    s0 = A @ x0 + b
    G[:m, :d] = np.where(strict[:, None], -A, A)
    G[:m, d : 2 * d] = -G[:m, :d]
    G[:m, -1] = strict.astype(float)
    G[m, -1] = 1.0
    h = np.append(np.where(strict, s0, -s0), cap)
    c = np.zeros(2 * d + 1)
    c[-1] = 1.0
    z = simplex_max(c, G, h)
    if z is None:
        return None, 0.0
    return x0 + z[:d] - z[d : 2 * d], z[-1]


def _check_sound(sys: HalfspaceSystem, x: np.ndarray) -> None:
    s = sys.signed_slack(x)
    tol = 1e-9 * (1.0 + np.linalg.norm(sys.A, axis=1))
    if np.any(s < -tol):
        raise IndeterminateError("LP witness violates a constraint beyond tolerance")


def solve_margin(
    sys: HalfspaceSystem, cap: float = 1.0, tau: float = TAU, start=None
) -> FeasibilityResult:
    """Classify the region cut out by ``sys`` and return a witness.

    FULL_DIM iff some point has every row satisfied with ball margin > tau.
    Otherwise the strict rows alone are tested against the hard ``<=`` rows
    to separate lower-dimensional realizability from emptiness.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    d = sys.d
    x0 = np.zeros(d) if start is None else np.asarray(start, dtype=np.float64).copy()
    norm = _normalized(sys)
    if norm is None:
        return FeasibilityResult(Status.INFEASIBLE, None, 0.0)
    A, b, strict = norm
    if A.shape[0] == 0:
        return FeasibilityResult(Status.FULL_DIM, x0, cap)

    sigma = np.where(strict, 1.0, -1.0)
    x, t = _interior_lp(A, b, sigma, x0, cap)
    if t > tau:
        _check_sound(sys, x)
        return FeasibilityResult(Status.FULL_DIM, x, float(min(t, cap)))
    if t < -tau:
        return FeasibilityResult(Status.INFEASIBLE, None, 0.0)

    xs, ts = _strict_lp(A, b, strict, x, cap)
    if xs is None or ts <= tau:
        return FeasibilityResult(Status.INFEASIBLE, None, 0.0)
    _check_sound(sys, xs)
    return FeasibilityResult(Status.LOWER_DIM, xs, float(max(t, 0.0)))
