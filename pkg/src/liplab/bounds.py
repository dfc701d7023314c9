"""Closed-form Lipschitz bounds for random ReLU networks.

The bounds hold with unspecified absolute constants.  Those enter here as
explicit parameters (``BoundConstants``, all defaulting to 1) and are echoed in
every report; none of the numbers below is a calibrated prediction.

Functions return ``(value, prob_lower_bound)`` where the bound comes with a
probability, otherwise just the value.  ``pos(a)`` is ``max(a, 0)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

from scipy import integrate

SQRT2 = math.sqrt(2.0)


class BoundPreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class BoundConstants:
    """User-supplied stand-ins for the unspecified absolute constants."""

    C_upper: float = 1.0
    c1: float = 1.0
    C_lower: float = 1.0
    c: float = 1.0
    C_iso: float = 1.0
    C_cov: float = 1.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not v > 0:
                raise ValueError(f"constant {name} must be positive, got {v}")

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT = BoundConstants()


def pos(a: float) -> float:
    return a if a > 0 else 0.0


def _tail(a: float) -> float:
    """pos(1 - 2 exp(-a)), the usual two-sided concentration probability."""
    return pos(1.0 - 2.0 * math.exp(-a))


def _check_dims(**dims):
    for name, v in dims.items():
        if v < 1:
            raise BoundPreconditionError(f"{name} must be >= 1, got {v}")


def _check_ut(u, t):
    if u < 0 or t < 0:
        raise BoundPreconditionError("u and t must be non-negative")


def _check_deep_width(d, N):
    if not N > d + 2:
        raise BoundPreconditionError(f"the deep upper bound requires N > d + 2 (got d={d}, N={N})")


def _log_width(d, N) -> float:
    return math.log(math.e * N / (d + 1))


# -- upper bounds --------------------------------------------------------------


def shallow_upper(d: int, N: int, u: float, t: float, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    _check_dims(d=d, N=N)
    _check_ut(u, t)
    kk = min(d, N)
    value = k.C_upper * (1.0 + (math.sqrt(d) + t) / math.sqrt(N)) * (math.sqrt(kk) + u)
    prob = _tail(u * u) * _tail(k.c1 * t * t)
    return value, prob


def shallow_upper_simple(d: int, N: int | None = None, k: BoundConstants = DEFAULT) -> tuple[float, float | None]:
    """C sqrt(d); the probability needs N and is None without it."""
    _check_dims(d=d)
    prob = None
    if N is not None:
        prob = (1.0 - 2.0 * math.exp(-min(d, N))) * _tail(k.c1 * max(d, N))
    return k.C_upper * math.sqrt(d), prob


def shallow_expectation(d: int, N: float, k: BoundConstants = DEFAULT) -> float:
    """Bound on E[lip]; ``N = math.inf`` gives the wide limit C sqrt(d)."""
    _check_dims(d=d, N=N)
    return k.C_upper * (1.0 + math.sqrt(d / N)) * math.sqrt(min(d, N))


def deep_upper(d: int, N: int, L: int, u: float, t: float, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    _check_dims(d=d, N=N, L=L)
    _check_ut(u, t)
    _check_deep_width(d, N)
    sn = math.sqrt(N)
    value = (
        k.C_upper
        * (1.0 + (math.sqrt(d) + t) / sn)
        * (2.0 * SQRT2 + SQRT2 * t / sn) ** (L - 1)
        * math.sqrt(L)
        * math.sqrt(_log_width(d, N))
        * (math.sqrt(d) + u)
    )
    prob = _tail(u * u) * _tail(k.c1 * t * t) ** L
    return value, prob


def deep_upper_convenience(d: int, N: int, L: int, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    """``deep_upper`` at u = sqrt(d), t = sqrt(N)."""
    return deep_upper(d, N, L, math.sqrt(d), math.sqrt(N), k)


def deep_upper_main(d: int, N: int, L: int, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    """C (3 sqrt 2)^L sqrt(L) sqrt(ln(eN/(d+1))) sqrt(d)."""
    _check_dims(d=d, N=N, L=L)
    _check_deep_width(d, N)
    value = k.C_upper * (3.0 * SQRT2) ** L * math.sqrt(L) * math.sqrt(_log_width(d, N)) * math.sqrt(d)
    prob = (1.0 - 2.0 * math.exp(-d)) * _tail(k.c1 * N) ** L
    return value, prob


def deep_upper_expectation(d: int, N: int, L: int, k: BoundConstants = DEFAULT) -> float:
    _check_dims(d=d, N=N, L=L)
    _check_deep_width(d, N)
    return (
        k.C_upper
        * (1.0 + math.sqrt(d) / math.sqrt(N))
        * (2.0 * SQRT2) ** (L - 1)
        * math.sqrt(L)
        * math.sqrt(_log_width(d, N))
        * math.sqrt(d)
    )


def deep_upper_expectation_main(d: int, N: int, L: int, k: BoundConstants = DEFAULT) -> float:
    """C (2 sqrt 2)^L sqrt(L) sqrt(ln(eN/(d+1))) sqrt(d); not reconciled with the (3 sqrt 2)^L form."""
    _check_dims(d=d, N=N, L=L)
    _check_deep_width(d, N)
    return k.C_upper * (2.0 * SQRT2) ** L * math.sqrt(L) * math.sqrt(_log_width(d, N)) * math.sqrt(d)


# -- lower bounds --------------------------------------------------------------


def shallow_lower(d: int, N: int, u: float, t: float, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    _check_dims(d=d, N=N)
    _check_ut(u, t)
    value = pos(1.0 - u / math.sqrt(N)) * pos(math.sqrt(d) - t) / SQRT2
    prob = _tail(k.c * t * t) * _tail(k.c * u * u)
    return value, prob


def shallow_lower_convenience(d: int, N: int, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    """``shallow_lower`` at u = sqrt(N)/2, t = sqrt(d)/2, i.e. sqrt(d)/(4 sqrt 2)."""
    return shallow_lower(d, N, math.sqrt(N) / 2.0, math.sqrt(d) / 2.0, k)


def shallow_lower_main(d: int, N: int, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    _check_dims(d=d, N=N)
    return math.sqrt(d) / (4.0 * SQRT2), _tail(k.c * N) * _tail(k.c * d)


def deep_lower(d: int, N: int, L: int, u: float, t: float, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    _check_dims(d=d, N=N, L=L)
    _check_ut(u, t)
    kk = min(d, N)
    shrink = pos(1.0 - k.C_lower * (math.sqrt(d) + u) / math.sqrt(N)) ** L
    value = pos(shrink * (math.sqrt(kk) - t))
    prob = pos(1.0 - 2.0 ** (-N) - math.exp(-u * u)) ** L * _tail(k.c1 * t * t)
    return value, prob


def deep_lower_convenience(d: int, N: int, L: int, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    """``deep_lower`` at u = sqrt(N)/(4 C L), t = sqrt(d)/2."""
    return deep_lower(d, N, L, math.sqrt(N) / (4.0 * k.C_lower * L), math.sqrt(d) / 2.0, k)


def deep_lower_main(d: int, N: int, L: int, k: BoundConstants = DEFAULT) -> tuple[float, float]:
    """sqrt(d)/4, valid once N >= (4 C_lower)^2 d L^2."""
    _check_dims(d=d, N=N, L=L)
    C = (4.0 * max(k.C_lower, 1.0)) ** 2
    if N < C * d * L * L:
        raise BoundPreconditionError(f"the deep lower bound requires N >= C d L^2 = {C * d * L * L:g} (got N={N})")
    prob = (1.0 - 2.0 ** (-N) - math.exp(-N / (C * L * L))) ** L * _tail(k.c1 * d / 4.0)
    return math.sqrt(d) / 4.0, prob


# -- covering numbers and the entropy integral ----------------------------------


def covering_bound_shallow(normW0: float, k: int, eps: float, C_cov: float = 1.0) -> float:
    """(9 |W0| / eps)^(C k)."""
    if not 0 < eps < normW0:
        raise BoundPreconditionError(f"need 0 < eps < |W0|_2 (got eps={eps}, |W0|_2={normW0})")
    if k < 0:
        raise BoundPreconditionError("k must be non-negative")
    return (9.0 * normW0 / eps) ** (C_cov * k)


def covering_bound_deep(Lam: float, d: int, N: int, L: int, eps: float) -> float:
    """(3 Lam / eps)^d (eN/(d+1))^(L(d+1))."""
    _check_dims(d=d, N=N, L=L)
    if not 0 < eps < Lam:
        raise BoundPreconditionError(f"need 0 < eps < Lambda (got eps={eps}, Lambda={Lam})")
    _check_deep_width(d, N)
    return (3.0 * Lam / eps) ** d * (math.e * N / (d + 1)) ** (L * (d + 1))


def shallow_log_covering(normW0: float, k: int, C_cov: float = 1.0) -> Callable[[float], float]:
    def f(eps):
        return C_cov * k * math.log(9.0 * normW0 / eps) if eps < normW0 else 0.0

    return f


def deep_log_covering(Lam: float, d: int, N: int, L: int) -> Callable[[float], float]:
    def f(eps):
        if eps >= Lam:
            return 0.0
        return d * math.log(3.0 * Lam / eps) + L * (d + 1) * _log_width(d, N)

    return f


def dudley_entropy_integral(log_cov: Callable[[float], float], Lam: float, rtol: float = 1e-6) -> float:
    """int_0^Lam sqrt(log_cov(eps)) d eps.

    Rescaled to the unit interval (eps = Lam s); QUADPACK's endpoint
    extrapolation handles the integrable log singularity at s -> 0.
    """
    if Lam <= 0:
        raise BoundPreconditionError("Lambda must be positive")

    def integrand(s):
        v = log_cov(Lam * s)
        if v < 0:
            raise BoundPreconditionError(f"log covering number is negative at eps={Lam * s}")
        return math.sqrt(v)

    value, abserr = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=rtol * 0.1, limit=200)
    if abserr > rtol * max(abs(value), 1e-300) and abserr > 1e-14:
        raise ArithmeticError(f"entropy integral did not converge: estimated error {abserr:.3g} on {value:.6g}")
    return Lam * value
