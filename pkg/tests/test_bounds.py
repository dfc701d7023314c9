import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erfc

from liplab import bounds as B
from liplab.bounds import BoundConstants, BoundPreconditionError

S2 = math.sqrt(2)


def erfc_oracle(norm_w0=1.0):
    """int_0^1 sqrt(ln(9 |W0| / eps)) d eps via the substitution u = sqrt(ln(9 |W0|/eps))."""
    a = 9.0 * norm_w0
    t0 = math.sqrt(math.log(a))
    return a * (t0 * math.exp(-t0 * t0) + math.sqrt(math.pi) / 2 * erfc(t0))


def test_shallow_upper_values():
    assert B.shallow_upper(16, 64, 0, 0)[0] == 6.0
    assert B.shallow_upper(16, 64, 0, 0)[1] == 0.0
    assert B.shallow_upper(4, 4, 2, 2)[0] == 12.0
    assert B.shallow_upper(4, 4, 2, 2)[1] == pytest.approx((1 - 2 * math.exp(-4)) ** 2)


def test_simple_and_expectation_forms():
    assert B.shallow_upper_simple(9)[0] == 3.0
    assert B.shallow_expectation(9, 9) == 6.0
    assert B.shallow_expectation(4, math.inf) == 2.0


def test_deep_upper_values():
    d, N = 5, 40
    v = B.deep_upper(d, N, 1, 0, 0)[0]
    assert v == pytest.approx((1 + math.sqrt(d / N)) * math.sqrt(math.log(math.e * N / (d + 1))) * math.sqrt(d))
    main = B.deep_upper_main(3, 64, 2)[0]
    assert main == pytest.approx(18 * S2 * math.sqrt(1 + math.log(16)) * math.sqrt(3), rel=1e-12)
    assert main == pytest.approx(85.638, abs=1e-3)
    with pytest.raises(BoundPreconditionError, match="N > d \\+ 2"):
        B.deep_upper(62, 64, 1, 0, 0)


@pytest.mark.parametrize("d,N,L", [(3, 64, 2), (1, 4, 1), (8, 8 + 3, 3), (10, 10_000, 5)])
def test_deep_upper_convenience_substitution(d, N, L):
    # u = sqrt d, t = sqrt N: (2 + sqrt(d/N)) (3 sqrt 2)^(L-1) sqrt L sqrt ln(eN/(d+1)) 2 sqrt d
    got = B.deep_upper_convenience(d, N, L)[0]
    rest = (3 * S2) ** (L - 1) * math.sqrt(L) * math.sqrt(math.log(math.e * N / (d + 1))) * math.sqrt(d)
    assert got == pytest.approx((2 + math.sqrt(d / N)) * 2 * rest, rel=1e-12)
    assert got <= 6 * rest * (1 + 1e-12)
    assert got <= S2 * B.deep_upper_main(d, N, L)[0] * (1 + 1e-12)


def test_shallow_lower_values():
    # sqrt(32) / (4 sqrt 2) = 1
    assert B.shallow_lower_convenience(32, 100)[0] == pytest.approx(1.0)
    assert B.shallow_lower_main(32, 100)[0] == pytest.approx(1.0)
    assert B.shallow_lower(9, 16, 4.0, 1.0)[0] == 0.0
    assert B.shallow_lower(9, 16, 1.0, 3.0)[0] == 0.0


@pytest.mark.parametrize("d,L", [(1, 1), (4, 2), (3, 5)])
def test_deep_lower_convenience(d, L):
    N = 16 * d * L * L
    v = B.deep_lower_convenience(d, N, L)[0]
    assert v == pytest.approx((1 - 1 / (2 * L)) ** L * math.sqrt(d) / 2, rel=1e-12)
    assert v >= math.sqrt(d) / 4
    assert B.deep_lower_convenience(d, 4 * N, L)[0] >= math.sqrt(d) / 4
    assert B.deep_lower_main(d, N, L)[0] == math.sqrt(d) / 4
    with pytest.raises(BoundPreconditionError):
        B.deep_lower_main(d, N - 1, L)


def test_deep_lower_limits_and_clamps():
    assert B.deep_lower(4, 10**12, 1, 0, 0)[0] == pytest.approx(2.0, rel=1e-5)
    assert B.deep_lower(4, 64, 2, 8.0, 0)[0] == 0.0
    assert B.deep_lower(4, 64, 2, 0.0, 5.0)[0] == 0.0


def test_covering_numbers():
    assert B.covering_bound_shallow(1.0, 1, 1 / 9) == pytest.approx(81.0)
    assert B.covering_bound_shallow(1.0, 0, 0.5) == 1.0
    assert B.covering_bound_deep(1.0, 1, 4, 1, 1 / 3) == pytest.approx(9 * (2 * math.e) ** 2, rel=1e-12)
    with pytest.raises(BoundPreconditionError):
        B.covering_bound_shallow(1.0, 1, 9.0)
    with pytest.raises(BoundPreconditionError):
        B.covering_bound_deep(3.0, 1, 4, 1, 3.0)
    with pytest.raises(BoundPreconditionError):
        B.covering_bound_deep(1.0, 0, 4, 1, 0.5)


@pytest.mark.parametrize("norm_w0", [1.0, 0.3, 2.5])
def test_dudley_matches_erfc_oracle(norm_w0):
    got = B.dudley_entropy_integral(B.shallow_log_covering(norm_w0, 1), norm_w0)
    assert got == pytest.approx(norm_w0 * erfc_oracle(), rel=1e-5)


def test_dudley_trivial_cases_and_scaling():
    assert B.dudley_entropy_integral(lambda e: 0.0, 2.0) == 0.0
    f = B.deep_log_covering(1.0, 2, 10, 2)
    one = B.dudley_entropy_integral(f, 1.0)
    two = B.dudley_entropy_integral(lambda e: f(e / 2.0), 2.0)
    assert two == pytest.approx(2 * one, rel=1e-8)
    with pytest.raises(BoundPreconditionError):
        B.dudley_entropy_integral(lambda e: -1.0, 1.0)
    with pytest.raises(BoundPreconditionError):
        B.dudley_entropy_integral(lambda e: 1.0, 0.0)


def test_constants_scale_and_validate():
    k = BoundConstants(C_upper=2.5)
    assert B.shallow_upper(16, 64, 0, 0, k)[0] == 15.0
    with pytest.raises(ValueError):
        BoundConstants(c1=0.0)


dims = st.integers(1, 50)
nonneg = st.floats(0, 20, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(d=dims, extra=st.integers(3, 200), L=st.integers(1, 6), u=nonneg, t=nonneg, du=st.floats(0, 5), dt=st.floats(0, 5))
def test_upper_bounds_monotone(d, extra, L, u, t, du, dt):
    N = d + extra
    for f in (lambda d, L, u, t: B.shallow_upper(d, N, u, t), lambda d, L, u, t: B.deep_upper(d, N, L, u, t)):
        v, p = f(d, L, u, t)
        v2, p2 = f(d, L, u + du, t + dt)
        assert v2 >= v * (1 - 1e-12) and p2 >= p - 1e-15
        assert 0.0 <= p <= 1.0
        assert f(d, L + 1, u, t)[0] >= v * (1 - 1e-12)
    assert B.shallow_upper(d + 1, N, u, t)[0] >= B.shallow_upper(d, N, u, t)[0] * (1 - 1e-12)


def test_deep_upper_not_monotone_in_d_near_the_width():
    # the sqrt(ln(eN/(d+1))) factor shrinks as d grows
    assert B.deep_upper(2, 5, 1, 5.0, 5.0)[0] < B.deep_upper(1, 5, 1, 5.0, 5.0)[0]
    assert B.deep_upper(3, 1000, 2, 1.0, 1.0)[0] > B.deep_upper(2, 1000, 2, 1.0, 1.0)[0]


@settings(max_examples=200, deadline=None)
@given(d=dims, N=st.integers(1, 500), L=st.integers(1, 6), u=nonneg, t=nonneg)
def test_lower_bounds_clamped(d, N, L, u, t):
    for v, p in (B.shallow_lower(d, N, u, t), B.deep_lower(d, N, L, u, t)):
        assert v >= 0.0 and 0.0 <= p <= 1.0
