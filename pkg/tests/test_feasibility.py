import numpy as np
import pytest
from scipy.optimize import linprog

from liplab.feasibility import HalfspaceSystem, Status, simplex_max, solve_margin

ORDER = {Status.INFEASIBLE: 0, Status.LOWER_DIM: 1, Status.FULL_DIM: 2}


def system(rows, d=2):
    return HalfspaceSystem.from_rows(rows, d)


def test_half_line():
    r = solve_margin(system([([1.0], 0.0, "gt")], d=1))
    assert r.status is Status.FULL_DIM
    assert r.witness[0] > 0 and r.margin > 0


def test_opposite_strict_rows_infeasible():
    r = solve_margin(system([([1.0], 0.0, "gt"), ([-1.0], 0.0, "gt")], d=1))
    assert r.status is Status.INFEASIBLE and r.witness is None


def test_hyperplane_is_lower_dimensional():
    r = solve_margin(system([([1.0, 0.0], 0.0, "le"), ([-1.0, 0.0], 0.0, "le")]))
    assert r.status is Status.LOWER_DIM
    assert r.witness[0] == pytest.approx(0.0, abs=1e-12)


def test_bounded_empty_triangle():
    # x > 5, y > 7, x + y <= 12
    rows = [([1.0, 0.0], -5.0, "gt"), ([0.0, 1.0], -7.0, "gt"), ([1.0, 1.0], -12.0, "le")]
    assert solve_margin(system(rows)).status is Status.INFEASIBLE


def test_strict_rows_on_a_line_are_lower_dimensional():
    # x > 0 on the line y = 0
    rows = [([1.0, 0.0], 0.0, "gt"), ([0.0, 1.0], 0.0, "le"), ([0.0, -1.0], 0.0, "le")]
    r = solve_margin(system(rows))
    assert r.status is Status.LOWER_DIM
    assert r.witness[0] > 0 and abs(r.witness[1]) < 1e-12


def test_chebyshev_margin_of_a_triangle():
    # x > 0, y > 0, x + y < 1: inradius (2 - sqrt 2)/2
    rows = [([1.0, 0.0], 0.0, "gt"), ([0.0, 1.0], 0.0, "gt"), ([-1.0, -1.0], 1.0, "gt")]
    r = solve_margin(system(rows))
    assert r.status is Status.FULL_DIM
    assert r.margin == pytest.approx((2 - np.sqrt(2)) / 2, rel=1e-10)
    assert system(rows).ball_margin(r.witness) == pytest.approx(r.margin, rel=1e-9)


def test_constant_rows_decided_directly():
    assert solve_margin(system([([0.0, 0.0], 1.0, "gt")])).status is Status.FULL_DIM
    assert solve_margin(system([([0.0, 0.0], 0.0, "gt")])).status is Status.INFEASIBLE
    assert solve_margin(system([([0.0, 0.0], 0.0, "le"), ([1.0, 0.0], 0.0, "gt")])).status is Status.FULL_DIM
    assert solve_margin(HalfspaceSystem.empty(3)).status is Status.FULL_DIM


def test_row_scaling_does_not_change_answer():
    rows = [([1.0, 0.0], 0.0, "gt"), ([0.0, 1.0], 0.0, "gt"), ([-1.0, -1.0], 1.0, "gt")]
    scaled = [(1e6 * np.array(a), 1e6 * b, rel) for a, b, rel in rows]
    assert solve_margin(system(scaled)).margin == pytest.approx(solve_margin(system(rows)).margin, rel=1e-9)


def random_system(rng, d=2):
    m = int(rng.integers(1, 7))
    A = rng.standard_normal((m, d))
    b = rng.standard_normal(m)
    strict = rng.uniform(size=m) < 0.7
    return HalfspaceSystem(A, b, strict)


def test_rejection_sampling_oracle():
    rng = np.random.default_rng(20)
    # half the points spread wide, half dense near the origin where small cells live
    pts = np.vstack([rng.uniform(-60, 60, size=(500_000, 2)), rng.uniform(-3, 3, size=(500_000, 2))])
    agree, n = 0, 300
    for _ in range(n):
        sys = random_system(rng)
        S = pts @ sys.A.T + sys.b
        inside = np.all(np.where(sys.strict, S > 0, S < 0), axis=1).any()
        full = solve_margin(sys).status is Status.FULL_DIM
        # a sampled interior point proves full dimension: never miss one
        assert full or not inside
        agree += full == inside
    assert agree >= 0.99 * n


def test_soundness_and_linprog_margin():
    rng = np.random.default_rng(21)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        sys = random_system(rng, d)
        r = solve_margin(sys)
        if r.status is Status.INFEASIBLE:
            continue
        slack = sys.signed_slack(r.witness)
        assert np.all(slack >= -1e-9)
        if r.status is Status.FULL_DIM:
            assert sys.contains(r.witness)
            assert sys.ball_margin(r.witness) >= r.margin - 1e-9
        # independent Chebyshev LP: max t, sigma_i (a_i.x + b_i)/|a_i| >= t, t <= 1
        nrm = np.linalg.norm(sys.A, axis=1)
        sig = np.where(sys.strict, 1.0, -1.0)
        G = np.hstack([-(sig / nrm)[:, None] * sys.A, np.ones((len(sys), 1))])
        h = sig * sys.b / nrm
        ref = linprog(np.r_[np.zeros(d), -1.0], A_ub=G, b_ub=h, bounds=[(None, None)] * d + [(None, 1.0)])
        t_ref = -ref.fun
        if r.status is Status.FULL_DIM:
            assert r.margin == pytest.approx(t_ref, abs=1e-8)
        else:
            assert t_ref <= 1e-7


def test_adding_rows_is_monotone():
    rng = np.random.default_rng(22)
    for _ in range(100):
        sys = random_system(rng)
        before = solve_margin(sys)
        more = sys.add(rng.standard_normal(2), rng.standard_normal(), bool(rng.integers(2)))
        after = solve_margin(more)
        assert ORDER[after.status] <= ORDER[before.status]
        if after.status is Status.FULL_DIM:
            assert after.margin <= before.margin + 1e-9


def test_simplex_matches_linprog():
    rng = np.random.default_rng(23)
    for _ in range(100):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        A = rng.standard_normal((m, n))
        A = np.vstack([A, np.ones((1, n))])  # keeps the problem bounded
        b = np.append(rng.standard_normal(m), 5.0)
        c = rng.standard_normal(n)
        z = simplex_max(c, A, b)
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * n)
        if ref.status == 2:
            assert z is None
        else:
            assert z is not None
            assert c @ z == pytest.approx(-ref.fun, abs=1e-8)
            assert np.all(A @ z <= b + 1e-9) and np.all(z >= -1e-12)


def test_bland_rule_terminates_on_cycling_example():
    # Beale's degenerate LP cycles under the textbook largest-coefficient rule
    c = np.array([0.75, -20.0, 0.5, -6.0])
    A = np.array([[0.25, -8.0, -1.0, 9.0], [0.5, -12.0, -0.5, 3.0], [0.0, 0.0, 1.0, 0.0]])
    b = np.array([0.0, 0.0, 1.0])
    z = simplex_max(c, A, b)
    ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * 4)
    assert c @ z == pytest.approx(1.25, abs=1e-12)
    assert -ref.fun == pytest.approx(1.25, abs=1e-9)


def test_bad_relation_rejected():
    with pytest.raises(ValueError):
        system([([1.0, 0.0], 0.0, "ge")])
    with pytest.raises(ValueError):
        solve_margin(system([([1.0, 0.0], 0.0, "gt")]), cap=0.0)
