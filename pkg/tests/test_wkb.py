import numpy as np
import pytest

from conftest import GENERIC, rel
from p1tr.curve_family import solve_u
from p1tr.errors import BranchPointInput, BudgetExceeded
from p1tr.special_functions import inverse_abel, periodic_zeta, weierstrass_jet
from p1tr.toprec import bergman
from p1tr.wkb import (WkbCoefficients, a_cycle_monodromy, cauchy_derivatives, f02, riccati_residual, s_higher,
                      s_minus1, s_minus1_closed, s_one_dx, s_zero, s_zero_dx, s_zero_from_sigma)

X_POINTS = (6.0 + 2.0j, -3.0 + 4.0j, 5.0 - 5.0j)


def q_of(frame, x):
    return 4 * x**3 + 2 * frame.t * x + frame.u


def test_s_minus1_routes_agree(frame):
    for x in X_POINTS:
        assert rel(s_minus1(x, frame), s_minus1_closed(x, frame)) < 1e-10


def test_s_minus1_leading_equation(frame):
    x = X_POINTS[0]
    d = cauchy_derivatives(lambda xx: s_minus1_closed(xx, frame), x, 0.05, 1)[1]
    assert abs(d * d - q_of(frame, x)) < 1e-9 * abs(q_of(frame, x))


def test_s_minus1_parameter_derivatives(frame):
    t, nu = GENERIC
    x = X_POINTS[0]
    h = 1e-5
    dt = (s_minus1(x, solve_u(t + h, nu, frame.u)) - s_minus1(x, solve_u(t - h, nu, frame.u))) / (2 * h)
    dnu = (s_minus1(x, solve_u(t, nu + h, frame.u)) - s_minus1(x, solve_u(t, nu - h, frame.u))) / (2 * h)
    z = inverse_abel(x, frame.lattice)
    assert rel(dt, periodic_zeta(z, frame.lattice)) < 1e-5
    assert rel(dnu, 2j * np.pi / frame.omega_A * z) < 1e-5


def test_s_minus1_large_x(frame):
    x = 1e4
    rest = s_minus1(x, frame) - 0.8 * x**2.5 - frame.t * x**0.5
    # the remainder decays like x^{-1/2}
    rest4 = s_minus1(4 * x, frame) - 0.8 * (4 * x) ** 2.5 - frame.t * (4 * x) ** 0.5
    assert abs(rest) * np.sqrt(x) < 10 * abs(frame.u)
    assert rel(rest4, rest / 2) < 1e-3


def test_s_zero_derivative_and_sigma_form(frame):
    for x in X_POINTS:
        fd = cauchy_derivatives(lambda xx: s_zero(xx, frame), x, 0.05, 1, unwrap=np.pi / 2)[1]
        assert rel(fd, s_zero_dx(x, frame)) < 1e-6
        d = s_zero(x, frame) - s_zero_from_sigma(x, frame)
        k = d / (0.5j * np.pi)
        assert abs(k - round(k.real)) < 1e-9


def test_s_zero_large_x(frame):
    vals = [s_zero(x, frame) + 0.25 * np.log(x) for x in (1e4, 4e4)]
    d = vals[1] - vals[0]
    k = d / (0.5j * np.pi)
    assert abs(k - round(k.real)) < 0.05


def test_branch_point_input(frame):
    with pytest.raises(BranchPointInput):
        s_zero(complex(frame.roots.values[0]), frame)


def test_f02_mixed_derivative(frame):
    # f02 - log(x1 - x2) has mixed derivative W02 - dx1 dx2/(x1 - x2)^2, with the
    # second point entering through its image -z2 (which has the same x)
    lat = frame.lattice
    z1 = 0.13 * lat.omega_A + 0.11 * lat.omega_B + 0.02
    z2 = 0.31 * lat.omega_A + 0.07 * lat.omega_B

    def full(a, b):
        xa, xb = weierstrass_jet(a, lat)[0], weierstrass_jet(b, lat)[0]
        return f02(a, b, frame) - np.log(xa - xb)

    h = 2.5e-4
    mixed = (full(z1 + h, z2 + h) - full(z1 + h, z2 - h) - full(z1 - h, z2 + h) + full(z1 - h, z2 - h)) / (4 * h * h)
    p1, dp1 = weierstrass_jet(z1, lat)[:2]
    p2, dp2 = weierstrass_jet(z2, lat)[:2]
    expected = bergman(z1, -z2, frame) - dp1 * dp2 / (p1 - p2) ** 2
    assert rel(mixed, expected) < 1e-5


def test_s_one_paths_and_derivative(frame, evaluator):
    x = X_POINTS[0]
    z = inverse_abel(x, frame.lattice)
    a = s_higher(1, x, evaluator)
    b = s_higher(1, x, evaluator, waypoint=z / 2 + 0.05j * z)
    assert abs(a - b) < 1e-7 * max(1, abs(a))
    h = 1e-3
    fd = (s_higher(1, x + h, evaluator) - s_higher(1, x - h, evaluator)) / (2 * h)
    assert rel(fd, s_one_dx(x, evaluator)) < 1e-5


def test_s_one_decays(frame, evaluator):
    small = abs(s_higher(1, 400.0, evaluator))
    assert small * np.sqrt(400.0) < 1.0


def test_riccati(frame, evaluator):
    for x in X_POINTS:
        assert abs(riccati_residual(0, x, frame)) < 1e-6
    for x in X_POINTS:
        assert abs(riccati_residual(1, x, frame, evaluator)) < 1e-5
    with pytest.raises(BudgetExceeded):
        riccati_residual(2, X_POINTS[0], frame, evaluator)


def test_a_cycle_monodromy(frame, evaluator):
    assert abs(a_cycle_monodromy(-1, frame) - 2j * np.pi * frame.nu) < 1e-8
    assert abs(a_cycle_monodromy(0, frame)) < 1e-7
    assert abs(a_cycle_monodromy(1, frame, evaluator)) < 1e-7


def test_wkb_table(frame, evaluator):
    table = WkbCoefficients.compute(frame, [X_POINTS[0]], 1, evaluator)
    hbar = 0.05
    x = X_POINTS[0]
    direct = s_minus1(x, frame) / hbar + s_zero(x, frame) + hbar * s_higher(1, x, evaluator)
    assert rel(table.series(x, hbar), direct) < 1e-12
