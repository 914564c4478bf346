import itertools

import mpmath
import numpy as np
import pytest

from conftest import GENERIC, QUOTED, rel
from p1tr.curve_family import f0, f0_asymptotic, f1, solve_u, u_app
from p1tr.errors import NoConvergence


def segment_integral(a, b, c, power):
    """oint-half of x^power dx / y between roots a, b (third root c), by tanh-sinh quadrature."""
    a, b, c = (mpmath.mpc(complex(z)) for z in (a, b, c))
    d = b - a

    def f(theta):
        # x = a + d (1 - cos theta)/2 removes both endpoint square roots
        s = (1 - mpmath.cos(theta)) / 2
        x = a + d * s
        kc = mpmath.sqrt((x - c) / (a - c)) * mpmath.sqrt(a - c)
        return x**power * d / (2 * kc * mpmath.sqrt(d) * mpmath.sqrt(-d))

    return complex(mpmath.quad(f, [0, mpmath.pi]))


def test_periods_against_segment_quadrature(quoted_frame):
    fr = quoted_frame
    e = fr.roots.values
    i, j = fr.lattice.convention.a_pair
    k = 3 - i - j
    omega = 2 * segment_integral(e[i], e[j], e[k], 0)
    eta = -2 * segment_integral(e[i], e[j], e[k], 1)
    # the orientation is fixed by the target nu, so compare up to a common sign
    sgn = 1 if abs(omega - fr.omega_A) < abs(omega + fr.omega_A) else -1
    assert rel(sgn * omega, fr.omega_A) < 1e-10
    assert rel(sgn * eta, fr.eta_A) < 1e-10


def test_quoted_frame_fixture(quoted_frame):
    # values from the first verified run (periods checked by segment quadrature above)
    assert abs(quoted_frame.u - (-17.031751113270804 - 0.9186862532484622j)) < 1e-10
    assert abs(quoted_frame.tau - (-0.23853703791717676 + 1.3097444692042368j)) < 1e-10
    assert quoted_frame.tau.imag > 0


def test_u_app_nu_zero():
    t = -50.0
    s = 24**0.25 * 50**1.25
    assert rel(u_app(t, 0), s * s / (9 * t)) < 1e-14
    assert rel(u_app(t, 0), 24**0.5 * 50**2.5 / (9 * t)) < 1e-14
    assert np.isfinite(u_app(t, 0.5))


def test_solve_round_trip(frame):
    assert frame.a_period_residual < 1e-10
    assert rel(frame.ydx_A / (2j * np.pi), GENERIC[1]) < 1e-10


def test_pde_for_u(frame):
    t, nu = GENERIC
    h = 1e-5
    du_nu = (solve_u(t, nu + h, frame.u).u - solve_u(t, nu - h, frame.u).u) / (2 * h)
    du_t = (solve_u(t + h, nu, frame.u).u - solve_u(t - h, nu, frame.u).u) / (2 * h)
    assert rel(du_nu, 4j * np.pi / frame.omega_A) < 1e-6
    assert rel(du_t, 2 * frame.eta_A / frame.omega_A) < 1e-6
    assert rel(frame.du_dt, du_t) < 1e-6 and rel(frame.du_dnu, du_nu) < 1e-6


def test_f0_derivatives(frame):
    t, nu = GENERIC
    h = 1e-5
    dt = (f0(solve_u(t + h, nu, frame.u)) - f0(solve_u(t - h, nu, frame.u))) / (2 * h)
    dnu = (f0(solve_u(t, nu + h, frame.u)) - f0(solve_u(t, nu - h, frame.u))) / (2 * h)
    assert rel(dt, frame.u / 2) < 1e-6
    assert rel(dnu, frame.ydx_B) < 1e-6


@pytest.mark.parametrize("t, tol", [(-50.0, 1e-2), (-200.0, 1e-3)])
def test_f0_large_t(t, tol):
    fr = solve_u(t, 0.1)
    assert rel(f0(fr), f0_asymptotic(t, 0.1, terms=4)) < tol


def test_f1_symmetric_in_roots(frame):
    e = frame.roots.values
    base = f1(frame)
    for perm in itertools.permutations(range(3)):
        p = e[list(perm)]
        disc = 16 * ((p[0] - p[1]) * (p[1] - p[2]) * (p[2] - p[0])) ** 2
        assert rel(-(6 * np.log(frame.omega_A) + np.log(disc)) / 12, base) < 1e-13


def test_solver_rejects_non_finite_input():
    with pytest.raises(ValueError):
        solve_u(-5.0, 0.3, seed=np.nan)
    with pytest.raises(ValueError):
        solve_u(complex(np.inf), 0.3)


def test_solver_step_budget():
    with pytest.raises(NoConvergence):
        solve_u(-5.0 + 0.3j, 0.3, seed=-30.0, max_steps=1)
