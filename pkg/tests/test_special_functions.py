import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import interior_point, rel
from p1tr.errors import DegenerateCurve, LatticePoint
from p1tr.special_functions import (cubic_roots, inverse_abel, periodic_zeta, periods_from_roots, sigma,
                                    theta_jet, weierstrass_jet, wp)


def theta(kind, v, tau):
    return complex(theta_jet(kind, v, tau).values[0])


def test_roots_of_cube_root_case():
    r = cubic_roots(0, 4)
    expected = [-1, 0.5 + 0.5j * np.sqrt(3), 0.5 - 0.5j * np.sqrt(3)]
    for e in expected:
        assert min(abs(r.values - e)) < 1e-14


@given(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False),
       st.complex_numbers(min_magnitude=0.5, max_magnitude=50, allow_nan=False, allow_infinity=False))
@settings(max_examples=50, deadline=None)
def test_roots_sum_to_zero(t, u):
    try:
        r = cubic_roots(t, u)
    except DegenerateCurve:
        return
    assert abs(sum(r.values)) < 1e-12 * r.scale
    for e in r.values:
        assert abs(4 * e**3 + 2 * t * e + u) < 1e-10 * r.scale**3


def test_degenerate_curve():
    # 8t^3 + 27u^2 = 0 at t = -3, u = sqrt(8)
    with pytest.raises(DegenerateCurve):
        cubic_roots(-3, np.sqrt(8.0))


def test_bilinear_identity_and_upper_half_plane(frame):
    lat = frame.lattice
    assert lat.bilinear_residual < 1e-10
    assert lat.tau.imag > 0
    assert -0.5 < lat.tau.real <= 0.5


def test_j_invariant_zero_when_g2_vanishes():
    lat = periods_from_roots(cubic_roots(0, 4))
    g2, g3 = lat.g2, lat.g3
    assert g2 == 0
    j = 1728 * g2**3 / (g2**3 - 27 * g3**2)
    assert abs(j) < 1e-14
    # equianharmonic lattice: tau is a primitive sixth/third root of unity up to SL2(Z)
    assert abs(abs(lat.tau) - 1) < 1e-10 or abs(lat.tau.imag - np.sqrt(3) / 2) < 1e-10


def test_theta_fixed_value():
    # direct k-sum with |k| <= 20
    direct = sum(np.exp(-np.pi * k * k) for k in range(-20, 21))
    assert abs(direct - 1.086434811213308) < 1e-15
    assert abs(theta("00", 0, 1j) - 1.086434811213308) < 1e-14


@given(st.floats(-0.5, 0.5), st.floats(0.3, 2.0), st.complex_numbers(max_magnitude=2, allow_nan=False))
@settings(max_examples=50, deadline=None)
def test_theta_parity_and_periodicity(re_tau, im_tau, v):
    tau = complex(re_tau, im_tau)
    assert abs(theta("11", 0, tau)) < 1e-13
    assert rel(theta("00", -v, tau), theta("00", v, tau)) < 1e-11
    assert rel(theta("00", v + 1, tau), theta("00", v, tau)) < 1e-11


def test_theta_derivative_against_differences(rng):
    tau = 0.2 + 0.9j
    v = 0.3 - 0.1j
    jet = theta_jet("00", v, tau, 2).values
    h = 1e-4
    fd1 = (theta("00", v + h, tau) - theta("00", v - h, tau)) / (2 * h)
    fd2 = (theta("00", v + h, tau) - 2 * theta("00", v, tau) + theta("00", v - h, tau)) / h**2
    assert rel(jet[1], fd1) < 1e-7
    assert rel(jet[2], fd2) < 1e-5


def test_weierstrass_identities(frame, rng):
    lat = frame.lattice
    for _ in range(10):
        z = interior_point(rng, lat)
        w = interior_point(rng, lat)
        p, dp, ddp, zeta, _ = weierstrass_jet(z, lat)
        assert rel(wp(-z, lat), p) < 1e-11
        assert rel(dp * dp, 4 * p**3 - lat.g2 * p - lat.g3) < 1e-9
        assert rel(ddp, 6 * p * p - lat.g2 / 2) < 1e-9
        zeta_shift = weierstrass_jet(z + lat.omega_A, lat)[3]
        assert abs(zeta_shift - zeta - lat.eta_A) < 1e-10 * max(1, abs(lat.eta_A))
        if min(lat.distance_to_lattice(z + w), lat.distance_to_lattice(z - w)) > 0.05 * abs(lat.omega_A):
            lhs = sigma(z + w, lat) * sigma(z - w, lat) / (sigma(z, lat) ** 2 * sigma(w, lat) ** 2)
            assert rel(lhs, wp(w, lat) - p) < 1e-8


def test_periodic_zeta_quasi_periods(frame, rng):
    lat = frame.lattice
    z = interior_point(rng, lat)
    pz = periodic_zeta(z, lat)
    assert abs(periodic_zeta(z + lat.omega_A, lat) - pz) < 1e-10
    assert abs(periodic_zeta(z + lat.omega_B, lat) - pz - 2j * np.pi / lat.omega_A) < 1e-10


def test_lattice_point_raises(frame):
    with pytest.raises(LatticePoint):
        wp(frame.omega_A, frame.lattice)


def test_inverse_abel_round_trip_and_derivative(frame, rng):
    lat = frame.lattice
    scale = frame.roots.scale
    for _ in range(20):
        x = complex(rng.uniform(0.5, 3) * scale * np.exp(1j * rng.uniform(-np.pi, np.pi)))
        if min(abs(frame.roots.values - x)) < 0.2:
            continue
        z = inverse_abel(x, lat)
        assert rel(wp(z, lat), x) < 1e-10
    x = 4.0 + 3.0j
    h = 1e-4
    dz = (inverse_abel(x + h, lat) - inverse_abel(x - h, lat)) / (2 * h)
    y = np.sqrt(4 * x**3 + 2 * frame.t * x + frame.u)
    assert min(rel(dz, 1 / y), rel(dz, -1 / y)) < 1e-6


def test_inverse_abel_large_x(frame):
    x = 1e4
    z = inverse_abel(x, frame.lattice)
    assert abs(z * np.sqrt(x) + 1) < 0.05
