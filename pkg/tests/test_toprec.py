import itertools

import numpy as np
import pytest

from conftest import GENERIC, interior_point, rel
from p1tr.curve_family import f1, solve_u
from p1tr.errors import DiagonalPole, RamificationPole
from p1tr.toprec import CorrelatorEvaluator, bergman, p_function, recursion_kernel


@pytest.fixture
def points(frame):
    lat = frame.lattice
    # clear of the ramification points by more than the contour exclusion radius
    return (0.13 * lat.omega_A + 0.11 * lat.omega_B + 0.02, 0.31 * lat.omega_A + 0.07 * lat.omega_B,
            -0.2 * lat.omega_A + 0.13 * lat.omega_B)


def test_bergman_symmetric(frame, rng):
    for _ in range(5):
        z1, z2 = interior_point(rng, frame.lattice), interior_point(rng, frame.lattice)
        assert rel(bergman(z1, z2, frame), bergman(z2, z1, frame)) < 1e-12


def test_bergman_normalisation(evaluator, points):
    z2 = points[0]
    assert abs(evaluator.cycle_integral(0, 2, 0, "A", [z2])) < 1e-9
    b = evaluator.cycle_integral(0, 2, 0, "B", [z2])
    assert abs(b - 2j * np.pi / evaluator.lattice.omega_A) < 1e-9


def test_bergman_diagonal_raises(frame, points):
    with pytest.raises(DiagonalPole):
        bergman(points[0], points[0], frame)


def test_p_function(frame, points):
    z1, z2 = points[0], points[1]
    lat = frame.lattice
    assert abs(p_function(z1 + lat.omega_A, frame) - p_function(z1, frame)) < 1e-10
    h = 1e-5
    fd = (p_function(z1 + h - z2, frame) - p_function(z1 - h - z2, frame)) / (2 * h)
    assert rel(fd, bergman(z1, z2, frame)) < 1e-6


def test_kernel_invariant_under_involution(frame, points):
    # the density is taken against 1/dz, which flips sign under z -> -z,
    # so invariance of the kernel as a form means an odd density
    z1, z = points[0], points[1]
    assert rel(recursion_kernel(z1, -z, frame), -recursion_kernel(z1, z, frame)) < 1e-12
    with pytest.raises(RamificationPole):
        recursion_kernel(z1, frame.omega_A / 2, frame)


def test_w03_symmetric(evaluator, points):
    vals = [evaluator.correlator(0, 3, list(p)) for p in itertools.permutations(points)]
    assert max(abs(v - vals[0]) for v in vals) < 1e-9 * abs(vals[0])


def test_w11_normalised_and_doubly_periodic(evaluator, points):
    assert abs(evaluator.cycle_integral(1, 1, 0, "A")) < 1e-8
    z = points[0]
    w = evaluator.correlator(1, 1, [z])
    assert abs(evaluator.correlator(1, 1, [z + evaluator.lattice.omega_B]) - w) < 1e-9 * max(1, abs(w))
    assert abs(evaluator.correlator(1, 1, [z + evaluator.lattice.omega_A]) - w) < 1e-9 * max(1, abs(w))


def test_w02_a_normalised(evaluator, points):
    assert abs(evaluator.cycle_integral(0, 2, 0, "A", [points[1]])) < 1e-9


def test_cache_does_not_change_values(frame, points):
    cold = CorrelatorEvaluator(frame).correlator(0, 3, list(points))
    warm = CorrelatorEvaluator(frame)
    warm.correlator(1, 1, [points[0]])
    warm.correlator(0, 3, list(points[::-1]))
    assert warm.correlator(0, 3, list(points)) == cold


def test_f1_variations(frame, evaluator):
    t, nu = GENERIC
    h = 1e-4
    dt = (f1(solve_u(t + h, nu)) - f1(solve_u(t - h, nu))) / (2 * h)
    dnu = (f1(solve_u(t, nu + h)) - f1(solve_u(t, nu - h))) / (2 * h)
    assert rel(dt, evaluator.residue_at_zero(1)) < 1e-5
    assert rel(dnu, evaluator.cycle_integral(1, 1, 0, "B")) < 1e-5


def test_w11_residue_is_value_at_origin(evaluator):
    # W_{1,1} density is holomorphic at z = 0: the residue of W/z is W(0)
    eps = 1e-3 * evaluator.scale
    near = [evaluator.correlator(1, 1, [eps * np.exp(2j * np.pi * k / 4)]) for k in range(4)]
    # averaging four symmetric points removes the O(eps) and O(eps^2) terms
    assert rel(np.mean(near), evaluator.residue_at_zero(1)) < 1e-8


def test_nu_derivative_of_w01(frame, evaluator, points):
    # d/dnu of y dx at fixed x is (2 pi i / omega_A) dz; its B-period slot form is oint_B B
    z2 = points[1]
    b = evaluator.cycle_integral(0, 2, 0, "B", [z2])
    assert rel(b, 2j * np.pi / frame.omega_A) < 1e-6


def test_f2_base_point_independent(evaluator):
    lat = evaluator.lattice
    a = evaluator.free_energy(2)
    b = evaluator.free_energy(2, base_point=0.12 * lat.omega_A + 0.55 * lat.omega_B)
    assert abs(a - b) < 1e-8


def test_f2_variations():
    t, nu = GENERIC
    ev = CorrelatorEvaluator(solve_u(t, nu))

    def stencil(fn, x0, h):
        return (-fn(x0 + 2 * h) + 8 * fn(x0 + h) - 8 * fn(x0 - h) + fn(x0 - 2 * h)) / (12 * h)

    h = 1e-2
    dt = stencil(lambda s: CorrelatorEvaluator(solve_u(s, nu)).free_energy(2), t, h)
    dnu = stencil(lambda s: CorrelatorEvaluator(solve_u(t, s)).free_energy(2), nu, h)
    assert rel(dt, ev.residue_at_zero(2)) < 1e-4
    assert rel(dnu, ev.cycle_integral(2, 1, 0, "B")) < 1e-4
