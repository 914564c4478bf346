"""WKB coefficients ``S_m(x)`` of the quantum curve and their consistency checks.

``S_{-1}`` and ``S_0`` have closed forms; ``S_m`` for ``m >= 1`` are
diagonal values of iterated integrals ``F_{g,n} = int_0 ... int_0 W_{g,n}``
with ``2g - 2 + n = m``.  Derivatives in ``x`` and ``t`` are taken with
Cauchy-circle differentiation: for an analytic ``f``, the trapezoid rule on
a circle gives the Taylor coefficients with geometric accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .curve_family import EllipticFrame, f1, solve_u
from .errors import BranchPointInput, BudgetExceeded, PathCrossesCut, QuadratureFailure
from .special_functions import (
    TWO_PI_I,
    inverse_abel,
    periodic_zeta,
    theta_jet,
    weierstrass_jet,
    _theta11_prime_zero,
)
from .toprec import CorrelatorEvaluator, ydx_primitive

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


# --------------------------------------------------------------------------
# derivative helpers
# --------------------------------------------------------------------------

def cauchy_derivatives(f, x0: complex, radius: float, order: int, nodes: int = 16,
                       unwrap: float | None = None) -> np.ndarray:
    """Derivatives ``f^(k)(x0)``, ``k = 0..order``, from samples on a circle.

    Parameters
    ----------
    f : callable
        Analytic function of one complex variable.
    radius : float
        Circle radius; must be well inside the disc of analyticity.
    unwrap : float, optional
        If given, sample-to-sample jumps of the imaginary part by multiples
        of ``unwrap`` are removed first (for logarithms with principal
        branches).
    """
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    pts = x0 + radius * np.exp(1j * theta)
    vals = np.array([f(p) for p in pts], dtype=complex)
    if unwrap is not None:
        for k in range(1, nodes):
            jump = round((vals[k] - vals[k - 1]).imag / unwrap)
            vals[k:] -= 1j * unwrap * jump
    coeffs = np.fft.fft(vals) / nodes
    return np.array([coeffs[k] * math.factorial(k) / radius**k for k in range(order + 1)])


# --------------------------------------------------------------------------
# S_{-1}
# --------------------------------------------------------------------------

def _ray_check(x: complex, frame: EllipticFrame) -> None:
    e = frame.roots.values
    scale = frame.roots.scale
    if np.min(np.abs(x - e)) < 1e-10 * scale:
        raise BranchPointInput(f"x={x} is a branch point")
    d = x / abs(x)
    for ei in e:
        along = (ei * np.conj(d)).real
        if along >= abs(x) and abs((ei * np.conj(d)).imag) < 1e-9 * scale:
            raise PathCrossesCut(f"ray from infinity to x={x} hits branch point {ei}")


def _s_minus1_tail(x0: complex, t: complex, u: complex, panels: int, order: int = 16) -> complex:
    """``int_inf^x0 (y - 2x^{3/2} - (t/2) x^{-1/2}) dx`` along the ray, ``x = x0/s^2``."""
    gx, gw = _gauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    s = (0.5 * (b - a) * gx[None, :] + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * gw[None, :]).ravel()
    x = x0 / s**2
    wq = (2.0 * t * x + u) / (4.0 * x**3)
    root = np.sqrt(1.0 + wq)
    # continue sqrt(1 + w) from s = 0 (where it is 1) by sign matching
    prev = 1.0 + 0j
    for k in range(len(root)):
        if abs(root[k] - prev) > abs(root[k] + prev):
            root[k] = -root[k]
        prev = root[k]
    # sqrt(1+w) - 1 - a/2 with w = a + b, a = t/(2x^2), b = u/(4x^3), written
    # without cancellation on the sheet where sqrt(1+w) is near +1
    a_ = t / (2.0 * x * x)
    b_ = u / (4.0 * x**3)
    near = np.abs(1.0 + root) > 1.0
    safe = np.where(near, 1.0 + root, 1.0)
    cm1 = wq / safe
    diff = np.where(near, (2.0 * b_ - a_ * cm1) / (2.0 * safe), root - 1.0 - 0.5 * a_)
    x32 = x * np.sqrt(x)
    g = 2.0 * x32 * diff
    dxds = -2.0 * x0 / s**3
    return complex(np.sum(g * dxds * w))


def s_minus1(x: complex, frame: EllipticFrame, *, tol: float = 1e-13, max_panels: int = 4096) -> complex:
    """Regularised ``int_inf^x y dx`` by quadrature along the ray through ``x``.

    ``(4/5) x^{5/2} + t x^{1/2} + int_inf^x (y - 2x^{3/2} - (t/2) x^{-1/2}) dx``
    with principal powers and ``y ~ +2 x^{3/2}``.  The panel count doubles
    until two successive values agree to ``tol`` relative.

    Raises
    ------
    PathCrossesCut
        If a branch point lies on the ray between ``x`` and infinity.
    QuadratureFailure
        If the panel count exceeds ``max_panels``.
    """
    x = complex(x)
    _ray_check(x, frame)
    t, u = frame.t, frame.u
    head = 0.8 * x * x * np.sqrt(x) + t * np.sqrt(x)
    panels = 8
    prev = _s_minus1_tail(x, t, u, panels)
    while True:
        panels *= 2
        cur = _s_minus1_tail(x, t, u, panels)
        if abs(cur - prev) <= tol * max(1.0, abs(head + cur)):
            return complex(head + cur)
        if panels >= max_panels:
            raise QuadratureFailure(f"S_-1 quadrature did not converge at x={x}")
        prev = cur


def s_minus1_closed(x: complex, frame: EllipticFrame) -> complex:
    """``S_{-1}`` as the closed primitive of ``wp'(z)^2 dz`` evaluated at ``z(x)``."""
    z = inverse_abel(x, frame.lattice)
    return complex(ydx_primitive(z, frame.lattice))


# --------------------------------------------------------------------------
# S_0
# --------------------------------------------------------------------------

def _log_theta11(v: complex, tau: complex) -> complex:
    jet = theta_jet("11", v, tau, 0)
    return complex(np.log(jet.scaled[0]) + jet.log_scale)


def s_zero(x: complex, frame: EllipticFrame) -> complex:
    """``-(1/4) log(4x^3+2tx+u) + log(-theta11'(0)/omega_A) - log theta11(z(x)/omega_A)``.

    Principal logarithms throughout; differences of ``S_0`` are meaningful
    only modulo ``i pi / 2``.

    Raises
    ------
    BranchPointInput
        If ``x`` is a branch point.
    """
    x = complex(x)
    lat = frame.lattice
    q = 4 * x**3 + 2 * frame.t * x + frame.u
    if abs(q) < 1e-20 * max(1.0, abs(x) ** 3) or np.min(np.abs(x - frame.roots.values)) < 1e-10 * frame.roots.scale:
        raise BranchPointInput(f"x={x} is a branch point")
    z = inverse_abel(x, lat)
    th1 = _theta11_prime_zero(lat.tau)
    return complex(-0.25 * np.log(q) + np.log(-th1 / lat.omega_A) - _log_theta11(z / lat.omega_A, lat.tau))


def s_zero_from_sigma(x: complex, frame: EllipticFrame) -> complex:
    """Half the regularised diagonal ``F_{0,2}(z, z)`` written with the sigma function.

    ``-(1/2) log(-wp'(z)) - log sigma(z) + eta_A z^2 / (2 omega_A)``; agrees
    with :func:`s_zero` modulo ``i pi / 2``.
    """
    lat = frame.lattice
    z = inverse_abel(complex(x), lat)
    _, dp, _, _, logsig = weierstrass_jet(z, lat)
    return complex(-0.5 * np.log(-dp) - logsig + lat.eta_A * z * z / (2 * lat.omega_A))


def f02(z1: complex, z2: complex, frame) -> complex:
    """``-log(sigma(z1+z2)/(sigma(z1) sigma(z2))) + (eta_A/omega_A) z1 z2``."""
    lat = frame.lattice if hasattr(frame, "lattice") else frame
    ls = weierstrass_jet(np.array([z1 + z2, z1, z2]), lat)[4]
    return complex(-(ls[0] - ls[1] - ls[2]) + lat.eta_A / lat.omega_A * z1 * z2)


def s_zero_dx(x: complex, frame: EllipticFrame) -> complex:
    """Closed form ``-(1/4) d/dx log(4x^3+2tx+u) + P(z(x)) / y(x)``."""
    x = complex(x)
    lat = frame.lattice
    z = inverse_abel(x, lat)
    _, y, _, _, _ = weierstrass_jet(z, lat)
    q = 4 * x**3 + 2 * frame.t * x + frame.u
    dq = 12 * x * x + 2 * frame.t
    return complex(-0.25 * dq / q + periodic_zeta(z, lat) / y)


# --------------------------------------------------------------------------
# S_m, m >= 1
# --------------------------------------------------------------------------

def _path(z_end: complex, evaluator: CorrelatorEvaluator, waypoint: complex | None = None):
    """Piecewise-straight path ``0 -> [waypoint ->] z_end`` clear of the exclusion discs."""
    lat = evaluator.lattice
    clear = 1.05 * evaluator.exclusion

    def ok(a, b):
        s = np.linspace(0.0, 1.0, 201)
        zs = a + s * (b - a)
        return all(np.min(lat.distance_to_lattice(zs, offset=r)) > clear for r in evaluator.half_periods)

    if waypoint is not None:
        pts = [0j, complex(waypoint), complex(z_end)]
        if not all(ok(pts[i], pts[i + 1]) for i in range(len(pts) - 1)):
            raise QuadratureFailure("requested integration path enters an exclusion disc")
        return pts
    if ok(0j, z_end):
        return [0j, complex(z_end)]
    normal = 1j * z_end / abs(z_end) if z_end != 0 else 1.0
    for k in (0.25, -0.25, 0.5, -0.5, 0.75, -0.75, 1.0, -1.0):
        mid = 0.5 * z_end + k * evaluator.scale * normal
        if ok(0j, mid) and ok(mid, z_end):
            return [0j, mid, complex(z_end)]
    raise QuadratureFailure("no simple path from 0 to z(x) avoids the ramification points")


def _path_nodes(pts, order: int):
    gx, gw = _gauss(order)
    zs, ws = [], []
    for a, b in zip(pts[:-1], pts[1:]):
        zs.append(0.5 * (a + b) + 0.5 * (b - a) * gx)
        ws.append(0.5 * (b - a) * gw)
    return np.concatenate(zs), np.concatenate(ws)


def open_correlator(g: int, n: int, z_end: complex, evaluator: CorrelatorEvaluator,
                    order: int = 20, waypoint: complex | None = None) -> complex:
    """Diagonal ``F_{g,n}(z, ..., z) = int_0^z ... int_0^z W_{g,n}`` by tensor Gauss-Legendre."""
    pts = _path(z_end, evaluator, waypoint)
    zs, ws = _path_nodes(pts, order)
    idx = np.array(list(product(range(len(zs)), repeat=n)))
    rows = zs[idx]
    weights = np.prod(ws[idx], axis=1)
    vals = evaluator.correlator_grid(g, n, rows)
    return complex(np.sum(vals * weights))


def s_higher(m: int, x: complex, evaluator: CorrelatorEvaluator, *, order: int = 20,
             waypoint: complex | None = None, max_m: int = 2) -> complex:
    """``S_m(x) = sum_{2g-2+n=m} F_{g,n}(z(x), ..., z(x)) / n!`` for ``m >= 1``.

    Raises
    ------
    BudgetExceeded
        If ``m > max_m`` or the evaluator's correlator budget is too small.
    """
    if m < 1:
        raise ValueError("s_higher needs m >= 1")
    if m > max_m or m > evaluator.config.max_order:
        raise BudgetExceeded(f"S_{m} exceeds the nested-integral budget")
    z = inverse_abel(complex(x), evaluator.lattice)
    total = 0j
    for g in range(0, (m + 2) // 2 + 1):
        n = m + 2 - 2 * g
        if n < 1:
            continue
        total += open_correlator(g, n, z, evaluator, order, waypoint) / math.factorial(n)
    return complex(total)


def s_one_dz(z: complex, evaluator: CorrelatorEvaluator) -> complex:
    """``dS_1/dz`` in semi-closed form.

    ``d/dz F_{0,3}(z,z,z)/6 = (1/2) int_0^z int_0^z W_{0,3}(z, b, c)``; the
    inner integrals of the Bergman kernels inside the recursion are
    ``int_0^z B(p, b) db = P(p) - P(p - z)``, leaving one contour sum.
    """
    ev = evaluator
    ids, refl, _ = ev._pool(0)
    nodes = ev._values(ids)
    zid = ev.point_ids(np.array([z]))
    kvec = ev._kmat(0, zid)[0]
    lat = ev.lattice
    inner = periodic_zeta(nodes, lat) - periodic_zeta(nodes - z, lat)
    # W_{0,3}(z,b,c) = -sum_k K w [B(n_k,b) B(nbar_k,c) + B(n_k,c) B(nbar_k,b)]
    w03_part = -np.sum(kvec * 2.0 * inner * inner[refl])
    return complex(0.5 * w03_part + ev.correlator(1, 1, [z]))


def s_one_dx(x: complex, evaluator: CorrelatorEvaluator) -> complex:
    lat = evaluator.lattice
    z = inverse_abel(complex(x), lat)
    _, y, _, _, _ = weierstrass_jet(z, lat)
    return s_one_dz(z, evaluator) / y


@dataclass
class WkbCoefficients:
    """Tabulated ``S_m(x)`` for ``m = -1..order`` at a list of points."""

    frame: EllipticFrame
    order: int
    values: dict = field(default_factory=dict)

    @classmethod
    def compute(cls, frame: EllipticFrame, xs, order: int = 1,
                evaluator: CorrelatorEvaluator | None = None) -> "WkbCoefficients":
        ev = evaluator or CorrelatorEvaluator(frame)
        out = cls(frame, order)
        for x in xs:
            x = complex(x)
            out.values[(-1, x)] = s_minus1(x, frame)
            out.values[(0, x)] = s_zero(x, frame)
            for m in range(1, order + 1):
                out.values[(m, x)] = s_higher(m, x, ev)
        return out

    def series(self, x: complex, hbar: complex, sign: int = 1) -> complex:
        """``sum_m (sign * hbar)^m S_m(x)``, the exponent of the wave function."""
        return complex(sum((sign * hbar) ** m * self.values[(m, complex(x))]
                           for m in range(-1, self.order + 1)))


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------

def _frame_near(frame: EllipticFrame, t: complex) -> EllipticFrame:
    return solve_u(t, frame.nu, seed=frame.u + frame.du_dt * (t - frame.t))


def t_derivative(fn, frame: EllipticFrame, radius: float | None = None, nodes: int = 12,
                 unwrap: float | None = None) -> complex:
    """``d/dt fn(frame)`` at fixed ``nu`` by a Cauchy circle in ``t``."""
    r = radius if radius is not None else 1e-2 * max(1.0, abs(frame.t))
    d = cauchy_derivatives(lambda tt: fn(_frame_near(frame, tt)), frame.t, r, 1, nodes, unwrap)
    return complex(d[1])


def riccati_residual(m: int, x: complex, frame: EllipticFrame,
                     evaluator: CorrelatorEvaluator | None = None, *, radius: float | None = None) -> complex:
    """Residual of ``sum S'_{m1} S'_{m2} + S''_{m-1} - 2 dS_{m-1}/dt - [2 dF/dt]_{m-1}``.

    The sum runs over ``m1 + m2 = m - 1``.  Implemented for ``m = 0, 1``.
    ``x``-derivatives of ``S_0`` come from a Cauchy circle of radius
    ``radius`` (default ``0.05 * dist(x, branch points)``), ``t``-derivatives
    from a Cauchy circle in ``t``; ``S'_1`` from :func:`s_one_dx`.
    """
    x = complex(x)
    if m not in (0, 1):
        raise BudgetExceeded("riccati_residual is implemented for m = 0 and m = 1")
    dist = float(np.min(np.abs(x - frame.roots.values)))
    rx = radius if radius is not None else 0.05 * min(dist, abs(x))
    lat = frame.lattice
    z = inverse_abel(x, lat)
    _, y, _, _, _ = weierstrass_jet(z, lat)
    if m == 0:
        # S'_{-1} = y, S''_{-1} from the curve, S'_0 and dS_{-1}/dt numerically
        dq = 12 * x * x + 2 * frame.t
        s0p = cauchy_derivatives(lambda xx: s_zero(xx, frame), x, rx, 1, 16, unwrap=np.pi / 2)[1]
        dts = t_derivative(lambda fr: s_minus1(x, fr), frame)
        return complex(2 * y * s0p + dq / (2 * y) - 2 * dts)
    ev = evaluator or CorrelatorEvaluator(frame)
    d0 = cauchy_derivatives(lambda xx: s_zero(xx, frame), x, rx, 2, 16, unwrap=np.pi / 2)
    s1p = s_one_dx(x, ev)
    dts0 = t_derivative(lambda fr: s_zero(x, fr), frame, unwrap=np.pi / 2)
    dtf1 = t_derivative(f1, frame, unwrap=np.pi / 6)
    return complex(2 * y * s1p + d0[1] ** 2 + d0[2] - 2 * dts0 - 2 * dtf1)


def _cycle_segment(frame: EllipticFrame, cycle: str, count: int, offset: float = 0.25):
    lat = frame.lattice
    step, across = (lat.omega_A, lat.omega_B) if cycle == "A" else (lat.omega_B, lat.omega_A)
    s = (np.arange(count) + 0.5) / count
    return offset * across + s * step, step / count


def cycle_period(m: int, frame: EllipticFrame, cycle: str = "A",
                 evaluator: CorrelatorEvaluator | None = None, count: int = 64) -> complex:
    """``oint dS_m`` over a straight periodic representative of the cycle in ``z``.

    ``dS_{-1} = wp'^2 dz``, ``dS_0 = (-(1/2) wp''/wp' + P) dz`` and
    ``dS_1`` from :func:`s_one_dz`.
    """
    zs, w = _cycle_segment(frame, cycle, count)
    lat = frame.lattice
    if m == -1:
        _, dp, _, _, _ = weierstrass_jet(zs, lat)
        return complex(np.sum(dp * dp) * w)
    if m == 0:
        _, dp, ddp, _, _ = weierstrass_jet(zs, lat)
        return complex(np.sum(-0.5 * ddp / dp + periodic_zeta(zs, lat)) * w)
    if m == 1:
        ev = evaluator or CorrelatorEvaluator(frame)
        return complex(sum(s_one_dz(z, ev) for z in zs) * w)
    raise BudgetExceeded("cycle periods are implemented for m <= 1")


def a_cycle_monodromy(m: int, frame: EllipticFrame, evaluator: CorrelatorEvaluator | None = None,
                      count: int = 64) -> complex:
    """``oint_A dS_m``: ``2 pi i nu`` for ``m = -1`` and ``0`` for ``m >= 0``."""
    return cycle_period(m, frame, "A", evaluator, count)
