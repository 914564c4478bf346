"""The family ``y^2 = 4x^3 + 2tx + u(t, nu)`` with fixed A-period.

``u(t, nu)`` is defined implicitly by ``(1/2 pi i) * A-period of y dx = nu``
and found by Newton's method seeded with the large-``|t|`` expansion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurve, NoConvergence
from .special_functions import (
    TWO_PI_I,
    CubicRoots,
    CycleConvention,
    LatticeFrame,
    cubic_roots,
    periods_from_roots,
)


@dataclass(frozen=True)
class CurveParams:
    t: complex
    nu: complex


@dataclass(frozen=True)
class EllipticFrame:
    """Everything known about the curve at fixed ``(t, nu)``."""

    params: CurveParams
    u: complex
    roots: CubicRoots
    lattice: LatticeFrame
    du_dt: complex
    du_dnu: complex
    phi: complex
    newton_steps: int = 0

    @property
    def t(self) -> complex:
        return self.params.t

    @property
    def nu(self) -> complex:
        return self.params.nu

    @property
    def omega_A(self) -> complex:
        return self.lattice.omega_A

    @property
    def omega_B(self) -> complex:
        return self.lattice.omega_B

    @property
    def eta_A(self) -> complex:
        return self.lattice.eta_A

    @property
    def eta_B(self) -> complex:
        return self.lattice.eta_B

    @property
    def tau(self) -> complex:
        return self.lattice.tau

    @property
    def ydx_A(self) -> complex:
        """A-period of ``y dx``; equals ``2 pi i nu``."""
        return self.lattice.ydx_A

    @property
    def ydx_B(self) -> complex:
        """B-period of ``y dx``; equals ``dF0/dnu``."""
        return self.lattice.ydx_B

    @property
    def a_period_residual(self) -> float:
        return abs(self.ydx_A / TWO_PI_I - self.nu)

    @property
    def discriminant(self) -> complex:
        return self.roots.discriminant


def u_app(t: complex, nu: complex) -> complex:
    """Large-``|t|`` approximation ``s^2/(9t) + 2i nu s/t - 5 nu^2/(4t)``.

    Here ``s = 24^{1/4} (-t)^{5/4}`` on the principal branch.
    """
    t = complex(t)
    nu = complex(nu)
    if t == 0:
        raise ZeroDivisionError("u_app is undefined at t = 0")
    s = 24.0**0.25 * (-t) ** 1.25
    return s * s / (9.0 * t) + 2j * nu * s / t - 5.0 * nu * nu / (4.0 * t)


def _collision_guard(roots: CubicRoots, rel: float) -> None:
    vals = roots.values
    gaps = [abs(vals[i] - vals[j]) for i, j in ((0, 1), (0, 2), (1, 2))]
    if min(gaps) < rel * float(np.max(np.abs(vals))):
        raise DegenerateCurve("Newton path came too close to a root collision")


def _lattice_for(t: complex, u: complex, nu: complex,
                 a_pair: tuple[int, int] | None = None) -> LatticeFrame:
    roots = cubic_roots(t, u)
    conv = CycleConvention(a_pair=a_pair, nu_target=complex(nu))
    return periods_from_roots(roots, conv)


def solve_u(t: complex, nu: complex, seed: complex | None = None, *, tol: float = 1e-13,
            max_steps: int = 50, collision_rel: float = 1e-3) -> EllipticFrame:
    """Solve ``(1/2 pi i) * A-period of y dx = nu`` for ``u``.

    Newton's method with derivative ``omega_A / (4 pi i)`` and step halving
    whenever the residual grows.  The A-cycle is the pair of closest roots,
    oriented so that its period is nearest to ``+nu``.

    Raises
    ------
    ValueError
        For non-finite ``t``, ``nu`` or seed.
    NoConvergence
        After ``max_steps`` iterations.
    DegenerateCurve
        If an iterate comes within ``collision_rel * max|e_i|`` of a root
        collision.
    """
    t = complex(t)
    nu = complex(nu)
    if not (np.isfinite(t) and np.isfinite(nu)):
        raise ValueError("t and nu must be finite")
    u = complex(u_app(t, nu) if seed is None else seed)
    if not np.isfinite(u):
        raise ValueError("the seed must be finite")
    lat = _lattice_for(t, u, nu)
    _collision_guard(lat.roots, collision_rel)
    res = lat.ydx_A / TWO_PI_I - nu
    steps = 0
    while abs(res) > tol * max(1.0, abs(nu)):
        if steps >= max_steps:
            raise NoConvergence(f"u(t,nu) Newton did not converge at t={t}, nu={nu}")
        step = res * 4j * np.pi / lat.omega_A
        lam = 1.0
        while True:
            cand = u - lam * step
            try:
                new_lat = _lattice_for(t, cand, nu)
                _collision_guard(new_lat.roots, collision_rel)
                new_res = new_lat.ydx_A / TWO_PI_I - nu
            except DegenerateCurve:
                new_res = None
            if new_res is not None and abs(new_res) < abs(res) * (1.0 - 0.25 * lam) + tol:
                break
            lam *= 0.5
            if lam < 1e-6:
                raise NoConvergence("damped Newton step failed to reduce the residual")
        u, lat, res = cand, new_lat, new_res
        steps += 1
    return _frame_from_lattice(t, nu, u, lat, steps)


def _frame_from_lattice(t, nu, u, lat: LatticeFrame, steps: int) -> EllipticFrame:
    return EllipticFrame(
        params=CurveParams(t, nu),
        u=complex(u),
        roots=lat.roots,
        lattice=lat,
        du_dt=2.0 * lat.eta_A / lat.omega_A,
        du_dnu=4j * np.pi / lat.omega_A,
        phi=lat.ydx_B / TWO_PI_I,
        newton_steps=steps,
    )


def frame_at(t: complex, nu: complex, u: complex, convention: CycleConvention | None = None) -> EllipticFrame:
    """Frame for a given ``u`` without solving (the A-period is whatever it is)."""
    conv = convention or CycleConvention(nu_target=complex(nu))
    lat = periods_from_roots(cubic_roots(t, u), conv)
    return _frame_from_lattice(complex(t), complex(nu), complex(u), lat, 0)


def f0(frame: EllipticFrame) -> complex:
    """Genus-0 free energy ``t u / 5 + (nu/2) * B-period of y dx``."""
    return frame.t * frame.u / 5.0 + 0.5 * frame.nu * frame.ydx_B


def f0_asymptotic(t: complex, nu: complex, terms: int = 4) -> complex:
    """Large-``|t|`` expansion of ``F0`` truncated after ``terms`` terms (4 to 6).

    ``s^2/45 + (4/5) i nu s + (nu^2/2) log(nu/(48 i s)) - (3/4) nu^2
    - 47 i nu^3/(48 s) - 7717 nu^4/(4608 s^2)`` with principal logarithm.
    """
    t = complex(t)
    nu = complex(nu)
    s = 24.0**0.25 * (-t) ** 1.25
    parts = [
        s * s / 45.0,
        0.8j * nu * s,
        0.5 * nu * nu * np.log(nu / (48j * s)),
        -0.75 * nu * nu,
        -47j * nu**3 / (48.0 * s),
        -7717.0 * nu**4 / (4608.0 * s * s),
    ]
    return complex(sum(parts[:terms]))


def f1(frame: EllipticFrame) -> complex:
    """Genus-1 free energy ``-(1/12) log(omega_A^6 Delta)``.

    Evaluated as ``-(6 log omega_A + log Delta)/12`` with principal logs, so
    it is continuous wherever neither ``omega_A`` nor ``Delta`` crosses the
    negative real axis.
    """
    return complex(-(6.0 * np.log(frame.omega_A) + np.log(frame.discriminant)) / 12.0)
