"""Weierstrass and theta functions attached to the cubic 4x^3 + 2tx + u.

The curve ``y^2 = 4x^3 + 2tx + u`` is the Weierstrass curve with invariants
``g2 = -2t`` and ``g3 = -u``.  Periods are obtained by trapezoidal
quadrature on Joukowski ellipses around pairs of roots, and the elliptic
functions themselves are evaluated through Jacobi theta series.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from .errors import (
    BadModulus,
    BranchPointInput,
    DegenerateCurve,
    LatticePoint,
    NoConvergence,
    PathCrossesCut,
    QuadratureFailure,
)

TWO_PI_I = 2j * np.pi

_CHARACTERISTICS = {
    "00": (0.0, 0.0),
    "01": (0.0, 0.5),
    "10": (0.5, 0.0),
    "11": (0.5, 0.5),
}


# ---------------------------------------------------------------------------
# cubic roots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CubicRoots:
    """Roots of ``4x^3 + 2tx + u`` sorted lexicographically by (Re, Im)."""

    e1: complex
    e2: complex
    e3: complex
    t: complex
    u: complex

    @property
    def values(self) -> np.ndarray:
        return np.array([self.e1, self.e2, self.e3], dtype=complex)

    @property
    def g2(self) -> complex:
        return -2.0 * self.t

    @property
    def g3(self) -> complex:
        return -self.u

    @property
    def discriminant(self) -> complex:
        e1, e2, e3 = self.e1, self.e2, self.e3
        return 16.0 * ((e1 - e2) * (e2 - e3) * (e3 - e1)) ** 2

    @property
    def scale(self) -> float:
        return max(1.0, float(np.max(np.abs(self.values))))

    def __iter__(self):
        return iter((self.e1, self.e2, self.e3))


def cubic_roots(t: complex, u: complex, rel_threshold: float = 1e-12) -> CubicRoots:
    """Roots of ``4x^3 + 2tx + u``.

    Parameters
    ----------
    t, u : complex
        Coefficients of the depressed cubic.
    rel_threshold : float
        The curve is declared degenerate when ``|8t^3 + 27u^2|`` falls below
        ``rel_threshold * (8|t|^3 + 27|u|^2)``.

    Returns
    -------
    CubicRoots
        Roots ordered by real part, ties broken by imaginary part.

    Raises
    ------
    DegenerateCurve
        If the discriminant vanishes numerically.
    """
    t = complex(t)
    u = complex(u)
    size = 8.0 * abs(t) ** 3 + 27.0 * abs(u) ** 2
    if size == 0.0 or abs(8.0 * t**3 + 27.0 * u**2) <= rel_threshold * size:
        raise DegenerateCurve(f"8t^3 + 27u^2 vanishes at t={t}, u={u}")
    roots = np.roots([4.0, 0.0, 2.0 * t, u]).astype(complex)
    # polish with a couple of Newton steps on the cubic itself
    for _ in range(3):
        f = 4.0 * roots**3 + 2.0 * t * roots + u
        df = 12.0 * roots**2 + 2.0 * t
        ok = df != 0
        roots[ok] -= f[ok] / df[ok]
    roots = roots - roots.sum() / 3.0
    order = np.lexsort((roots.imag, roots.real))
    e1, e2, e3 = (complex(r) for r in roots[order])
    return CubicRoots(e1, e2, e3, t, u)


# ---------------------------------------------------------------------------
# theta functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThetaJet:
    """Value and v-derivatives of a Jacobi theta function.

    ``values[k]`` is the k-th derivative in v.  For arguments with a large
    imaginary part the plain values overflow; ``scaled`` holds the jet
    divided by ``exp(log_scale)``, which stays of moderate size.
    """

    kind: str
    v: complex
    tau: complex
    scaled: np.ndarray
    log_scale: complex = 0j

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.scaled * np.exp(self.log_scale)


def _theta_sums(kind: str, v, tau: complex, d: int):
    """Scaled derivative sums of theta_kind at array ``v``.

    Returns ``(log_scale, jets)`` with ``jets`` of shape ``(d+1,) + v.shape``.
    The k-window is centred on the dominant term of each entry.
    """
    if kind not in _CHARACTERISTICS:
        raise ValueError(f"unknown theta characteristic {kind!r}")
    tau = complex(tau)
    if not tau.imag > 0.0:
        raise BadModulus(f"Im(tau) must be positive, got tau={tau}")
    alpha, beta = _CHARACTERISTICS[kind]
    v = np.asarray(v, dtype=complex)
    centre = np.round(-v.imag / tau.imag - alpha)
    half = int(np.ceil(np.sqrt((40.0 + 4.0 * d) / (np.pi * tau.imag)))) + 2
    offsets = np.arange(-half, half + 1)
    kk = centre[..., None] + offsets + alpha
    expo = 1j * np.pi * kk**2 * tau + TWO_PI_I * kk * (v[..., None] + beta)
    ref = expo[..., half]
    terms = np.exp(expo - ref[..., None])
    factor = TWO_PI_I * kk
    jets = np.empty((d + 1,) + v.shape, dtype=complex)
    power = np.ones_like(terms)
    for j in range(d + 1):
        jets[j] = np.sum(power * terms, axis=-1)
        power = power * factor
    return ref, jets


def theta_jet(kind: str, v: complex, tau: complex, d: int = 0) -> ThetaJet:
    """Jet of ``theta_kind(v, tau)`` up to derivative order ``d``.

    The characteristics follow the convention
    ``theta_ab(v) = sum_k exp(pi i (k+a/2)^2 tau + 2 pi i (k+a/2)(v+b/2))``.

    Parameters
    ----------
    kind : {'00', '01', '10', '11'}
    v : complex
    tau : complex
        Modular parameter, ``Im(tau) > 0``.
    d : int
        Highest v-derivative, at most 8.

    Raises
    ------
    BadModulus
        If ``Im(tau) <= 0``.
    """
    if not 0 <= d <= 8:
        raise ValueError("derivative order must satisfy 0 <= d <= 8")
    ref, jets = _theta_sums(kind, np.asarray(complex(v)), tau, d)
    return ThetaJet(kind, complex(v), complex(tau), jets.reshape(d + 1), complex(ref))


def theta_log_derivatives(kind: str, v, tau: complex, d: int) -> np.ndarray:
    """``d^k/dv^k log theta_kind(v, tau)`` for ``k = 1..d``.

    Returned array has shape ``(d,) + shape(v)``; entry ``k-1`` is the k-th
    derivative.  The computation uses scaled sums, so large ``Im v`` is fine.
    """
    _, jets = _theta_sums(kind, v, tau, d)
    ratios = jets[1:] / jets[0]
    logs = np.empty_like(ratios)
    for n in range(1, d + 1):
        acc = ratios[n - 1].copy()
        for k in range(1, n):
            acc -= comb(n - 1, k - 1) * logs[k - 1] * ratios[n - k - 1]
        logs[n - 1] = acc
    return logs


def theta_ratios(kind: str, v, tau: complex, d: int) -> np.ndarray:
    """Normalised jet ``theta^{(k)}(v) / theta(v)`` for ``k = 0..d``."""
    _, jets = _theta_sums(kind, v, tau, d)
    return jets / jets[0]


# ---------------------------------------------------------------------------
# periods
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CycleConvention:
    """Concrete choice of the A- and B-cycles.

    The A-cycle is an ellipse around roots ``a_pair`` (indices into the
    sorted roots), the B-cycle an ellipse around ``b_pair``.  ``a_sign`` and
    ``b_sign`` combine orientation and the branch of y on each ellipse, and
    the final B-cycle is ``b_sign * B_raw + b_shift * A``.

    Any field left as ``None`` is resolved by :func:`periods_from_roots`:

    * ``a_pair``: the two roots closest to each other;
    * ``a_sign``: chosen so that ``(1/2 pi i) * A-period of y dx`` is nearest
      to ``nu_target`` (or has non-negative real part when no target is set);
    * ``b_pair``: the second A-root together with the remaining root;
    * ``b_sign``: chosen so that ``Im(omega_B / omega_A) > 0``;
    * ``b_shift``: chosen so that ``-1/2 < Re(tau) <= 1/2``.
    """

    a_pair: tuple[int, int] | None = None
    b_pair: tuple[int, int] | None = None
    a_sign: int | None = None
    b_sign: int | None = None
    b_shift: int | None = None
    nu_target: complex | None = None


@dataclass(frozen=True)
class LatticeFrame:
    """Periods of ``dx/y`` and ``-x dx/y`` (and of ``y dx``) on the chosen cycles."""

    omega_A: complex
    omega_B: complex
    eta_A: complex
    eta_B: complex
    tau: complex
    roots: CubicRoots
    convention: CycleConvention
    ydx_A: complex = 0j
    ydx_B: complex = 0j

    @property
    def g2(self) -> complex:
        return self.roots.g2

    @property
    def g3(self) -> complex:
        return self.roots.g3

    @property
    def bilinear_residual(self) -> float:
        return abs(self.eta_A * self.omega_B - self.eta_B * self.omega_A - TWO_PI_I)

    @property
    def half_periods(self) -> np.ndarray:
        """Ramification points ``omega_A/2, omega_B/2, (omega_A+omega_B)/2``."""
        a, b = self.omega_A, self.omega_B
        return np.array([a / 2, b / 2, (a + b) / 2], dtype=complex)

    def lattice_coordinates(self, z):
        """Real coordinates ``(a, b)`` with ``z = a omega_A + b omega_B``."""
        z = np.asarray(z, dtype=complex)
        w = z / self.omega_A
        b = w.imag / self.tau.imag
        a = w.real - b * self.tau.real
        return a, b

    def distance_to_lattice(self, z, offset=0.0) -> np.ndarray:
        """Distance from ``z`` to ``offset + Lambda`` (nearest of nearby translates)."""
        z = np.asarray(z, dtype=complex) - offset
        a, b = self.lattice_coordinates(z)
        best = np.full(z.shape, np.inf)
        for da in (-1, 0, 1):
            for db in (-1, 0, 1):
                lam = (np.round(a) + da) * self.omega_A + (np.round(b) + db) * self.omega_B
                best = np.minimum(best, np.abs(z - lam))
        return best

    @property
    def shortest_half_vector(self) -> float:
        """Half the length of the shortest nonzero lattice vector."""
        vals = []
        for m in range(-3, 4):
            for n in range(-3, 4):
                if m or n:
                    vals.append(abs(m * self.omega_A + n * self.omega_B))
        return 0.5 * min(vals)


def _pair_integrals(roots: np.ndarray, i: int, j: int, tol: float = 1e-15,
                    n_start: int = 64, n_max: int = 1 << 15):
    """Raw integrals of ``dx/y``, ``-x dx/y`` and ``y dx`` around roots i, j.

    The ellipse is parametrised by ``x = m + h (s + 1/s) / 2`` with
    ``s = R e^{i theta}``, which turns ``sqrt((x-e_i)(x-e_j))`` into the
    analytic ``h (s - 1/s) / 2``; only ``sqrt(x - e_k)`` needs continuation.
    """
    k = 3 - i - j
    ei, ej, ek = roots[i], roots[j], roots[k]
    m = 0.5 * (ei + ej)
    h = 0.5 * (ej - ei)
    c = 2.0 * (ek - m) / h
    disc = np.sqrt(c * c - 4.0 + 0j)
    rho = max(abs(0.5 * (c + disc)), abs(0.5 * (c - disc)))
    if rho <= 1.0 + 1e-12:
        raise QuadratureFailure("third root lies on the segment between the pair")
    radius = np.sqrt(rho)
    prev = None
    n = n_start
    while n <= n_max:
        theta = 2.0 * np.pi * np.arange(n) / n
        s = radius * np.exp(1j * theta)
        x = m + 0.5 * h * (s + 1.0 / s)
        w = np.sqrt(x - ek)
        # continue sqrt(x - e_k) along the ellipse
        flips = np.real(w[1:] * np.conj(w[:-1])) < 0.0
        sign = np.concatenate(([1.0], np.where(np.cumprod(np.where(flips, -1.0, 1.0)) < 0, -1.0, 1.0)))
        w = w * sign
        if np.real(w[0] * np.conj(w[-1])) < 0.0:
            raise QuadratureFailure("sqrt continuation did not close on the ellipse")
        omega = 0.5j * np.mean(1.0 / w) * 2.0 * np.pi
        eta = -0.5j * np.mean(x / w) * 2.0 * np.pi
        ydx = 0.5j * h * h * np.mean((s - 1.0 / s) ** 2 * w) * 2.0 * np.pi
        cur = np.array([omega, eta, ydx])
        if prev is not None:
            size = np.maximum(np.abs(cur), 1.0)
            if np.all(np.abs(cur - prev) <= tol * 10 * size):
                return complex(omega), complex(eta), complex(ydx)
        prev = cur
        n *= 2
    raise QuadratureFailure("period quadrature did not converge")


def _closest_pair(vals: np.ndarray) -> tuple[int, int]:
    pairs = [(0, 1), (0, 2), (1, 2)]
    return min(pairs, key=lambda p: abs(vals[p[0]] - vals[p[1]]))


def periods_from_roots(roots: CubicRoots, convention: CycleConvention | None = None) -> LatticeFrame:
    """Periods ``omega_*``, ``eta_*`` and ``tau = omega_B/omega_A``.

    Parameters
    ----------
    roots : CubicRoots
    convention : CycleConvention, optional
        Unset fields are resolved as documented on :class:`CycleConvention`.

    Returns
    -------
    LatticeFrame
        With ``Im(tau) > 0``; the resolved convention is stored on the frame.

    Raises
    ------
    DegenerateCurve
        If two roots coincide.
    QuadratureFailure
        If the contour integrals fail to converge.
    """
    vals = roots.values
    if abs(roots.discriminant) <= 1e-24 * roots.scale**6:
        raise DegenerateCurve("coinciding roots")
    conv = convention or CycleConvention()
    a_pair = conv.a_pair or _closest_pair(vals)
    other = 3 - a_pair[0] - a_pair[1]
    b_pair = conv.b_pair or tuple(sorted((a_pair[1], other)))
    wa, ea, ya = _pair_integrals(vals, *a_pair)
    wb, eb, yb = _pair_integrals(vals, *b_pair)

    a_sign = conv.a_sign
    if a_sign is None:
        nu_raw = ya / TWO_PI_I
        if conv.nu_target is not None:
            a_sign = 1 if abs(nu_raw - conv.nu_target) <= abs(-nu_raw - conv.nu_target) else -1
        else:
            a_sign = 1 if (nu_raw.real > 0 or (nu_raw.real == 0 and nu_raw.imag >= 0)) else -1
    wa, ea, ya = a_sign * wa, a_sign * ea, a_sign * ya

    b_sign = conv.b_sign
    if b_sign is None:
        b_sign = 1 if (wb / wa).imag > 0 else -1
    wb, eb, yb = b_sign * wb, b_sign * eb, b_sign * yb
    if (wb / wa).imag <= 0:
        # enforce the upper half plane by reversing the B-cycle
        b_sign = -b_sign
        wb, eb, yb = -wb, -eb, -yb

    b_shift = conv.b_shift
    if b_shift is None:
        b_shift = -int(np.floor((wb / wa).real + 0.5))
        if (wb / wa).real + b_shift <= -0.5:
            b_shift += 1
    wb, eb, yb = wb + b_shift * wa, eb + b_shift * ea, yb + b_shift * ya

    resolved = CycleConvention(tuple(a_pair), tuple(b_pair), a_sign, b_sign, b_shift, conv.nu_target)
    return LatticeFrame(complex(wa), complex(wb), complex(ea), complex(eb), complex(wb / wa),
                        roots, resolved, complex(ya), complex(yb))


# ---------------------------------------------------------------------------
# Weierstrass functions
# ---------------------------------------------------------------------------

def _check_lattice(z, frame: LatticeFrame, rel: float = 1e-12) -> None:
    dist = frame.distance_to_lattice(z)
    if np.any(dist < rel * abs(frame.omega_A)):
        raise LatticePoint("argument lies on the period lattice")


def weierstrass_jet(z, frame: LatticeFrame):
    """``(wp, wp', wp'', zeta, log sigma)`` at ``z``.

    All five are obtained from the log-derivatives of ``theta_11(z/omega_A)``.
    ``log sigma`` uses the principal logarithm of the scaled theta sum plus
    the exponent of its dominant term; it is continuous away from the
    places where the scaled sum crosses the negative real axis.

    Raises
    ------
    LatticePoint
        If ``z`` is within ``1e-12 |omega_A|`` of the lattice.
    """
    z = np.asarray(z, dtype=complex)
    _check_lattice(z, frame)
    wa, ea, tau = frame.omega_A, frame.eta_A, frame.tau
    v = z / wa
    ref, jets = _theta_sums("11", v, tau, 4)
    r = jets / jets[0]
    l1 = r[1]
    l2 = r[2] - l1**2
    l3 = r[3] - 3 * l1 * r[2] + 2 * l1**3
    l4 = r[4] - 4 * r[3] * l1 - 3 * r[2] ** 2 + 12 * r[2] * l1**2 - 6 * l1**4
    wp = -ea / wa - l2 / wa**2
    wp1 = -l3 / wa**3
    wp2 = -l4 / wa**4
    zeta = ea / wa * z + l1 / wa
    dtheta0 = _theta11_prime_zero(tau)
    log_sigma = ea * z**2 / (2 * wa) + np.log(wa / dtheta0) + ref + np.log(jets[0])
    return wp, wp1, wp2, zeta, log_sigma


def _theta11_prime_zero(tau: complex) -> complex:
    ref, jets = _theta_sums("11", np.asarray(0j), tau, 1)
    return complex(jets[1] * np.exp(ref))


def wp(z, frame: LatticeFrame):
    """Weierstrass ``wp(z)`` for the frame's lattice."""
    return weierstrass_jet(z, frame)[0]


def wp_and_derivative(z, frame: LatticeFrame):
    """``(wp(z), wp'(z))`` without the lattice-point check (vectorised helper)."""
    z = np.asarray(z, dtype=complex)
    wa = frame.omega_A
    logs = theta_log_derivatives("11", z / wa, frame.tau, 3)
    return -frame.eta_A / wa - logs[1] / wa**2, -logs[2] / wa**3


def periodic_zeta(z, frame: LatticeFrame):
    """``-zeta(z) + (eta_A/omega_A) z``.

    This is A-periodic, shifts by ``2 pi i / omega_A`` under ``z -> z + omega_B``
    and its derivative is ``wp(z) + eta_A/omega_A``.
    """
    z = np.asarray(z, dtype=complex)
    wa = frame.omega_A
    logs = theta_log_derivatives("11", z / wa, frame.tau, 1)
    return -logs[0] / wa


def sigma(z, frame: LatticeFrame):
    """Weierstrass sigma function (via ``exp`` of :func:`weierstrass_jet`'s log sigma)."""
    return np.exp(weierstrass_jet(z, frame)[4])


# ---------------------------------------------------------------------------
# inverse Abel map
# ---------------------------------------------------------------------------

def _newton_polish(z: complex, x: complex, frame: LatticeFrame, iters: int = 8) -> complex:
    for _ in range(iters):
        p, dp = wp_and_derivative(z, frame)
        step = complex((p - x) / dp)
        z -= step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    return z


def inverse_abel(x: complex, frame: LatticeFrame) -> complex:
    """Principal branch of ``z(x) = int_infinity^x dx / y``.

    The integral runs inward along the ray through ``x`` (so the branch cuts
    are the outward rays ``{s e_i : s >= 1}``) and satisfies
    ``z(x) ~ -x^{-1/2}`` with the principal square root, equivalently
    ``wp'(z(x)) ~ +2 x^{3/2}``.  The path is integrated with RK4 steps in x
    and Newton-polished against ``wp(z) = x`` after each step.

    Raises
    ------
    BranchPointInput
        If ``x`` is numerically a branch point.
    PathCrossesCut
        If the ray from infinity to ``x`` runs through a branch point.
    """
    x = complex(x)
    e = frame.roots.values
    scale = frame.roots.scale
    if np.min(np.abs(x - e)) < 1e-10 * scale:
        raise BranchPointInput(f"x={x} is a branch point")
    direction = x / abs(x) if x != 0 else 1.0 + 0j
    r_end = abs(x)
    for ei in e:
        along = (ei * np.conj(direction)).real
        across = abs((ei * np.conj(direction)).imag)
        if along >= r_end and across < 1e-9 * scale:
            raise PathCrossesCut(f"ray to x={x} passes through branch point {ei}")
    r = max(r_end, 1e3 * scale)
    xs = r * direction
    z = -1.0 / np.sqrt(xs)
    z = _newton_polish(z, xs, frame)

    def rhs(zz):
        return direction / wp_and_derivative(zz, frame)[1]

    steps = 0
    while r > r_end:
        cur = r * direction
        dist = float(np.min(np.abs(cur - e)))
        dr = min(0.25 * dist, 0.2 * r, r - r_end)
        dr = max(dr, 1e-14 * scale)
        h = -dr
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * h * k1)
        k3 = rhs(z + 0.5 * h * k2)
        k4 = rhs(z + h * k3)
        z = complex(z + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0)
        r = r - dr if r - dr > r_end else r_end
        z = _newton_polish(z, r * direction, frame, iters=3)
        steps += 1
        if steps > 20000:
            raise NoConvergence("inverse Abel continuation did not reach x")
    return _newton_polish(z, x, frame)
