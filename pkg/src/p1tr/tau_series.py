"""Fourier-transformed tau-function coefficients and the Painleve I checks.

Writing ``v = (phi + rho)/hbar`` the discrete Fourier transform of the
partition function reorganises into ``exp(F0/hbar^2 + ...) * sum_m hbar^m
Theta_m`` where each ``Theta_m`` is a finite combination of v-derivatives of
``theta00(v, tau)``.  The same holds for the wave-function blocks
``Xi_{+-,m}`` with ``v`` shifted by ``+-z(x)/omega_A``.

For the Hamiltonian ``H``, ``q`` and ``p`` the t-derivative acts on both the
explicit t-dependence and on ``v`` through ``phi(t)``.  Since
``dv/dt = phi_t / hbar`` this shifts the hbar-grading by one.  Every
coefficient is carried as a bivariate Taylor jet in ``(dt, dv)`` around the
evaluation point, with the t-dependence sampled on a Cauchy circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve_family import EllipticFrame, f1, solve_u
from .errors import BudgetExceeded, LatticePoint, MissingDerivativeTable, NoConvergence, UnlabeledCurve
from .special_functions import (
    TWO_PI_I,
    inverse_abel,
    theta_jet,
    theta_log_derivatives,
    theta_ratios,
    wp,
)

MAX_THETA_ORDER = 8


# --------------------------------------------------------------------------
# parameters and theta combinations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TauParameters:
    """Integration constants ``(nu, rho)`` and the numeric value of ``hbar``."""

    nu: complex
    rho: complex
    hbar: complex = 0.1

    def __post_init__(self):
        if self.hbar == 0:
            raise ValueError("hbar must be nonzero")

    def v(self, frame: EllipticFrame) -> complex:
        """Theta argument ``(phi + rho)/hbar``."""
        return (frame.phi + self.rho) / self.hbar


@dataclass(frozen=True)
class ThetaCoeff:
    """``sum_k a_k d^k/dv^k theta00(v + shift, tau)``.

    ``terms`` holds pairs ``(a_k, k)``.
    """

    terms: tuple
    shift: complex = 0j

    @property
    def max_order(self) -> int:
        return max((k for _, k in self.terms), default=0)

    def evaluate_scaled(self, v: complex, tau: complex) -> tuple[complex, complex]:
        """Value as ``(mantissa, log_scale)`` so that value = mantissa * exp(log_scale)."""
        jet = theta_jet("00", complex(v) + self.shift, tau, max(self.max_order, 0))
        total = sum(complex(a) * jet.scaled[k] for a, k in self.terms)
        return complex(total), jet.log_scale

    def evaluate(self, v: complex, tau: complex) -> complex:
        mant, log_scale = self.evaluate_scaled(v, tau)
        return complex(mant * np.exp(log_scale))

    def ratio(self, v: complex, tau: complex) -> complex:
        """Value divided by ``theta00(v + shift, tau)``."""
        r = theta_ratios("00", np.asarray(complex(v) + self.shift), tau, max(self.max_order, 0))
        return complex(sum(complex(a) * r[k] for a, k in self.terms))

    def fourier_oracle(self, v: complex, tau: complex, cutoff: int = 40) -> complex:
        """Direct truncated Fourier sum ``sum_k (2 pi i k)^j exp(pi i k^2 tau + 2 pi i k v)``."""
        ks = np.arange(-cutoff, cutoff + 1)
        w = complex(v) + self.shift
        base = np.exp(1j * np.pi * ks * ks * tau + 2j * np.pi * ks * w)
        return complex(sum(complex(a) * np.sum((2j * np.pi * ks) ** k * base) for a, k in self.terms))

    def __add__(self, other: "ThetaCoeff") -> "ThetaCoeff":
        if self.shift != other.shift:
            raise ValueError("cannot add combinations at different arguments")
        return ThetaCoeff(_merge(self.terms + other.terms), self.shift)


def _merge(terms) -> tuple:
    acc: dict[int, complex] = {}
    for a, k in terms:
        acc[k] = acc.get(k, 0j) + complex(a)
    return tuple((acc[k], k) for k in sorted(acc))


# --------------------------------------------------------------------------
# nu-derivative tables
# --------------------------------------------------------------------------

@dataclass
class DerivativeTable:
    """``d^n F_g / d nu^n`` keyed by ``(g, n)`` and ``d^j S_m / d nu^j`` keyed by ``(m, j)``."""

    free: dict = field(default_factory=dict)
    wave: dict = field(default_factory=dict)
    x: complex | None = None

    def f(self, g: int, n: int) -> complex:
        try:
            return self.free[(g, n)]
        except KeyError:
            raise MissingDerivativeTable(f"no entry for d^{n} F_{g} / d nu^{n}") from None

    def s(self, m: int, j: int) -> complex:
        try:
            return self.wave[(m, j)]
        except KeyError:
            raise MissingDerivativeTable(f"no entry for d^{j} S_{m} / d nu^{j}") from None


def _nu_circle(fn, frame: EllipticFrame, order: int, radius: float | None, nodes: int,
               unwrap: float | None = None) -> np.ndarray:
    """Taylor coefficients in ``nu`` of ``fn(frame(t, nu))`` at fixed ``t``."""
    r = radius if radius is not None else 0.1 * max(abs(frame.nu), 0.1)
    vals = []
    for k in range(nodes):
        dnu = r * np.exp(2j * np.pi * k / nodes)
        fr = solve_u(frame.t, frame.nu + dnu, seed=frame.u + frame.du_dnu * dnu)
        vals.append(fn(fr))
    vals = np.array(vals, dtype=complex)
    if unwrap is not None:
        for k in range(1, nodes):
            vals[k:] -= 1j * unwrap * round((vals[k] - vals[k - 1]).imag / unwrap)
    c = np.fft.fft(vals) / nodes
    return np.array([c[k] / r**k for k in range(order + 1)])


def nu_derivative_table(frame: EllipticFrame, depth: int = 1, method: str = "difference", *,
                        x: complex | None = None, evaluator=None, radius: float | None = None,
                        nodes: int = 16) -> DerivativeTable:
    """Tables of nu-derivatives needed for ``Theta_m`` and ``Xi_{+-,m}`` with ``m <= depth``.

    ``method='difference'`` uses Cauchy circles in ``nu`` (re-solving ``u``
    at every node) on ``tau`` and ``F1``; ``method='quadrature'`` integrates
    the correlators over the B-cycle in every slot.  When ``x`` is given the
    wave-function entries ``d^2 S_{-1}`` and ``d S_0`` are added by Cauchy
    circles in ``nu``; ``d^2 S_{-1}`` is taken as the nu-derivative of
    ``2 pi i z(x)/omega_A``, which stays well conditioned at large ``x``.
    """
    if depth > 1:
        raise BudgetExceeded("tables are implemented up to depth 1")
    table = DerivativeTable(x=x)
    table.free[(0, 2)] = TWO_PI_I * frame.tau
    if depth >= 1:
        if method == "difference":
            tc = _nu_circle(lambda fr: fr.tau, frame, 1, radius, nodes)
            table.free[(0, 3)] = complex(TWO_PI_I * tc[1])
            fc = _nu_circle(f1, frame, 1, radius, nodes, unwrap=np.pi / 6)
            table.free[(1, 1)] = complex(fc[1])
        elif method == "quadrature":
            from .toprec import CorrelatorEvaluator

            ev = evaluator if evaluator is not None else CorrelatorEvaluator(frame)
            table.free[(0, 3)] = ev.multi_cycle_integral(0, 3, "BBB")
            table.free[(1, 1)] = ev.cycle_integral(1, 1, 0, "B")
        else:
            raise ValueError("method must be 'difference' or 'quadrature'")
    if x is not None:
        from .wkb import s_zero

        table.wave[(-1, 1)] = TWO_PI_I * inverse_abel(x, frame.lattice) / frame.omega_A
        if depth >= 1:
            zc = _nu_circle(lambda fr: inverse_abel(x, fr.lattice) / fr.omega_A, frame, 1, radius, nodes)
            table.wave[(-1, 2)] = complex(TWO_PI_I * zc[1])
            s0 = _nu_circle(lambda fr: s_zero(x, fr), frame, 1, radius, nodes, unwrap=np.pi / 2)
            table.wave[(0, 1)] = complex(s0[1])
    return table


# --------------------------------------------------------------------------
# Theta_m and Xi_{+-,m}
# --------------------------------------------------------------------------

def _exp_poly(exponent: list[tuple[int, int, complex]], order: int) -> dict:
    """``exp`` of a polynomial in ``(hbar, k)`` truncated at ``hbar^order``.

    ``exponent`` lists ``(hbar power >= 1, k power, coefficient)``.
    """
    result = {(0, 0): 1.0 + 0j}
    term = {(0, 0): 1.0 + 0j}
    for n in range(1, order + 1):
        nxt: dict = {}
        for (a, j), c in term.items():
            for b, i, e in exponent:
                if a + b <= order:
                    key = (a + b, j + i)
                    nxt[key] = nxt.get(key, 0j) + c * e / n
        term = nxt
        for key, c in term.items():
            result[key] = result.get(key, 0j) + c
    return result


def _free_exponent(table: DerivativeTable, order: int) -> list:
    terms = []
    for g in range(0, order // 2 + 2):
        for n in range(1, order + 3):
            a = 2 * g - 2 + n
            if 1 <= a <= order:
                terms.append((a, n, table.f(g, n) / math.factorial(n)))
    return terms


def _coeff_from_poly(poly: dict, m: int, shift: complex) -> ThetaCoeff:
    terms = [(c / TWO_PI_I**j, j) for (a, j), c in poly.items() if a == m and c != 0]
    return ThetaCoeff(_merge(terms), shift)


def theta_block(m: int, frame: EllipticFrame, table: DerivativeTable) -> ThetaCoeff:
    """``Theta_m`` as a combination of derivatives of ``theta00``.

    Raises
    ------
    MissingDerivativeTable
        If an entry ``d^n F_g`` with ``2g - 2 + n <= m`` is absent.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    poly = _exp_poly(_free_exponent(table, m), m)
    return _coeff_from_poly(poly, m, 0j)


def xi_block(sign: int, m: int, x: complex, frame: EllipticFrame, table: DerivativeTable) -> ThetaCoeff:
    """``Xi_{sign,m}``, evaluated at ``v + sign * z(x)/omega_A``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if table.x is not None and table.x != x:
        raise MissingDerivativeTable("wave-function entries were tabulated at another x")
    exponent = _free_exponent(table, m)
    for mm in range(-1, m):
        for j in range(1, m - mm + 1):
            if (mm, j) == (-1, 1):
                continue
            exponent.append((mm + j, j, float(sign) ** mm * table.s(mm, j) / math.factorial(j)))
    poly = _exp_poly(exponent, m)
    shift = sign * table.s(-1, 1) / TWO_PI_I
    return _coeff_from_poly(poly, m, shift)


# --------------------------------------------------------------------------
# bivariate jets in (dt, dv)
# --------------------------------------------------------------------------

class Jet2:
    """Truncated Taylor series ``sum c[i, j] dt^i dv^j``."""

    __slots__ = ("c",)

    def __init__(self, c):
        self.c = np.asarray(c, dtype=complex)

    @classmethod
    def const(cls, value, shape) -> "Jet2":
        c = np.zeros(shape, dtype=complex)
        c[0, 0] = value
        return cls(c)

    @property
    def value(self) -> complex:
        return complex(self.c[0, 0])

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.c + other.c)
        out = self.c.copy()
        out[0, 0] += other
        return Jet2(out)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.c * other)
        a, b = self.c, other.c
        nt, nv = a.shape
        out = np.zeros_like(a)
        for i in range(nt):
            for j in range(nv):
                if a[i, j] != 0:
                    out[i:, j:] += a[i, j] * b[: nt - i, : nv - j]
        return Jet2(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Jet2.const(1.0, self.c.shape)
        for _ in range(n):
            out = out * self
        return out

    def dt(self) -> "Jet2":
        out = np.zeros_like(self.c)
        i = np.arange(1, self.c.shape[0])
        out[:-1] = self.c[1:] * i[:, None]
        return Jet2(out)

    def dv(self) -> "Jet2":
        out = np.zeros_like(self.c)
        j = np.arange(1, self.c.shape[1])
        out[:, :-1] = self.c[:, 1:] * j[None, :]
        return Jet2(out)


def _series_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    for n in range(len(num)):
        out[n] = (num[n] - np.dot(den[1:n + 1], out[n - 1::-1][:n])) / den[0]
    return out


# --------------------------------------------------------------------------
# hbar-series with the grading-shifting t-derivative
# --------------------------------------------------------------------------

@dataclass
class HbarSeries:
    """``sum_{m = start}^{start + len - 1} hbar^m X_m`` with jet coefficients.

    ``phi_t`` is the jet of ``d phi / dt`` used by the t-derivative.
    """

    coeffs: list
    phi_t: Jet2
    start: int = 0

    @property
    def top(self) -> int:
        return self.start + len(self.coeffs) - 1

    def __getitem__(self, m: int) -> Jet2:
        if m < self.start:
            return 0 * self.phi_t
        if m > self.top:
            raise BudgetExceeded(f"coefficient hbar^{m} is beyond the truncation order {self.top}")
        return self.coeffs[m - self.start]

    def value(self, m: int) -> complex:
        return self[m].value

    def t_derivative(self) -> "HbarSeries":
        """``d/dt`` at fixed rho: ``[.]_m = dX_m/dt + phi_t dX_{m+1}/dv``.

        The result starts one order lower than ``self`` and is known up to
        order ``top - 1``.
        """
        out = []
        for m in range(self.start - 1, self.top):
            term = self.phi_t * self[m + 1].dv()
            if m >= self.start:
                term = term + self[m].dt()
            out.append(term)
        return HbarSeries(out, self.phi_t, self.start - 1)

    def times_hbar(self, k: int = 1) -> "HbarSeries":
        return HbarSeries(list(self.coeffs), self.phi_t, self.start + k)

    def scaled(self, factor) -> "HbarSeries":
        return HbarSeries([factor * c for c in self.coeffs], self.phi_t, self.start)

    def truncated(self, top: int) -> "HbarSeries":
        top = min(top, self.top)
        return HbarSeries(self.coeffs[: top - self.start + 1], self.phi_t, self.start)

    def __mul__(self, other: "HbarSeries") -> "HbarSeries":
        start = self.start + other.start
        top = min(self.top + other.start, other.top + self.start)
        out = []
        for m in range(start, top + 1):
            acc = 0 * self.phi_t
            for a in range(self.start, m - other.start + 1):
                acc = acc + self[a] * other[m - a]
            out.append(acc)
        return HbarSeries(out, self.phi_t, start)

    def __add__(self, other: "HbarSeries") -> "HbarSeries":
        start = min(self.start, other.start)
        top = min(self.top, other.top)
        out = [self[m] + other[m] for m in range(start, top + 1)]
        return HbarSeries(out, self.phi_t, start)

    def __sub__(self, other: "HbarSeries") -> "HbarSeries":
        return self + other.scaled(-1.0)


# --------------------------------------------------------------------------
# sampling along a circle in t
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class JetConfig:
    """Degrees of the ``(dt, dv)`` jets and the t-circle used to fill them."""

    t_degree: int = 4
    v_degree: int = 5
    t_nodes: int = 16
    t_radius: float | None = None
    nu_radius: float | None = None
    nu_nodes: int = 16


def _node_data(frame: EllipticFrame, v0: complex, vdeg: int, with_theta1: bool, cfg: JetConfig) -> np.ndarray:
    """Per-node quantities: u/2, 1/omega_A, F1, log theta00 jet, Theta_1/Theta_0 jet."""
    tau = frame.tau
    jet = theta_jet("00", v0, tau, 0)
    log0 = jet.log_scale + np.log(jet.scaled[0])
    logs = theta_log_derivatives("00", np.asarray(v0), tau, vdeg)
    ljet = np.empty(vdeg + 1, dtype=complex)
    ljet[0] = log0
    for k in range(1, vdeg + 1):
        ljet[k] = logs[k - 1] / math.factorial(k)
    rjet = np.zeros(vdeg + 1, dtype=complex)
    if with_theta1:
        table = nu_derivative_table(frame, 1, radius=cfg.nu_radius, nodes=cfg.nu_nodes)
        coeff = theta_block(1, frame, table)
        need = coeff.max_order + vdeg
        if need > MAX_THETA_ORDER:
            raise BudgetExceeded(f"needs theta derivatives of order {need}")
        r = theta_ratios("00", np.asarray(v0), tau, need)
        den = np.array([r[j] / math.factorial(j) for j in range(vdeg + 1)])
        num = np.zeros(vdeg + 1, dtype=complex)
        for a, k in coeff.terms:
            num += a * np.array([r[k + j] / math.factorial(j) for j in range(vdeg + 1)])
        rjet = _series_divide(num, den)
    head = np.array([frame.u / 2.0, 1.0 / frame.omega_A, f1(frame)], dtype=complex)
    return np.concatenate([head, ljet, rjet])


def _theta_zero_radius(frame: EllipticFrame, v0: complex) -> float:
    """Radius in ``t`` within which no zero of ``theta00(v0, tau(t))`` can arrive.

    The zeros sit at ``(1 + tau)/2 + m + n tau``; the one nearest ``v0``
    moves by about ``(n + 1/2) tau_t dt`` when ``t`` changes.
    """
    tau = frame.tau
    w = v0 - 0.5 * (1 + tau)
    n = round(w.imag / tau.imag)
    m = round((w - n * tau).real)
    dist = min(abs(w - (m + dm) - (n + dn) * tau) for dm in (-1, 0, 1) for dn in (-1, 0, 1))
    h = 1e-4 * max(1.0, abs(frame.t))
    tau_t = (solve_u(frame.t + h, frame.nu, seed=frame.u + frame.du_dt * h).tau - tau) / h
    speed = (abs(n) + 1.5) * abs(tau_t)
    return dist / speed if speed > 0 else np.inf


def _t_jets(frame: EllipticFrame, v0: complex, with_theta1: bool, cfg: JetConfig):
    tdeg, vdeg = cfg.t_degree, cfg.v_degree
    nodes = cfg.t_nodes
    if nodes <= tdeg:
        raise ValueError("need more t-nodes than the t-degree")
    if cfg.t_radius is not None:
        r = cfg.t_radius
    else:
        r = min(2e-2 * max(1.0, abs(frame.t)), 0.3 * _theta_zero_radius(frame, v0))
    center = _node_data(frame, v0, vdeg, with_theta1, cfg)
    samples = []
    for k in range(nodes):
        dt = r * np.exp(2j * np.pi * k / nodes)
        fr = solve_u(frame.t + dt, frame.nu, seed=frame.u + frame.du_dt * dt)
        samples.append(_node_data(fr, v0, vdeg, with_theta1, cfg))
    samples = np.array(samples) - center
    # principal logs jump by 2 pi i (log theta) or pi i / 6 (F1); remove the
    # jumps relative to the centre value, which is where the circle starts
    for col, quantum in ((2, np.pi / 6), (3, 2 * np.pi)):
        samples[0, col] -= 1j * quantum * round(samples[0, col].imag / quantum)
        for k in range(1, nodes):
            samples[k:, col] -= 1j * quantum * round((samples[k, col] - samples[k - 1, col]).imag / quantum)
        if round((samples[0, col] - samples[-1, col]).imag / quantum) != 0:
            raise NoConvergence("t-circle winds around a zero or branch point; lower t_radius")
    coeffs = np.fft.fft(samples, axis=0) / nodes
    coeffs = coeffs[: tdeg + 1] / (r ** np.arange(tdeg + 1))[:, None]
    coeffs[0] = center
    shape = (tdeg + 1, vdeg + 1)

    def tonly(col):
        c = np.zeros(shape, dtype=complex)
        c[:, 0] = coeffs[:, col]
        return Jet2(c)

    ljet = Jet2(coeffs[:, 3: 4 + vdeg])
    rjet = Jet2(coeffs[:, 4 + vdeg: 5 + 2 * vdeg])
    return tonly(0), tonly(1), tonly(2), ljet, rjet


def hqp_series(order: int, frame: EllipticFrame, params: TauParameters,
               config: JetConfig | None = None):
    """Hamiltonian ``H``, ``q = -dH/dt`` and ``p = hbar dq/dt`` up to ``hbar^order``.

    The series are returned as :class:`HbarSeries` whose coefficients are
    jets in ``(dt, dv)`` centred at ``(t, v)``; ``.value(m)`` gives the
    numeric coefficient at the evaluation point.

    ``H = hbar^2 d/dt (log Z + log T)`` with ``log Z`` contributing
    ``dF0/dt + hbar^2 dF1/dt`` and ``log T = log Theta_0 + hbar Theta_1/Theta_0 + ...``.

    Raises
    ------
    BudgetExceeded
        For ``order > 1``.
    """
    if order > 1:
        raise BudgetExceeded("H, q, p are implemented up to hbar^1")
    if complex(params.nu) != frame.nu:
        raise ValueError("params.nu differs from the frame's nu")
    cfg = config or JetConfig()
    v0 = params.v(frame)
    half_u, phi_t, free1, ljet, rjet = _t_jets(frame, v0, order >= 1, cfg)
    zero = 0 * phi_t
    # log T as an hbar-series starting at hbar^0
    log_t = HbarSeries([ljet, rjet, zero], phi_t, 0)
    d_log_t = log_t.t_derivative()          # orders -1 .. 1
    h_terms = [half_u, zero, zero]
    h_terms[1] = h_terms[1] + d_log_t[-1]
    h_terms[2] = h_terms[2] + free1.dt() + d_log_t[0]
    h = HbarSeries(h_terms[: order + 2], phi_t, 0)
    q = h.t_derivative().scaled(-1.0)
    q = HbarSeries([q[m] for m in range(0, order + 1)], phi_t, 0)
    p = q.t_derivative().times_hbar()
    p = HbarSeries([p[m] for m in range(0, order + 1)], phi_t, 0)
    return h, q, p


def q_leading(t: complex, nu: complex, rho: complex, hbar: complex, frame: EllipticFrame | None = None) -> complex:
    """``wp(4t/(5 hbar) + (rho/hbar + 1/2) omega_A + (nu/hbar + 1/2) omega_B)``.

    Raises
    ------
    LatticePoint
        If the argument lies on the period lattice.
    """
    fr = frame if frame is not None else solve_u(t, nu)
    z = 0.8 * t / hbar + (rho / hbar + 0.5) * fr.omega_A + (nu / hbar + 0.5) * fr.omega_B
    if float(fr.lattice.distance_to_lattice(z)) < 1e-12 * abs(fr.omega_A):
        raise LatticePoint("q_leading argument lies on the period lattice")
    return complex(wp(z, fr.lattice))


def q0_theta(frame: EllipticFrame, params: TauParameters) -> complex:
    """``q_0 = -eta_A/omega_A - omega_A^{-2} d^2/dv^2 log theta00`` at ``v = (phi+rho)/hbar``."""
    logs = theta_log_derivatives("00", np.asarray(params.v(frame)), frame.tau, 2)
    return complex(-frame.eta_A / frame.omega_A - logs[1] / frame.omega_A**2)


def painleve_residual(order: int, frame: EllipticFrame, params: TauParameters,
                      config: JetConfig | None = None, series=None) -> dict:
    """Residuals of ``hbar dp/dt = 6q^2 + t`` and ``H = p^2/2 - 2q^3 - tq`` at ``hbar^order``.

    Returns absolute values of the residual coefficients under the keys
    ``'painleve'`` and ``'hamiltonian'``, and the largest magnitude of the
    individual terms of each identity under ``'painleve_scale'`` and
    ``'hamiltonian_scale'``.  The order-1 coefficients grow with ``|v|``,
    so the scales tell how much cancellation the residual reflects.
    """
    h, q, p = series if series is not None else hqp_series(order, frame, params, config)
    q2 = q * q
    lhs = p.t_derivative().times_hbar().value(order)
    six_q2 = 6.0 * q2.value(order)
    t_term = frame.t if order == 0 else 0.0
    half_p2 = 0.5 * (p * p).value(order)
    two_q3 = 2.0 * (q2 * q).value(order)
    tq = frame.t * q.value(order)
    h_m = h.value(order)
    return {
        "painleve": abs(lhs - six_q2 - t_term),
        "hamiltonian": abs(h_m - (half_p2 - two_q3 - tq)),
        "painleve_scale": max(abs(lhs), abs(six_q2), abs(t_term)),
        "hamiltonian_scale": max(abs(h_m), abs(half_p2), abs(two_q3), abs(tq)),
    }


# --------------------------------------------------------------------------
# Stokes multipliers
# --------------------------------------------------------------------------

DIRECTIONS = (-2, -1, 0, 1, 2)


def stokes_multipliers(params: TauParameters) -> list[complex]:
    """Closed-form multipliers ``[s_-2, s_-1, s_0, s_1, s_2]``."""
    nu, rho, h = complex(params.nu), complex(params.rho), complex(params.hbar)

    def e(z):
        return np.exp(TWO_PI_I * z / h)

    return [
        complex(1j * (e(-rho) - e(nu - rho))),
        complex(1j * (-e(-(nu - rho)) + e(-nu))),
        complex(1j * e(nu)),
        complex(1j * (e(-nu) - e(-(nu + rho)) + e(-rho))),
        complex(1j * e(rho)),
    ]


def cyclic_product(s) -> np.ndarray:
    """``L(s_2) U(s_1) L(s_0) U(s_-1) L(s_-2)`` with unipotent factors."""
    def lower(a):
        return np.array([[1, 0], [a, 1]], dtype=complex)

    def upper(a):
        return np.array([[1, a], [0, 1]], dtype=complex)

    sm2, sm1, s0, s1, s2 = s
    return lower(s2) @ upper(s1) @ lower(s0) @ upper(sm1) @ lower(sm2)


def cyclic_residual(s) -> float:
    """Max entrywise deviation of the cyclic product from ``[[0, i], [i, 0]]``."""
    target = np.array([[0, 1j], [1j, 0]])
    return float(np.max(np.abs(cyclic_product(s) - target)))


def cluster_residuals(s) -> list[float]:
    """``|1 + s_{l-1} s_l + i s_{l+2}|`` for ``l = -2..2`` with indices mod 5."""
    by_l = dict(zip(DIRECTIONS, s))

    def at(l):
        return by_l[((l + 2) % 5) - 2]

    return [abs(1 + at(l - 1) * at(l) + 1j * at(l + 2)) for l in DIRECTIONS]


def multiplier_contribution(m: int, n: int, sign: int, params: TauParameters) -> complex:
    """``i (-1)^{m n} exp(sign 2 pi i (m nu - n rho)/hbar)``."""
    phase = TWO_PI_I * (m * complex(params.nu) - n * complex(params.rho)) / complex(params.hbar)
    return complex(1j * (-1) ** (m * n) * np.exp(sign * phase))


def multipliers_from_graph(graph, params: TauParameters) -> list[complex]:
    """Assemble ``[s_-2, ..., s_2]`` from labelled curves of a traced Stokes graph.

    Each curve needs ``ell``, ``half_period = (m, n)`` and ``sign``; segments
    (``ell is None``) are skipped.

    Raises
    ------
    UnlabeledCurve
        If a curve reaching infinity has no ``(m, n)`` or sign.
    """
    out = {l: 0j for l in DIRECTIONS}
    for curve in graph.curves:
        if curve.ell is None:
            continue
        if curve.half_period is None or curve.sign not in (1, -1):
            raise UnlabeledCurve(f"curve from {curve.origin} towards direction {curve.ell} is unlabelled")
        m, n = curve.half_period
        out[curve.ell] += multiplier_contribution(m, n, curve.sign, params)
    return [out[l] for l in DIRECTIONS]
