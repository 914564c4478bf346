"""Stokes and anti-Stokes graphs of the quadratic differential ``Q(x) dx^2``.

``Q(x) = 4x^3 + 2tx + u``.  A Stokes curve from a branch point ``e`` is a
trajectory along which ``int_e^x sqrt(Q) dx`` is real; on an anti-Stokes
curve it is imaginary.  Curves are traced with a unit-speed field
``x' = c |w| / w``, ``w = sqrt(Q(x))`` continued along the path and ``c`` a
fixed phase (real for Stokes, imaginary for anti-Stokes), so that
``sqrt(Q) x'`` keeps a constant phase.

Each curve reaching infinity gets the integers ``(m, n)`` defined by
``int_inf^e dx/y = (m omega_A + n omega_B)/2`` and a sign, the sign of
``Re int_e^x sqrt(Q) dx`` with ``sqrt(Q) ~ +2 x^{3/2}`` (principal) at the
far end.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .curve_family import EllipticFrame, solve_u
from .errors import AmbiguousLattice, MaxStepsExceeded, StallDetected
from .special_functions import inverse_abel

KINDS = ("stokes", "anti")


@dataclass(frozen=True)
class TraceOptions:
    """Tracer settings.

    ``escape_factor`` times ``max|e_i|`` is the escape radius; ``launch``
    times ``max|e_i|`` the launch offset; ``capture`` times the smallest root
    distance the radius at which a curve is considered to end on another
    branch point.
    """

    escape_factor: float = 20.0
    launch: float = 1e-4
    tol: float = 1e-10
    capture: float = 1e-3
    max_steps: int = 20000


@dataclass
class StokesCurve:
    origin: int
    launch_index: int
    points: np.ndarray
    sign: int | None = None
    ell: int | None = None
    half_period: tuple[int, int] | None = None
    end_branch: int | None = None
    closest: dict = field(default_factory=dict)
    branch_flip: int = 1

    @property
    def is_segment(self) -> bool:
        return self.end_branch is not None

    @property
    def end_angle(self) -> float:
        return float(np.angle(self.points[-1]))


@dataclass
class StokesGraph:
    frame: EllipticFrame
    kind: str
    curves: list
    segments: list
    options: TraceOptions

    @property
    def branch_points(self) -> np.ndarray:
        return self.frame.roots.values


# --------------------------------------------------------------------------
# tracing
# --------------------------------------------------------------------------

def _q(x: complex, t: complex, u: complex) -> complex:
    return 4.0 * x**3 + 2.0 * t * x + u


def _sqrt_near(val: complex, ref: complex) -> complex:
    s = complex(np.sqrt(val))
    return s if abs(s - ref) <= abs(s + ref) else -s


def _launch_angles(e: complex, t: complex, kind: str) -> list[float]:
    dq = 12.0 * e * e + 2.0 * t
    a = 0.5 * float(np.angle(dq))
    shift = 0.0 if kind == "stokes" else 0.5 * np.pi
    return [(2.0 / 3.0) * (k * np.pi + shift - a) for k in range(3)]


def _trace_one(frame: EllipticFrame, idx: int, k: int, theta: float, kind: str,
               opts: TraceOptions) -> StokesCurve:
    t, u = frame.t, frame.u
    roots = frame.roots.values
    scale = float(np.max(np.abs(roots)))
    dmin = min(abs(roots[i] - roots[j]) for i, j in ((0, 1), (0, 2), (1, 2)))
    capture = opts.capture * dmin
    r_esc = opts.escape_factor * scale
    e = complex(roots[idx])
    x = e + opts.launch * scale * np.exp(1j * theta)
    w = complex(np.sqrt(_q(x, t, u)))
    cands = (1.0, -1.0) if kind == "stokes" else (1j, -1j)
    phase = max(cands, key=lambda c: (c * abs(w) / w * np.exp(-1j * theta)).real)

    def field_at(xx, wref):
        ww = _sqrt_near(_q(xx, t, u), wref)
        return phase * abs(ww) / ww, ww

    def rk4(xx, ww, h):
        k1, w1 = field_at(xx, ww)
        k2, w2 = field_at(xx + 0.5 * h * k1, w1)
        k3, w3 = field_at(xx + 0.5 * h * k2, w2)
        k4, _ = field_at(xx + h * k3, w3)
        return xx + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0

    others = [j for j in range(3) if j != idx]
    closest = {j: abs(x - roots[j]) for j in others}
    points = [e, x]
    h = opts.launch * scale
    h_min = 1e-13 * scale
    end_branch = None
    steps = 0
    while abs(x) < r_esc:
        if steps >= opts.max_steps:
            raise MaxStepsExceeded(f"curve {k} from branch point {idx} did not escape")
        big = rk4(x, w, h)
        half = rk4(x, w, 0.5 * h)
        _, wh = field_at(half, w)
        small = rk4(half, wh, 0.5 * h)
        err = abs(big - small)
        tol = opts.tol * max(1.0, abs(x))
        if err <= tol:
            x = small + (small - big) / 15.0
            _, w = field_at(x, w)
            points.append(x)
            steps += 1
            for j in others:
                closest[j] = min(closest[j], abs(x - roots[j]))
                if abs(x - roots[j]) < capture:
                    end_branch = j
            if end_branch is not None:
                break
            grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol / err) ** 0.2)
            h *= grow
        else:
            h *= max(0.1, 0.9 * (tol / err) ** 0.2)
        # keep steps short relative to the distance from the nearest branch point
        near = min(abs(x - r) for r in roots)
        h = min(h, 0.5 * near)
        if h < h_min:
            raise StallDetected(f"step size collapsed on curve {k} from branch point {idx}")
    return StokesCurve(idx, k, np.array(points, dtype=complex), end_branch=end_branch, closest=closest)


def _direction_index(x: complex, kind: str) -> tuple[int, float]:
    ang = float(np.angle(x))
    if kind == "stokes":
        k = int(round(5.0 * ang / (2.0 * np.pi)))
        target = 2.0 * np.pi * k / 5.0
    else:
        k = int(round((5.0 * ang / np.pi - 1.0) / 2.0))
        target = (2 * k + 1) * np.pi / 5.0
    dev = abs((ang - target + np.pi) % (2.0 * np.pi) - np.pi)
    k = ((k + 2) % 5) - 2
    return k, dev


def trace_graph(frame: EllipticFrame, kind: str = "stokes", opts: TraceOptions | None = None) -> StokesGraph:
    """Trace three curves from each branch point.

    For Stokes graphs the curves reaching infinity are labelled with their
    direction index ``ell`` (``arg x -> 2 ell pi/5``), sign and ``(m, n)``.
    For anti-Stokes graphs ``ell`` refers to ``arg x -> (2 ell + 1) pi/5``.

    Raises
    ------
    StallDetected
        If the adaptive step collapses.
    MaxStepsExceeded
        If a curve neither escapes nor ends on a branch point.
    """
    if kind not in KINDS:
        raise ValueError("kind must be 'stokes' or 'anti'")
    opts = opts or TraceOptions()
    curves = []
    for idx, e in enumerate(frame.roots.values):
        for k, theta in enumerate(_launch_angles(complex(e), frame.t, kind)):
            c = _trace_one(frame, idx, k, theta, kind, opts)
            if not c.is_segment:
                c.ell, _ = _direction_index(c.points[-1], kind)
                c.branch_flip = _branch_flip(c, frame)
                c.sign = curve_sign(c, frame)
                if kind == "stokes":
                    c.half_period = half_period_coords(c, frame)
            curves.append(c)
    graph = StokesGraph(frame, kind, curves, [], opts)
    graph.segments = detect_segments(graph)
    return graph


def direction_deviation(curve: StokesCurve, kind: str = "stokes") -> float:
    """Angle between the curve's far end and its asymptotic direction."""
    return _direction_index(curve.points[-1], kind)[1]


# --------------------------------------------------------------------------
# integrals along traced curves
# --------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


def _continued_roots(curve: StokesCurve, frame: EllipticFrame) -> np.ndarray:
    """``sqrt(Q)`` at the polyline points, continued from the branch point outwards."""
    t, u = frame.t, frame.u
    pts = curve.points
    ws = np.empty(len(pts), dtype=complex)
    ws[0] = 0.0
    ws[1] = np.sqrt(_q(pts[1], t, u))
    for i in range(2, len(pts)):
        ws[i] = _sqrt_near(_q(pts[i], t, u), ws[i - 1])
    return ws


def _branch_flip(curve: StokesCurve, frame: EllipticFrame) -> int:
    """``+1`` if the continued root matches ``+2 x^{3/2}`` (principal) at the far end."""
    ws = _continued_roots(curve, frame)
    x = curve.points[-1]
    return 1 if abs(ws[-1] - 2.0 * x**1.5) < abs(ws[-1] + 2.0 * x**1.5) else -1


def integrate_along(curve: StokesCurve, frame: EllipticFrame, power: int = 1) -> complex:
    """``int_e^{x_end} y^power dx`` along the polyline with ``y`` normalised at the far end.

    ``power`` is ``1`` (``sqrt(Q) dx``) or ``-1`` (``dx/y``).  The first
    piece next to the branch point uses the local square-root behaviour.
    """
    t, u = frame.t, frame.u
    pts = curve.points
    ws = _continued_roots(curve, frame)
    e = pts[0]
    x1, w1 = pts[1], ws[1]
    # y ~ c (x - e)^{1/2} near e
    total = (2.0 / 3.0) * (x1 - e) * w1 if power == 1 else 2.0 * (x1 - e) / w1
    for i in range(1, len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        acc = 0j
        for xi, wi in zip(_GL_X, _GL_W):
            xx = mid + half * xi
            yy = _sqrt_near(_q(xx, t, u), ws[i] + (ws[i + 1] - ws[i]) * 0.5 * (1 + xi))
            acc += wi * (yy if power == 1 else 1.0 / yy)
        total += half * acc
    return complex(total * curve.branch_flip)


def curve_sign(curve: StokesCurve, frame: EllipticFrame) -> int:
    """Sign of ``Re int_e^x sqrt(Q) dx`` at the far end of the curve."""
    val = integrate_along(curve, frame, 1)
    return 1 if val.real >= 0 else -1


def half_period_coords(curve: StokesCurve, frame: EllipticFrame, *, max_residual: float = 0.05) -> tuple[int, int]:
    """Integers ``(m, n)`` with ``int_inf^e dx/y = (m omega_A + n omega_B)/2`` along the curve.

    Raises
    ------
    AmbiguousLattice
        If the solved coordinates are farther than ``max_residual`` from integers.
    """
    if curve.is_segment:
        raise ValueError("segments do not reach infinity")
    x_end = curve.points[-1]
    z_end = inverse_abel(x_end, frame.lattice)
    val = z_end - integrate_along(curve, frame, -1)
    a, b = frame.omega_A / 2.0, frame.omega_B / 2.0
    mat = np.array([[a.real, b.real], [a.imag, b.imag]])
    mn = np.linalg.solve(mat, np.array([val.real, val.imag]))
    rounded = np.round(mn)
    resid = float(np.max(np.abs(mn - rounded)))
    if resid >= max_residual:
        raise AmbiguousLattice(f"half-period coordinates {mn} are not close to integers")
    return int(rounded[0]), int(rounded[1])


def branch_labels(graph: StokesGraph) -> dict[int, str]:
    """Label branch points ``'A'``, ``'B'``, ``'AB'`` by the parity of ``(m, n)``."""
    names = {(1, 0): "A", (0, 1): "B", (1, 1): "AB"}
    out = {}
    for c in graph.curves:
        if c.half_period is not None:
            out.setdefault(c.origin, names.get((c.half_period[0] % 2, c.half_period[1] % 2), "?"))
    return out


# --------------------------------------------------------------------------
# segments and Boutroux condition
# --------------------------------------------------------------------------

def detect_segments(graph: StokesGraph, tol: float | None = None) -> list[tuple[int, int]]:
    """Pairs of curve indices ``(i, j)``, ``i < j``, tracing the same saddle connection.

    Curve ``i`` from ``e_a`` and curve ``j`` from ``e_b`` form a pair when
    each passes within ``tol`` (default the capture radius) of the other's
    origin.
    """
    roots = graph.branch_points
    dmin = min(abs(roots[i] - roots[j]) for i, j in ((0, 1), (0, 2), (1, 2)))
    tol = tol if tol is not None else graph.options.capture * dmin
    out = []
    for i, ci in enumerate(graph.curves):
        for j in range(i + 1, len(graph.curves)):
            cj = graph.curves[j]
            if ci.origin == cj.origin:
                continue
            if ci.closest.get(cj.origin, np.inf) < tol and cj.closest.get(ci.origin, np.inf) < tol:
                out.append((i, j))
    return out


def boutroux_residual(frame: EllipticFrame) -> tuple[float, float]:
    """``(Re oint_A y dx, Re oint_B y dx)``."""
    return float(frame.ydx_A.real), float(frame.ydx_B.real)


def boutroux_point(t: complex, nu: complex, *, tol: float = 1e-13, max_steps: int = 20) -> EllipticFrame:
    """Move ``t`` onto ``Re oint_B y dx = 0`` at fixed ``nu`` by minimal-norm Newton steps.

    Uses ``d/dt oint_B y dx = 2 pi i/omega_A``.  For real ``nu`` the
    A-period is already imaginary, so the result satisfies both conditions.
    """
    fr = solve_u(t, nu)
    for _ in range(max_steps):
        g = fr.ydx_B.real
        if abs(g) <= tol * abs(fr.ydx_B):
            return fr
        c = 2j * np.pi / fr.omega_A
        t = fr.t - g * np.conj(c) / abs(c) ** 2
        fr = solve_u(t, nu, seed=fr.u)
    return fr


def reintegration_error(curve: StokesCurve, frame: EllipticFrame, kind: str = "stokes") -> float:
    """Relative size of the part of ``int sqrt(Q) dx`` that should vanish on the curve."""
    val = integrate_along(curve, frame, 1)
    off = val.imag if kind == "stokes" else val.real
    return abs(off) / abs(val)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def graph_to_dict(graph: StokesGraph) -> dict:
    return {
        "kind": graph.kind,
        "branch_points": [{"x": [float(e.real), float(e.imag)]} for e in graph.branch_points],
        "curves": [
            {
                "origin": c.origin,
                "sign": c.sign,
                "ell": c.ell,
                "m": None if c.half_period is None else c.half_period[0],
                "n": None if c.half_period is None else c.half_period[1],
                "points": [[float(p.real), float(p.imag)] for p in c.points],
            }
            for c in graph.curves
        ],
        "segments": [list(s) for s in graph.segments],
    }


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def svg_text(graph: StokesGraph | None, size: int = 600, radius: float | None = None) -> str:
    """Deterministic SVG drawing of a traced graph (or empty axes for ``None``)."""
    if radius is None:
        radius = 1.0 if graph is None else 1.2 * max(
            float(np.max(np.abs(graph.branch_points))) * 4.0, 1.0)
    half = size / 2.0
    s = half / radius

    def px(z):
        return f"{half + s * z.real:.3f},{half - s * z.imag:.3f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<line x1="0" y1="{half:.3f}" x2="{size}" y2="{half:.3f}" stroke="#bbbbbb" stroke-width="0.5"/>',
        f'<line x1="{half:.3f}" y1="0" x2="{half:.3f}" y2="{size}" stroke="#bbbbbb" stroke-width="0.5"/>',
    ]
    if graph is not None:
        seg_ids = {i for pair in graph.segments for i in pair}
        for i, c in enumerate(graph.curves):
            pts = c.points[np.abs(c.points) <= radius * 1.5]
            if len(pts) < 2:
                continue
            if i in seg_ids or c.is_segment:
                color, width = "#2ca02c", 2.5
            else:
                color, width = ("#1f77b4" if (c.sign or 1) > 0 else "#d62728"), 1.2
            path = " ".join(px(p) for p in pts)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="{width}"/>')
        offset = 0.0 if graph.kind == "stokes" else 0.5
        for ell in range(-2, 3):
            ang = 2.0 * np.pi * (ell + offset) / 5.0
            z = 0.92 * radius * complex(math.cos(ang), math.sin(ang))
            xy = px(z).split(",")
            out.append(f'<text x="{xy[0]}" y="{xy[1]}" font-size="12" text-anchor="middle">{ell}</text>')
        for e in graph.branch_points:
            xy = px(complex(e)).split(",")
            out.append(f'<circle cx="{xy[0]}" cy="{xy[1]}" r="3" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(graph: StokesGraph | None, path: str, **kw) -> None:
    """Write :func:`svg_text` atomically to ``path``."""
    _atomic_write(path, svg_text(graph, **kw))


def dump_json(graph: StokesGraph, path: str) -> None:
    _atomic_write(path, json.dumps(graph_to_dict(graph), indent=1, sort_keys=True) + "\n")
