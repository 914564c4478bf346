"""Correlators ``W_{g,n}`` and free energies ``F_g`` by nested contour quadrature.

Every stable correlator is evaluated from the recursion

    W_{g,n}(z1, J) = (1/2 pi i) sum_j oint_{gamma_j} K(z1, z) R_{g,n}(z, J) dz

with circles ``gamma_j`` around the half-periods.  Lower correlators that
appear inside ``R`` are evaluated at the circle nodes, which in turn need
smaller circles; the nesting depth is the "level".  All points are stored
in a table and referenced by integer id, so memoisation is keyed by exact
node indices rather than floating coordinates.

Densities are with respect to ``dz_1 ... dz_n``.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, DiagonalPole, QuadratureFailure, RamificationPole
from .special_functions import (
    LatticeFrame,
    periodic_zeta,
    theta_log_derivatives,
    weierstrass_jet,
)

_CHUNK = 2048


def _lattice(frame) -> LatticeFrame:
    return frame.lattice if hasattr(frame, "lattice") else frame


@dataclass(frozen=True)
class ContourConfig:
    """Radii and node counts for the nested circles.

    The circle radius at nesting level ``l`` is
    ``radius * D * ratio**l`` where ``D`` is the smallest distance between
    two distinct ramification points (half the shortest period).  Points
    handed in by the caller must stay ``radius * D / ratio`` away from every
    ramification point.
    """

    radius: float = 0.3
    ratio: float = 0.7
    nodes: int = 96
    max_order: int = 3

    def __post_init__(self):
        if self.nodes % 2:
            raise ValueError("node count must be even (nodes are paired by z -> -z)")
        if not 0 < self.radius < self.ratio < 1:
            raise ValueError("need 0 < radius < ratio < 1")


def _wp_shift(frame: LatticeFrame, z) -> np.ndarray:
    """``wp(z) + eta_A/omega_A`` without lattice checks."""
    wa = frame.omega_A
    logs = theta_log_derivatives("11", np.asarray(z, dtype=complex) / wa, frame.tau, 2)
    return -logs[1] / wa**2


def _wp_prime(frame: LatticeFrame, z) -> np.ndarray:
    wa = frame.omega_A
    logs = theta_log_derivatives("11", np.asarray(z, dtype=complex) / wa, frame.tau, 3)
    return -logs[2] / wa**3


def bergman(z1, z2, frame) -> np.ndarray:
    """Density ``wp(z1 - z2) + eta_A/omega_A`` of the A-normalised Bergman kernel.

    Raises
    ------
    DiagonalPole
        If ``z1 - z2`` is within ``1e-10 |omega_A|`` of the lattice.
    """
    lat = _lattice(frame)
    d = np.asarray(z1, dtype=complex) - np.asarray(z2, dtype=complex)
    if np.any(lat.distance_to_lattice(d) < 1e-10 * abs(lat.omega_A)):
        raise DiagonalPole("Bergman kernel evaluated on the diagonal")
    return _wp_shift(lat, d)


def p_function(z, frame) -> np.ndarray:
    """``P(z) = -zeta(z) + (eta_A/omega_A) z``, A-periodic, with ``dP(z1 - z2)/dz1 = B(z1, z2)``."""
    return periodic_zeta(z, _lattice(frame))


def recursion_kernel(z1, z, frame) -> np.ndarray:
    """``-(P(z1 - z) - P(z1 + z)) / (4 wp'(z)^2)``.

    This is the recursion kernel with ``y(z) = wp'(z)``, ``y(-z) = -wp'(z)``
    and ``dx = wp'(z) dz``; its density is with respect to ``dz1 / dz``.

    Raises
    ------
    RamificationPole
        If ``z`` is within ``1e-8 |omega_A|`` of a ramification point.
    """
    lat = _lattice(frame)
    z = np.asarray(z, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    for r in lat.half_periods:
        if np.any(lat.distance_to_lattice(z, offset=r) < 1e-8 * abs(lat.omega_A)):
            raise RamificationPole("kernel evaluated at a ramification point")
    num = periodic_zeta(z1 - z, lat) - periodic_zeta(z1 + z, lat)
    return -num / (4.0 * _wp_prime(lat, z) ** 2)


def _stable(g: int, n: int) -> bool:
    return 2 * g - 2 + n >= 1


class CorrelatorEvaluator:
    """Memoised evaluator of ``W_{g,n}`` densities on a fixed curve.

    Parameters
    ----------
    frame : EllipticFrame or LatticeFrame
    config : ContourConfig, optional

    Notes
    -----
    The cache is keyed by ``(g, n, sorted point ids)``.  Row order, chunk
    boundaries and warm/cold caches do not change any value, because each
    row is reduced independently over the same node ordering.
    """

    def __init__(self, frame, config: ContourConfig | None = None):
        self.frame = frame
        self.lattice = _lattice(frame)
        self.config = config or ContourConfig()
        lat = self.lattice
        self.half_periods = lat.half_periods
        self.scale = lat.shortest_half_vector
        self.exclusion = self.config.radius * self.scale / self.config.ratio
        self._points: list[complex] = []
        self._level: list[int] = []
        self._ids: dict[complex, int] = {}
        self._pools: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._cache: dict[tuple[int, int], dict[bytes, complex]] = {}
        self._bvec: dict[tuple[int, int], np.ndarray] = {}
        self._kvec: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.RLock()

    # -- point table -------------------------------------------------------
    def _register(self, z: complex, level: int) -> int:
        key = complex(z)
        if level < 0 and key in self._ids:
            return self._ids[key]
        pid = len(self._points)
        self._points.append(key)
        self._level.append(level)
        if level < 0:
            self._ids[key] = pid
        return pid

    def point_ids(self, zs) -> np.ndarray:
        """Register caller points (checking clearance from ramification points)."""
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        lat = self.lattice
        for r in self.half_periods:
            if np.any(lat.distance_to_lattice(zs, offset=r) < self.exclusion):
                raise RamificationPole(
                    "point too close to a ramification point for the configured contours")
        with self._lock:
            return np.array([self._register(z, -1) for z in zs.ravel()], dtype=np.int64).reshape(zs.shape)

    def _pool(self, level: int):
        """Node ids, reflected-node indices and quadrature weights at ``level``."""
        with self._lock:
            if level not in self._pools:
                n = self.config.nodes
                rad = self.config.radius * self.scale * self.config.ratio**level
                theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
                offs = rad * np.exp(1j * theta)
                ids, wts = [], []
                for r in self.half_periods:
                    for o in offs:
                        ids.append(self._register(r + o, level))
                    wts.append(offs / n)
                ids = np.array(ids, dtype=np.int64)
                wts = np.concatenate(wts)
                base = np.arange(3 * n)
                refl = (base // n) * n + (base % n + n // 2) % n
                self._pools[level] = (ids, refl, wts)
            return self._pools[level]

    def _values(self, ids) -> np.ndarray:
        return np.asarray(self._points, dtype=complex)[ids]

    # -- cached kernel vectors --------------------------------------------
    def _bmat(self, level: int, pids: np.ndarray) -> np.ndarray:
        """``B(node_k, p)`` for nodes at ``level``; shape ``(len(pids), 3N)``."""
        ids, _, _ = self._pool(level)
        missing = [p for p in np.unique(pids) if (level, int(p)) not in self._bvec]
        if missing:
            nodes = self._values(ids)
            pv = self._values(np.array(missing))
            vals = _wp_shift(self.lattice, nodes[None, :] - pv[:, None])
            for p, row in zip(missing, vals):
                self._bvec[(level, int(p))] = row
        return np.stack([self._bvec[(level, int(p))] for p in pids]) if len(pids) else np.zeros((0, len(ids)), complex)

    def _kmat(self, level: int, pids: np.ndarray) -> np.ndarray:
        """``K(p, node_k) * weight_k`` for nodes at ``level``."""
        ids, _, wts = self._pool(level)
        missing = [p for p in np.unique(pids) if (level, int(p)) not in self._kvec]
        if missing:
            nodes = self._values(ids)
            pv = self._values(np.array(missing))
            lat = self.lattice
            num = periodic_zeta(pv[:, None] - nodes[None, :], lat) - periodic_zeta(pv[:, None] + nodes[None, :], lat)
            den = 4.0 * _wp_prime(lat, nodes) ** 2
            vals = -num / den[None, :] * wts[None, :]
            for p, row in zip(missing, vals):
                self._kvec[(level, int(p))] = row
        return np.stack([self._kvec[(level, int(p))] for p in pids])

    # -- evaluation --------------------------------------------------------
    def _rows(self, g: int, n: int, rows: np.ndarray) -> np.ndarray:
        """W_{g,n} at integer rows of shape (B, n)."""
        rows = np.sort(np.asarray(rows, dtype=np.int64).reshape(-1, n), axis=1)
        if (g, n) == (0, 2):
            pv = self._values(rows)
            d = pv[:, 0] - pv[:, 1]
            if np.any(self.lattice.distance_to_lattice(d) < 1e-10 * abs(self.lattice.omega_A)):
                raise DiagonalPole("W_{0,2} on the diagonal")
            return _wp_shift(self.lattice, d)
        if (g, n) == (0, 1):
            raise ValueError("W_{0,1} is not produced by the recursion")
        if 2 * g - 2 + n > self.config.max_order:
            raise BudgetExceeded(f"2g-2+n = {2 * g - 2 + n} exceeds max_order={self.config.max_order}")
        cache = self._cache.setdefault((g, n), {})
        keys = [r.tobytes() for r in rows]
        out = np.empty(len(rows), dtype=complex)
        todo = {}
        for i, k in enumerate(keys):
            if k in cache:
                out[i] = cache[k]
            else:
                todo.setdefault(k, []).append(i)
        if todo:
            first = np.array([todo[k][0] for k in todo])
            fresh = rows[first]
            levels = np.asarray(self._level, dtype=np.int64)[fresh].max(axis=1) + 1
            vals = np.empty(len(fresh), dtype=complex)
            for lev in np.unique(levels):
                sel = np.nonzero(levels == lev)[0]
                for start in range(0, len(sel), _CHUNK):
                    part = sel[start:start + _CHUNK]
                    vals[part] = self._recurse(g, n, fresh[part], int(lev))
            with self._lock:
                for k, v in zip(todo, vals):
                    cache.setdefault(k, complex(v))
            for k, v in zip(todo, vals):
                for i in todo[k]:
                    out[i] = cache[k]
        return out

    def _recurse(self, g: int, n: int, rows: np.ndarray, level: int) -> np.ndarray:
        ids, refl, _ = self._pool(level)
        m = len(ids)
        nb = len(rows)
        z1 = rows[:, 0]
        rest = rows[:, 1:]
        node_col = np.broadcast_to(ids, (nb, m))
        refl_col = np.broadcast_to(ids[refl], (nb, m))
        acc = np.zeros((nb, m), dtype=complex)

        # W_{0,2}(z, z_j) W_{g,n-1}(zbar, J\j) + W_{0,2}(zbar, z_j) W_{g,n-1}(z, J\j);
        # for (0,3) the two halves list the same splittings, so keep one
        for j in range(n - 1):
            pj = rest[:, j]
            others = np.delete(rest, j, axis=1)
            bn = self._bmat(level, pj)
            wr = self._eval_with_first(g, n - 1, refl_col, others)
            acc += bn * wr
            if (g, n) != (0, 3):
                wn = self._eval_with_first(g, n - 1, node_col, others)
                acc += bn[:, refl] * wn
        # W_{g-1,n+1}(z, zbar, J)
        if g >= 1:
            acc += self._eval_with_first(g - 1, n + 1, node_col, rest, second=refl_col)
        # stable splittings
        k = n - 1
        for g1 in range(g + 1):
            g2 = g - g1
            for size in range(k + 1):
                for subset in itertools.combinations(range(k), size):
                    if not (_stable(g1, size + 1) and _stable(g2, k - size + 1)):
                        continue
                    comp = [c for c in range(k) if c not in subset]
                    w1 = self._eval_with_first(g1, size + 1, node_col, rest[:, list(subset)])
                    w2 = self._eval_with_first(g2, k - size + 1, refl_col, rest[:, comp])
                    acc += w1 * w2
        # every term carries exactly one factor at zbar = -z, whose density
        # picks up d(zbar)/dz = -1
        kmat = self._kmat(level, z1)
        return -np.sum(kmat * acc, axis=1)

    def _eval_with_first(self, g, n, first, others, second=None):
        """Evaluate W_{g,n}(first[b,k], [second[b,k]], others[b, :]) -> (B, m)."""
        nb, m = first.shape
        cols = [first.reshape(-1)]
        if second is not None:
            cols.append(second.reshape(-1))
        if others.shape[1]:
            rep = np.repeat(others, m, axis=0)
            cols.extend(rep[:, c] for c in range(others.shape[1]))
        rows = np.stack(cols, axis=1)
        if (g, n) == (0, 2) and second is not None:
            # W_{0,2}(z, zbar) = wp(2 (z - r_j)) + eta/omega at each node
            pv = self._values(rows)
            return _wp_shift(self.lattice, pv[:, 0] - pv[:, 1]).reshape(nb, m)
        if (g, n) == (0, 2):
            # first is a node, second column a caller/outer point
            level = int(self._level[int(first[0, 0])])
            pids = others[:, 0]
            bn = self._bmat(level, pids)
            ids, refl, _ = self._pool(level)
            if np.array_equal(first[0], ids):
                return bn
            return bn[:, refl]
        return self._rows(g, n, rows).reshape(nb, m)

    # -- public API ----------------------------------------------------------
    def correlator(self, g: int, n: int, points) -> complex:
        """``W_{g,n}`` density at ``points`` (sequence of ``n`` complex numbers)."""
        pts = np.asarray(points, dtype=complex).reshape(n)
        if (g, n) == (0, 1):
            _, dp, _, _, _ = weierstrass_jet(pts[0], self.lattice)
            return complex(dp * dp)
        if (g, n) == (0, 2):
            return complex(bergman(pts[0], pts[1], self.lattice))
        ids = self.point_ids(pts)
        return complex(self._rows(g, n, ids.reshape(1, n))[0])

    def correlator_grid(self, g: int, n: int, rows) -> np.ndarray:
        """Vectorised ``W_{g,n}`` at an array of point tuples, shape ``(B, n)``."""
        rows = np.asarray(rows, dtype=complex).reshape(-1, n)
        if (g, n) == (0, 2):
            return bergman(rows[:, 0], rows[:, 1], self.lattice)
        ids = self.point_ids(rows)
        return self._rows(g, n, ids)

    def cycle_nodes(self, cycle: str, count: int = 48, avoid=()) -> tuple[np.ndarray, np.ndarray]:
        """Trapezoid nodes and weights on a straight representative of a cycle.

        The segment ``z0 -> z0 + omega`` runs midway between rows of
        ramification points; it is shifted if it passes close to a point of
        ``avoid``.
        """
        lat = self.lattice
        if cycle == "A":
            step, across = lat.omega_A, lat.omega_B
        elif cycle == "B":
            step, across = lat.omega_B, lat.omega_A
        else:
            raise ValueError("cycle must be 'A' or 'B'")
        avoid = np.atleast_1d(np.asarray(avoid, dtype=complex))
        best = None
        for frac in (0.25, 0.2, 0.3, 0.15, 0.35, 0.75, 0.7, 0.8):
            s = (np.arange(count) + 0.5) / count
            zs = frac * across + s * step
            clear = min(float(np.min(lat.distance_to_lattice(zs, offset=r))) for r in self.half_periods)
            if avoid.size:
                gap = min(float(np.min(lat.distance_to_lattice(zs - a))) for a in avoid)
                clear_pts = gap
            else:
                clear_pts = np.inf
            score = min(clear, clear_pts * 2.0)
            if clear > self.exclusion and (best is None or score > best[0]):
                best = (score, zs)
            if clear > self.exclusion and clear_pts > 0.5 * self.exclusion:
                best = (score, zs)
                break
        if best is None:
            raise RamificationPole("no cycle representative clears the contour exclusion zones")
        return best[1], np.full(count, step / count, dtype=complex)

    def cycle_integral(self, g: int, n: int, slot: int, cycle: str, fixed_points=(),
                       count: int = 48) -> complex:
        """``oint_{z_slot in cycle} W_{g,n}`` with the other arguments fixed.

        ``fixed_points`` lists the remaining ``n - 1`` arguments in order.
        """
        fixed = list(np.asarray(fixed_points, dtype=complex).reshape(-1))
        if len(fixed) != n - 1:
            raise ValueError("need n - 1 fixed points")
        zs, w = self.cycle_nodes(cycle, count, avoid=fixed)
        rows = []
        for z in zs:
            row = list(fixed)
            row.insert(slot, z)
            rows.append(row)
        rows = np.array(rows, dtype=complex)
        if (g, n) == (0, 1):
            _, dp, _, _, _ = weierstrass_jet(zs, self.lattice)
            vals = dp * dp
        else:
            vals = self.correlator_grid(g, n, rows)
        return complex(np.sum(vals * w))

    def multi_cycle_integral(self, g: int, n: int, cycles: str, count: int = 32) -> complex:
        """Integral of ``W_{g,n}`` over a cycle in every slot (e.g. ``'BBB'``)."""
        if len(cycles) != n:
            raise ValueError("one cycle label per slot")
        grids = []
        weights = []
        for i, c in enumerate(cycles):
            zs, w = self.cycle_nodes(c, count)
            # slide along the cycle so that no two slots share a node
            grids.append(zs + w[0] * i / n)
            weights.append(w)
        mesh = np.stack([m.ravel() for m in np.meshgrid(*grids, indexing="ij")], axis=1)
        wmesh = np.prod(np.stack([m.ravel() for m in np.meshgrid(*weights, indexing="ij")], axis=1), axis=1)
        vals = self.correlator_grid(g, n, mesh)
        return complex(np.sum(vals * wmesh))

    def residue_at_zero(self, g: int, n: int = 1, fixed_points=(), radius: float | None = None,
                        count: int = 32) -> complex:
        """``Res_{z=0} W_{g,n}(fixed..., z) / z`` by a small circle around ``z = 0``."""
        fixed = list(np.asarray(fixed_points, dtype=complex).reshape(-1))
        rad = radius if radius is not None else 0.25 * self.scale
        zs = rad * np.exp(2j * np.pi * (np.arange(count) + 0.5) / count)
        rows = np.array([fixed + [z] for z in zs], dtype=complex)
        if (g, n) == (0, 2):
            vals = bergman(rows[:, 0], rows[:, 1], self.lattice)
        else:
            vals = self.correlator_grid(g, n, rows)
        return complex(np.mean(vals))

    def free_energy(self, g: int, base_point: complex | None = None) -> complex:
        """``F_g = (1/(2 pi i (2-2g))) sum_j oint Phi W_{g,1}`` for ``g >= 2``.

        ``Phi(z) = int_{z_o}^z wp'(w)^2 dw`` uses the closed primitive
        ``(2/5) wp wp' + (2/5) g2 zeta - (3/5) g3 z``.
        """
        if g < 2:
            raise ValueError("free_energy is defined here for g >= 2")
        if 2 * g - 1 > self.config.max_order:
            raise BudgetExceeded(f"F_{g} needs 2g-1 = {2 * g - 1} > max_order")
        ids, _, wts = self._pool(0)
        nodes = self._values(ids)
        w = self._rows(g, 1, ids.reshape(-1, 1))
        zo = base_point if base_point is not None else 0.37 * self.lattice.omega_A + 0.21 * self.lattice.omega_B
        phi = ydx_primitive(nodes, self.lattice) - ydx_primitive(zo, self.lattice)
        return complex(np.sum(phi * w * wts) / (2.0 - 2.0 * g))


def ydx_primitive(z, frame) -> np.ndarray:
    """Closed-form primitive of ``wp'(z)^2 dz``: ``(2/5) wp wp' + (2/5) g2 zeta - (3/5) g3 z``."""
    lat = _lattice(frame)
    p, dp, _, zeta, _ = weierstrass_jet(z, lat)
    z = np.asarray(z, dtype=complex)
    return 0.4 * p * dp + 0.4 * lat.g2 * zeta - 0.6 * lat.g3 * z


def correlator(g: int, n: int, points, frame, config: ContourConfig | None = None) -> complex:
    """One-shot ``W_{g,n}`` density (builds a fresh evaluator)."""
    return CorrelatorEvaluator(frame, config).correlator(g, n, points)


def free_energy(g: int, frame, config: ContourConfig | None = None, base_point=None) -> complex:
    """``F_g`` for ``g >= 2`` (builds a fresh evaluator)."""
    return CorrelatorEvaluator(frame, config).free_energy(g, base_point)


def residue_at_zero(g: int, frame, config: ContourConfig | None = None) -> complex:
    """``Res_{z=0} W_{g,1}(z)/z``, which equals ``dF_g/dt``."""
    return CorrelatorEvaluator(frame, config).residue_at_zero(g)
