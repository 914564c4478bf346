"""Command-line front end.

Every subcommand writes one JSON document (or SVG/CSV where noted) to
``--out`` or stdout.  Exit codes: 0 success, 1 domain error, 2 a computed
residual exceeds ``--tol``, 64 bad usage.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .errors import P1trError

SCHEMA = "p1tr/1"
EXIT_OK, EXIT_ERROR, EXIT_VALIDATION, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    """Malformed command line."""


class _Parser(argparse.ArgumentParser):
    # accept "-9.9,1.2" as a value rather than an option
    _NEGATIVE = re.compile(r"^-\.?\d[\d.eE+-]*(,[-+]?[\d.eE+-]*)?$")

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = self._NEGATIVE

    def error(self, message):
        raise UsageError(message)


def parse_complex(text: str) -> complex:
    """``"re,im"`` or a plain real number."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    command: str
    t: complex | None = None
    nu: complex | None = None
    rho: complex | None = None
    hbar: float | None = None
    order: int | None = None
    tol: float | None = None
    out: str | None = None
    format: str = "json"


def threads() -> int:
    """Worker count from ``P1TR_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("P1TR_THREADS", "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# deterministic JSON
# --------------------------------------------------------------------------

def _num(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    if x == int(x) and abs(x) < 1e16:
        return format(x, ".1f")
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Serialise with 17 significant digits; complex numbers become ``[re, im]``."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return f"[{_num(obj.real)}, {_num(obj.imag)}]"
    if isinstance(obj, str):
        import json

        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{to_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    from .stokes import _atomic_write

    _atomic_write(out, text)


def _document(cfg: RunConfig, result: dict, tolerances: dict, extra_meta: dict | None = None) -> str:
    params = {k: v for k, v in asdict(cfg).items() if v is not None and k not in ("out",)}
    meta = {"version": __version__, "tolerances": tolerances}
    if extra_meta:
        meta.update(extra_meta)
    doc = {"schema": SCHEMA, "command": cfg.command, "params": params, "meta": meta, "result": result}
    return to_json(doc) + "\n"


def _contour_meta() -> dict:
    from .toprec import ContourConfig

    return {"contour": asdict(ContourConfig())}


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _frame(cfg: RunConfig):
    from .curve_family import solve_u

    return solve_u(cfg.t, cfg.nu)


def cmd_curve(cfg: RunConfig) -> tuple[dict, dict, bool]:
    fr = _frame(cfg)
    tol = cfg.tol or 1e-10
    res = {"bilinear": fr.lattice.bilinear_residual, "a_period": fr.a_period_residual}
    out = {
        "u": fr.u,
        "roots": list(fr.roots.values),
        "omega_A": fr.omega_A,
        "omega_B": fr.omega_B,
        "eta_A": fr.eta_A,
        "eta_B": fr.eta_B,
        "tau": fr.tau,
        "phi": fr.phi,
        "residuals": res,
    }
    return out, {"residual": tol}, max(res.values()) < tol


def cmd_free_energy(cfg: RunConfig, genus: int) -> tuple[dict, dict, bool]:
    from .curve_family import f0, f1
    from .toprec import CorrelatorEvaluator

    fr = _frame(cfg)
    out = {"F0": f0(fr), "F1": f1(fr)}
    if genus >= 2:
        out["F2"] = CorrelatorEvaluator(fr).free_energy(2)
    return out, {}, True


def cmd_correlator(cfg: RunConfig, g: int, n: int, zs: list[complex]) -> tuple[dict, dict, bool]:
    from .toprec import CorrelatorEvaluator

    if len(zs) != n:
        raise UsageError(f"need exactly {n} --z points for W_{{{g},{n}}}")
    fr = _frame(cfg)
    ev = CorrelatorEvaluator(fr)
    val = ev.correlator(g, n, zs)
    return {"g": g, "n": n, "z": zs, "value": val}, {}, True


def cmd_wkb_check(cfg: RunConfig, xs: list[complex]) -> tuple[dict, dict, bool]:
    from .toprec import CorrelatorEvaluator
    from .wkb import a_cycle_monodromy, riccati_residual, s_minus1, s_minus1_closed, s_zero

    fr = _frame(cfg)
    ev = CorrelatorEvaluator(fr)
    tol = cfg.tol or 1e-6
    rows = []
    ok = True
    for x in xs:
        r0 = abs(riccati_residual(0, x, fr))
        r1 = abs(riccati_residual(1, x, fr, ev))
        sm1 = s_minus1(x, fr)
        rows.append({"x": x, "S_minus1": sm1, "S_minus1_closed_rel": abs(sm1 - s_minus1_closed(x, fr)) / abs(sm1),
                     "S0": s_zero(x, fr), "riccati_m0": r0, "riccati_m1": r1})
        ok &= max(r0, r1) < tol
    mono = {f"m={m}": a_cycle_monodromy(m, fr, ev) for m in (-1, 0, 1)}
    mono_err = max(abs(mono["m=-1"] - 2j * np.pi * fr.nu), abs(mono["m=0"]), abs(mono["m=1"]))
    ok &= mono_err < tol
    return {"points": rows, "a_monodromy": mono, "a_monodromy_error": mono_err}, {"residual": tol}, ok


def cmd_tau(cfg: RunConfig) -> tuple[dict, dict, bool]:
    from .tau_series import TauParameters, hqp_series, painleve_residual, q0_theta, q_leading

    fr = _frame(cfg)
    params = TauParameters(cfg.nu, cfg.rho, cfg.hbar)
    order = cfg.order if cfg.order is not None else 1
    tol = cfg.tol or 1e-7
    series = hqp_series(order, fr, params)
    h, q, p = series
    res = {f"order_{m}": painleve_residual(m, fr, params, series=series) for m in range(order + 1)}
    out = {
        "v": params.v(fr),
        "H": [h.value(m) for m in range(order + 1)],
        "q": [q.value(m) for m in range(order + 1)],
        "p": [p.value(m) for m in range(order + 1)],
        "q0_wp_form": q_leading(fr.t, cfg.nu, cfg.rho, cfg.hbar, fr),
        "q0_theta_form": q0_theta(fr, params),
        "residuals": res,
    }
    # absolute residuals grow with |v|; judge relative to the size of the terms
    rel = {k: max(r["painleve"] / max(r["painleve_scale"], 1.0), r["hamiltonian"] / max(r["hamiltonian_scale"], 1.0))
           for k, r in res.items()}
    out["relative_residuals"] = rel
    return out, {"relative_residual": tol}, max(rel.values()) < tol


def cmd_stokes_graph(cfg: RunConfig, kind: str) -> tuple[object, dict, bool]:
    from .stokes import TraceOptions, graph_to_dict, svg_text, trace_graph

    fr = _frame(cfg)
    opts = TraceOptions()
    g = trace_graph(fr, kind, opts)
    if cfg.format == "svg":
        return svg_text(g), asdict(opts), True
    return graph_to_dict(g), asdict(opts), True


def cmd_stokes_multipliers(cfg: RunConfig) -> tuple[dict, dict, bool]:
    from .tau_series import TauParameters, cluster_residuals, cyclic_residual, stokes_multipliers

    params = TauParameters(cfg.nu, cfg.rho, cfg.hbar)
    s = stokes_multipliers(params)
    tol = cfg.tol or 1e-12
    cyc = cyclic_residual(s)
    clu = max(cluster_residuals(s))
    out = {"ell": [-2, -1, 0, 1, 2], "s": s, "cyclic_residual": cyc, "cluster_residual": clu}
    return out, {"residual": tol}, max(cyc, clu) < tol


def cmd_verify(numbers: list[int] | None) -> tuple[list, bool]:
    from .acceptance import CHECKS, run_checks

    nums = numbers or sorted(CHECKS)
    workers = min(threads(), len(nums))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = [r for batch in pool.map(lambda n: run_checks([n]), nums) for r in batch]
    else:
        results = run_checks(nums)
    return results, all(r.passed for r in results)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="p1tr", description="Painleve I tau-functions from topological recursion")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, need_t=True, rho=False):
        if need_t:
            p.add_argument("--t", type=parse_complex, required=True, help="complex 're,im'")
        p.add_argument("--nu", type=parse_complex, required=True, help="complex 're,im'")
        if rho:
            p.add_argument("--rho", type=parse_complex, required=True, help="complex 're,im'")
            p.add_argument("--hbar", type=float, default=0.1)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--format", choices=["json", "csv", "svg"], default="json")

    common(sub.add_parser("curve", help="solve for u and report periods"))
    p = sub.add_parser("free-energy", help="F0, F1 and optionally F2")
    common(p)
    p.add_argument("--genus", type=int, default=1, choices=[0, 1, 2])
    p = sub.add_parser("correlator", help="evaluate W_{g,n} at points of the z-plane")
    common(p)
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--z", type=parse_complex, action="append", default=[])
    p = sub.add_parser("wkb-check", help="Riccati and monodromy checks of the WKB coefficients")
    common(p)
    p.add_argument("--x", type=parse_complex, action="append", default=[])
    p = sub.add_parser("tau", help="H, q, p coefficients and Painleve residuals")
    common(p, rho=True)
    p.add_argument("--order", type=int, default=1, choices=[0, 1])
    p = sub.add_parser("stokes-graph", help="trace a Stokes or anti-Stokes graph")
    common(p)
    p.add_argument("--kind", choices=["stokes", "anti"], default="stokes")
    p = sub.add_parser("stokes-multipliers", help="closed-form Stokes multipliers")
    common(p, need_t=False, rho=True)
    p = sub.add_parser("verify", help="run the acceptance checks")
    p.add_argument("--only", type=int, action="append", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "csv", "text"], default="text")
    return parser


def _verify_output(results, fmt: str) -> str:
    if fmt == "text":
        return "\n".join(r.line() for r in results) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["number", "title", "value", "tolerance", "passed", "detail"])
        for r in results:
            w.writerow([r.number, r.title, _num(r.value), _num(r.tolerance), r.passed, r.detail])
        return buf.getvalue()
    doc = {"schema": SCHEMA, "command": "verify",
           "result": [{"number": r.number, "title": r.title, "value": r.value, "tolerance": r.tolerance,
                       "passed": r.passed, "detail": r.detail} for r in results]}
    return to_json(doc) + "\n"


def _csv_rows(result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ell", "re", "im"])
    for ell, s in zip(result["ell"], result["s"]):
        w.writerow([ell, _num(s.real), _num(s.imag)])
    return buf.getvalue()


def dispatch(argv=None) -> int:
    """Run one subcommand; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    try:
        if args.command == "verify":
            results, ok = cmd_verify(args.only)
            _emit(_verify_output(results, args.format), args.out)
            return EXIT_OK if ok else EXIT_VALIDATION
        cfg = RunConfig(
            command=args.command,
            t=getattr(args, "t", None),
            nu=args.nu,
            rho=getattr(args, "rho", None),
            hbar=getattr(args, "hbar", None),
            order=getattr(args, "order", None),
            tol=args.tol,
            out=args.out,
            format=args.format,
        )
        if cfg.format == "svg" and args.command != "stokes-graph":
            raise UsageError("svg output is only available for stokes-graph")
        if cfg.format == "csv" and args.command != "stokes-multipliers":
            raise UsageError("csv output is only available for stokes-multipliers")
        extra = None
        if args.command == "curve":
            result, tols, ok = cmd_curve(cfg)
        elif args.command == "free-energy":
            result, tols, ok = cmd_free_energy(cfg, args.genus)
            extra = _contour_meta()
        elif args.command == "correlator":
            result, tols, ok = cmd_correlator(cfg, args.g, args.n, args.z)
            extra = _contour_meta()
        elif args.command == "wkb-check":
            if not args.x:
                raise UsageError("wkb-check needs at least one --x")
            result, tols, ok = cmd_wkb_check(cfg, args.x)
            extra = _contour_meta()
        elif args.command == "tau":
            result, tols, ok = cmd_tau(cfg)
        elif args.command == "stokes-graph":
            result, tols, ok = cmd_stokes_graph(cfg, args.kind)
            if cfg.format == "svg":
                _emit(result, cfg.out)
                return EXIT_OK
            extra = {"trace_options": tols}
            tols = {"segment_capture": tols["capture"]}
        else:
            result, tols, ok = cmd_stokes_multipliers(cfg)
            if cfg.format == "csv":
                _emit(_csv_rows(result), cfg.out)
                return EXIT_OK if ok else EXIT_VALIDATION
        _emit(_document(cfg, result, tols, extra), cfg.out)
        return EXIT_OK if ok else EXIT_VALIDATION
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (P1trError, ArithmeticError, ValueError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
