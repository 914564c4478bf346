import dataclasses
import json
import xml.etree.ElementTree as ET

import mpmath
import numpy as np
import pytest

from conftest import GENERIC, QUOTED, rel
from p1tr.curve_family import solve_u
from p1tr.tau_series import TauParameters, multipliers_from_graph, stokes_multipliers
from p1tr.stokes import (boutroux_point, boutroux_residual, branch_labels, curve_sign, direction_deviation,
                         dump_json, half_period_coords, integrate_along, reintegration_error, render_svg, svg_text,
                         trace_graph)


@pytest.fixture(scope="module")
def quoted_graph(quoted_frame):
    return trace_graph(quoted_frame, "stokes")


@pytest.fixture(scope="module")
def star_frame():
    return boutroux_point(*QUOTED)


@pytest.fixture(scope="module")
def star_anti(star_frame):
    return trace_graph(star_frame, "anti")


def segment_ydx(a, b, c):
    """int_a^b y dx along the straight segment (tanh-sinh quadrature, y up to sign)."""
    a, b, c = (mpmath.mpc(complex(z)) for z in (a, b, c))
    d = b - a

    def f(theta):
        s = (1 - mpmath.cos(theta)) / 2
        x = a + d * s
        kc = mpmath.sqrt((x - c) / (a - c)) * mpmath.sqrt(a - c)
        y = 2 * mpmath.sqrt(d) * mpmath.sqrt(-d) * mpmath.sin(theta) / 2 * kc
        return y * d * mpmath.sin(theta) / 2

    return complex(mpmath.quad(f, [0, mpmath.pi]))


def components(graph):
    parent = list(range(len(graph.branch_points)))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for a, b in graph.segments:
        parent[find(graph.curves[a].origin)] = find(graph.curves[b].origin)
    return len({find(i) for i in range(len(parent))})


def test_generic_graph_directions(frame):
    g = trace_graph(frame, "stokes")
    assert len(g.curves) == 9
    for c in g.curves:
        if not c.is_segment:
            assert direction_deviation(c) < 0.05
            k = 5 * np.angle(c.points[-1]) / (2 * np.pi)
            assert abs(k - c.ell) < 0.05 * 5 / (2 * np.pi)


def test_quoted_stokes_graph(quoted_graph, quoted_frame):
    assert quoted_graph.segments == []
    assert sorted({c.ell for c in quoted_graph.curves}) == [-2, -1, 0, 1, 2]
    for c in quoted_graph.curves:
        assert reintegration_error(c, quoted_frame) < 1e-6


def test_half_period_table(quoted_graph, quoted_frame):
    # (m, n) per branch point at the quoted parameters, with the identity convention map
    expected = {0: {(0, 1), (0, -1)}, 1: {(1, 1), (1, -1)}, 2: {(1, 0)}}
    for c in quoted_graph.curves:
        assert c.half_period in expected[c.origin]
        assert half_period_coords(c, quoted_frame) == c.half_period
        m, n = c.half_period
        assert m % 2 == 1 or n % 2 == 1
    for origin in range(3):
        parities = {(m % 2, n % 2) for c in quoted_graph.curves if c.origin == origin for m, n in [c.half_period]}
        assert len(parities) == 1
    assert branch_labels(quoted_graph) == {0: "B", 1: "AB", 2: "A"}


def test_signs_fixture_and_branch_flip(quoted_graph, quoted_frame):
    # recorded from the first verified run
    signs = [-1, 1, 1, -1, -1, 1, 1, -1, -1]
    assert [c.sign for c in quoted_graph.curves] == signs
    for c in quoted_graph.curves:
        flipped = dataclasses.replace(c, branch_flip=-c.branch_flip)
        assert curve_sign(flipped, quoted_frame) == -c.sign


def test_sign_constant_along_curve(quoted_graph, quoted_frame):
    c = quoted_graph.curves[0]
    totals = []
    for k in range(5, len(c.points), 10):
        part = dataclasses.replace(c, points=c.points[: k + 1])
        totals.append(integrate_along(part, quoted_frame).real)
    assert all(np.sign(v) == c.sign for v in totals)
    assert all(abs(b) >= abs(a) for a, b in zip(totals, totals[1:]))


def test_graph_multipliers(quoted_graph):
    for nu, rho, hbar in ((0.3, 0.1, 0.5), (0.5, -0.2, 1.0)):
        p = TauParameters(nu, rho, hbar)
        got = multipliers_from_graph(quoted_graph, p)
        assert max(abs(a - b) for a, b in zip(got, stokes_multipliers(p))) < 1e-14


def test_boutroux_residuals(quoted_frame):
    ra, rb = boutroux_residual(quoted_frame)
    assert abs(ra) < 1e-12
    assert abs(rb) < 1e-2 * abs(quoted_frame.ydx_B)
    control = solve_u(-10.0, 0.5)
    assert abs(boutroux_residual(control)[1]) > 1e-2 * abs(control.ydx_B)


def test_boutroux_point_anti_graph(star_frame, star_anti):
    assert max(abs(r) for r in boutroux_residual(star_frame)) < 1e-12
    assert abs(star_frame.t - QUOTED[0]) < 1e-2
    assert len(star_anti.segments) >= 2
    assert components(star_anti) == 1
    # every pair of branch points sits on one level set of Re int y dx
    e = star_anti.branch_points
    for i in range(3):
        for j in range(i):
            val = segment_ydx(e[i], e[j], e[3 - i - j])
            assert abs(val.real) < 1e-8 * abs(val)
    assert trace_graph(star_frame, "stokes").segments == []


def test_anti_graph_off_the_locus():
    fr = solve_u(QUOTED[0].real + 3j, 0.5)
    g = trace_graph(fr, "anti")
    # real nu keeps Re oint_A y dx = 0, so only the A-pair stays joined
    assert components(g) == 2
    a_pair = set(fr.lattice.convention.a_pair)
    for a, b in g.segments:
        assert {g.curves[a].origin, g.curves[b].origin} == a_pair


def test_svg_output(tmp_path, quoted_graph, star_anti):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    render_svg(quoted_graph, str(a))
    render_svg(trace_graph(quoted_graph.frame, "stokes"), str(b))
    assert a.read_bytes() == b.read_bytes()
    root = ET.fromstring(a.read_text())
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 9
    empty = ET.fromstring(svg_text(None))
    assert len(empty.findall("{http://www.w3.org/2000/svg}line")) == 2
    assert not empty.findall("{http://www.w3.org/2000/svg}polyline")
    assert "#2ca02c" in svg_text(star_anti)


def test_json_dump(tmp_path, quoted_graph):
    path = tmp_path / "g.json"
    dump_json(quoted_graph, str(path))
    data = json.loads(path.read_text())
    assert data["kind"] == "stokes" and len(data["curves"]) == 9
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]
