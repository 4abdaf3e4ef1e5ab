"""Fixture contours used by the verification suite and the tests.

All fixtures are deterministic and use exact analytic arc kinds where
possible.  The spiral fixture is the four-piece Jordan curve made of two
straight segments and two logarithmic-spiral arms winding into the origin.
"""

from __future__ import annotations

import numpy as np

from .geometry import build_arc, compose_contour

SPIRAL_WINDING = 25.0


def unit_circle(z0=0.35 + 0.2j):
    arc = build_arc("circular-arc", center=0.0, radius=1.0, theta0=0.0, theta1=2 * np.pi)
    return compose_contour([arc], [("in", "out")], {"in": "+", "out": "-"}, z0)


def circle(center=0.0, radius=1.0, z0=None, ccw=True):
    th = (0.0, 2 * np.pi) if ccw else (2 * np.pi, 0.0)
    arc = build_arc("circular-arc", center=center, radius=radius, theta0=th[0], theta1=th[1])
    inside, outside = ("in", "out") if ccw else ("out", "in")
    signs = {"in": "+" if ccw else "-", "out": "-" if ccw else "+"}
    if z0 is None:
        z0 = center + 0.35 * radius * (1 + 0.5j)
    return compose_contour([arc], [(inside, outside) if ccw else ("out", "in")],
                           signs, z0)


def two_circles(c1=0.0, c2=5.0, r1=1.0, r2=1.0, z0=None):
    """Two disjoint ccw circles; both interiors are + components."""
    a1 = build_arc("circular-arc", center=c1, radius=r1, theta0=0.0, theta1=2 * np.pi)
    a2 = build_arc("circular-arc", center=c2, radius=r2, theta0=0.0, theta1=2 * np.pi)
    if z0 is None:
        z0 = (c1 + c2) / 2 + 2j * max(r1, r2)
    return compose_contour(
        [a1, a2],
        [("in1", "out"), ("in2", "out")],
        {"in1": "+", "in2": "+", "out": "-"},
        z0,
    )


def corner_square(half=1.0, z0=0.1 + 0.2j):
    """CCW square with corner-tagged vertices."""
    corners = [half * (1 + 1j), half * (-1 + 1j), half * (-1 - 1j), half * (1 - 1j)]
    arcs = [build_arc("line-segment", start=corners[i], end=corners[(i + 1) % 4])
            for i in range(4)]
    return compose_contour(arcs, [("in", "out")] * 4, {"in": "+", "out": "-"}, z0)


def teardrop(z0=3.0 + 1.0j):
    """Cusped region between two internally tangent circles.

    The + region is the lune between |z-1|=1 (outer, ccw) and |z-0.5|=0.5
    (inner, cw); the two boundary circles meet at the origin with
    anti-parallel tangents, a nontransversal cusp.
    """
    outer = build_arc("circular-arc", center=1.0, radius=1.0,
                      theta0=np.pi, theta1=3 * np.pi,
                      start_tag="cusp", end_tag="cusp")
    inner = build_arc("circular-arc", center=0.5, radius=0.5,
                      theta0=np.pi, theta1=-np.pi,
                      start_tag="cusp", end_tag="cusp")
    return compose_contour(
        [outer, inner],
        [("lune", "out"), ("lune", "hole")],
        {"lune": "+", "out": "-", "hole": "-"},
        z0,
    )


def spiral_contour(z0=-1.0 - 1.0j, delta=SPIRAL_WINDING):
    """Four-piece Carleson jump contour: two segments and two spiral arms.

    Runs 1 -> 1+i -> i, winds into 0 along i*r*exp(-i*delta*log r), and
    returns to 1 along r*exp(-i*delta*log r).  The enclosed spiral-shaped
    region is the + side.
    """
    a1 = build_arc("line-segment", start=1.0, end=1.0 + 1.0j)
    a2 = build_arc("line-segment", start=1.0 + 1.0j, end=1.0j)
    a3 = build_arc("log-spiral-segment", base=0.0, coeff=1.0j, delta=delta, r0=1.0, r1=0.0)
    a4 = build_arc("log-spiral-segment", base=0.0, coeff=1.0, delta=delta, r0=0.0, r1=1.0)
    return compose_contour(
        [a1, a2, a3, a4],
        [("in", "out")] * 4,
        {"in": "+", "out": "-"},
        z0,
    )


def real_line(z0=-2.0j):
    """The real axis oriented left to right; upper half plane is +."""
    arc = build_arc("line-segment", start=None, end=None, point=0.0, direction=1.0)
    return compose_contour([arc], [("upper", "lower")],
                           {"upper": "+", "lower": "-"}, z0)


def tangent_circles(z0=0.0 + 3.0j):
    """Two externally tangent ccw unit circles meeting at the origin.

    Returns (contour, right_lobe_arc_ids).  Reversing the right lobe turns
    this into the figure-eight traversal, which is not a jump contour; jump
    data posed on the figure-eight is equivalent to data on this contour
    with the jump inverted on the reversed arcs.
    """
    left = build_arc("circular-arc", center=-1.0, radius=1.0,
                     theta0=0.0, theta1=2 * np.pi,
                     start_tag="cusp", end_tag="cusp")
    right = build_arc("circular-arc", center=1.0, radius=1.0,
                      theta0=np.pi, theta1=3 * np.pi,
                      start_tag="cusp", end_tag="cusp")
    contour = compose_contour(
        [left, right],
        [("inL", "out"), ("inR", "out")],
        {"inL": "+", "inR": "+", "out": "-"},
        z0,
    )
    return contour, (1,)


def concentric_pair(r_outer=1.0, r_inner=0.5, z0=2.0 + 2.0j):
    """Annulus-style contour: outer ccw circle, inner cw circle.

    The annulus is the + region; the inner disk and the exterior are -.
    Used by the deformation checks (outer = base contour, inner = the
    auxiliary curve).
    """
    outer = build_arc("circular-arc", center=0.0, radius=r_outer,
                      theta0=0.0, theta1=2 * np.pi)
    inner = build_arc("circular-arc", center=0.0, radius=r_inner,
                      theta0=2 * np.pi, theta1=0.0)
    return compose_contour(
        [outer, inner],
        [("ring", "out"), ("ring", "core")],
        {"ring": "+", "out": "-", "core": "-"},
        z0,
    )
