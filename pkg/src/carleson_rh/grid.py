"""Graded composite Gauss-Legendre grids over jump contours.

Panels are laid out per arc in its own parameter, geometrically graded
toward endpoints tagged corner/cusp/spiral-accumulation.  Spiral ends are
graded in the radial parameter with a ratio tied to the winding rate (about
one full turn per panel), so each panel sees a bounded number of
oscillations.  Nodes are interior Gauss points; no node ever sits on an
arc endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import ContourError, winding_number

GRADED_TAGS = ("corner", "cusp", "spiral-accumulation")


#: geometric corner/cusp grading is capped at this many levels (2^-16 of the
#: arc); extra panel budget goes into the uniform middle instead
MAX_CORNER_DEPTH = 16


def _spiral_ratio(arc):
    # about one full winding per panel, matching a 12+ node Gauss panel
    delta = abs(arc.params.get("delta", 0.0))
    return float(np.exp(-2 * np.pi / max(delta, 1.0)))


def _is_spiral_tag(arc, end):
    return (arc.start_tag if end == 0 else arc.end_tag) == "spiral-accumulation"


def _graded(depth, q):
    # 0 < q^depth < ... < q < 1 on the unit interval, including the tip panel
    return np.concatenate([[0.0], q ** np.arange(depth, -1, -1.0)])


def _corner_layout(panels, q):
    """Graded-then-uniform breakpoints on [0, 1] toward 0.

    Depth is capped; the remaining budget becomes uniform panels whose width
    matches the largest graded panel.
    """
    d = min(MAX_CORNER_DEPTH, max(1, panels - 1))
    nu = panels - d
    if nu <= 0:
        return _graded(panels, q)
    c = 1.0 / (1.0 + nu * (1.0 - q))
    graded_part = c * _graded(d - 1, q) if d > 1 else np.array([0.0, c])
    uniform_part = np.linspace(c, 1.0, nu + 1)
    return np.concatenate([graded_part, uniform_part[1:]])


def panel_breakpoints(arc, panels, grading_ratio):
    """Panel breakpoints in [0, 1] for one arc.

    Untagged arcs get ``panels`` uniform panels.  Corner/cusp ends get a
    geometric layout (ratio ``grading_ratio``, depth capped) whose leftover
    budget fills the middle uniformly.  Spiral-accumulation ends get a pure
    geometric layout in the radial parameter with about one winding per
    panel; a tagged far end of a spiral arc gets a few extra subdivisions.
    """
    if panels < 1:
        raise ContourError("panels_per_arc must be >= 1")
    g0 = arc.start_tag in GRADED_TAGS
    g1 = arc.end_tag in GRADED_TAGS

    if arc.kind == "log-spiral-segment" and (_is_spiral_tag(arc, 0) or _is_spiral_tag(arc, 1)):
        q = _spiral_ratio(arc)
        toward_start = _is_spiral_tag(arc, 0)
        far_tagged = g1 if toward_start else g0
        extra = 4 if far_tagged else 0
        depth = max(1, panels - 1 - extra)
        breaks = _graded(depth, q)
        if extra:
            # subdivide the outermost panel toward the far (corner) end
            outer = 1.0 - (1.0 - breaks[-2]) * grading_ratio ** np.arange(extra, 0, -1.0)
            breaks = np.concatenate([breaks[:-1], outer, [1.0]])
        return breaks if toward_start else np.sort(1.0 - breaks)

    if not g0 and not g1:
        return np.linspace(0.0, 1.0, panels + 1)
    if g0 and not g1:
        return _corner_layout(panels, grading_ratio)
    if g1 and not g0:
        return np.sort(1.0 - _corner_layout(panels, grading_ratio))
    half = max(1, panels // 2)
    left = 0.5 * _corner_layout(half, grading_ratio)
    right = 1.0 - 0.5 * _corner_layout(half, grading_ratio)[::-1]
    return np.concatenate([left, right[1:]])


@dataclass
class QuadratureGrid:
    """Composite Gauss-Legendre grid over a jump contour.

    ``dz`` are complex quadrature weights absorbing the parametrization
    derivative (so sum(dz * f(nodes)) approximates the contour integral of
    f), ``arclength`` their moduli, ``param_weight`` the bare Gauss weights
    in arc parameter.  ``pv_constant`` holds the exact principal-value
    integral (1/pi i) p.v. int dz'/(z'-z_j), assembled from loop topology:
    the node's own loop contributes its planar orientation sign and every
    other loop twice its winding number about the node.
    """

    contour: object
    nodes: np.ndarray
    dz: np.ndarray
    arclength: np.ndarray
    param_weight: np.ndarray
    t: np.ndarray
    arc_index: np.ndarray
    panel_index: np.ndarray
    panel_spans: list
    loop_index: np.ndarray
    loop_theta: np.ndarray
    pv_constant: np.ndarray
    panels_per_arc: int
    nodes_per_panel: int
    grading_ratio: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self):
        return len(self.nodes)

    @property
    def has_unbounded(self):
        return self.contour.contains_infinity

    def panel_widths(self):
        """Arclength of each panel."""
        npan = self.panel_index.max() + 1
        w = np.zeros(npan)
        np.add.at(w, self.panel_index, self.arclength)
        return w

    def local_panel_width(self):
        """Per node, the arclength of the panel containing it."""
        return self.panel_widths()[self.panel_index]

    def local_node_spacing(self):
        """Per node, the mean internode arclength of its panel.

        This is the resolution scale used by the near-boundary policies
        ("panel width" in the evaluation-guard sense)."""
        return self.panel_widths()[self.panel_index] / self.nodes_per_panel

    def distance_to(self, z):
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            return float(np.abs(self.nodes - complex(z)).min())
        return np.abs(z[..., None] - self.nodes).min(axis=-1)

    def arc_arclength(self, i):
        return float(self.arclength[self.arc_index == i].sum())


def gauss_panels(breaks, nodes_per_panel):
    x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
    ts, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        ts.append(0.5 * (a + b) + 0.5 * (b - a) * x)
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(ts), np.concatenate(ws)


def build_grid(contour, panels_per_arc=8, nodes_per_panel=16, grading_ratio=0.5,
               allow_unbounded=False):
    """Build a :class:`QuadratureGrid` over a bounded jump contour.

    Contours through infinity have no direct grid; build a
    :class:`~carleson_rh.operators.MobiusChart` instead (``allow_unbounded``
    is the internal hook the chart uses, leaving principal-value constants
    unset on loops through infinity).
    """
    if contour.contains_infinity and not allow_unbounded:
        raise ContourError(
            "contour passes through infinity; build a MobiusChart and use the "
            "chart-transported operators"
        )
    if nodes_per_panel < 2:
        raise ContourError("nodes_per_panel must be >= 2")
    if not 0.0 < grading_ratio < 1.0:
        raise ContourError("grading_ratio must lie in (0, 1)")

    arc_of_loop = {}
    theta_base = {}
    for li, loop in enumerate(contour.plus_loops):
        m = len(loop.arc_ids)
        for pos, (ai, rev) in enumerate(loop.arc_ids):
            arc_of_loop[ai] = li
            theta_base[ai] = (pos, m)

    # per-arc panel budgets: spiral-accumulation arcs need the extra depth
    # (their geometric layout must chase the windings down), so they draw
    # 2.5x the weight of ordinary arcs; panels_per_arc is the average
    weights = np.array([2.5 if any(t == "spiral-accumulation"
                                   for t in (a.start_tag, a.end_tag)) else 1.0
                        for a in contour.arcs])
    budget = panels_per_arc * len(contour.arcs)
    per_arc = np.maximum(1, np.floor(budget * weights / weights.sum()).astype(int))

    nodes, dz, wpar, ts, arc_ix, panel_ix, spans = [], [], [], [], [], [], []
    loop_ix, loop_th = [], []
    pan = 0
    for i, arc in enumerate(contour.arcs):
        breaks = panel_breakpoints(arc, int(per_arc[i]), grading_ratio)
        t, w = gauss_panels(breaks, nodes_per_panel)
        gp = arc.derivative(t)
        nodes.append(arc.point(t))
        dz.append(gp * w)
        wpar.append(w)
        ts.append(t)
        arc_ix.append(np.full(len(t), i))
        npan = len(breaks) - 1
        panel_ix.append(pan + np.repeat(np.arange(npan), nodes_per_panel))
        spans += [(i, breaks[k], breaks[k + 1]) for k in range(npan)]
        pan += npan
        li = arc_of_loop.get(i)
        if li is None:
            raise ContourError(f"arc {i} belongs to no + loop; contour invalid")
        pos, m = theta_base[i]
        loop_ix.append(np.full(len(t), li))
        loop_th.append((pos + t) / m)

    nodes = np.concatenate(nodes)
    dz = np.concatenate(dz)
    grid = QuadratureGrid(
        contour=contour,
        nodes=nodes,
        dz=dz,
        arclength=np.abs(dz),
        param_weight=np.concatenate(wpar),
        t=np.concatenate(ts),
        arc_index=np.concatenate(arc_ix),
        panel_index=np.concatenate(panel_ix),
        panel_spans=spans,
        loop_index=np.concatenate(loop_ix),
        loop_theta=np.concatenate(loop_th),
        pv_constant=_pv_constants(contour, nodes, np.concatenate(arc_ix), arc_of_loop),
        panels_per_arc=panels_per_arc,
        nodes_per_panel=nodes_per_panel,
        grading_ratio=grading_ratio,
    )
    return grid


def _pv_constants(contour, nodes, arc_index, arc_of_loop):
    loops = contour.plus_loops
    out = np.full(len(nodes), np.nan)
    node_loop = np.array([arc_of_loop[a] for a in arc_index])
    for li, loop in enumerate(loops):
        on_loop = node_loop == li
        if loop.through_infinity:
            continue  # direct principal values unavailable; chart path only
        vals = np.full(on_loop.sum(), float(loop.orientation))
        for lj, other in enumerate(loops):
            if lj == li:
                continue
            if other.through_infinity:
                raise ContourError("mixed bounded/unbounded loops need a chart")
            vals = vals + 2.0 * winding_number(other.polyline, nodes[on_loop])
        out[on_loop] = vals
    return out
