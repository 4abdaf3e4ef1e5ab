"""Executable checks of the operator identities, uniqueness claims, and the
contour-deformation equivalence, each producing a convergence table.

Operator-level defects (the projection algebra) are measured as the worst
weighted-L2 amplification over a band-limited probe family: per-loop Fourier
modes resolved at a fixed number of nodes per wavelength on the coarsest
grid of the study.  The raw matrix norm of a Nystrom defect does not
converge (it is dominated by modes no grid resolves), so the probe family
is anchored once per study and reused on every finer grid; this is stated
in each report's details.

Headline sup-norm errors exclude nodes in the panels nearest to
corner/cusp/spiral-accumulation endpoints (the same convention the solver
diagnostics use); per-node data is never discarded, only the summary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import MatrixField, NormSpec
from .geometry import ContourError, compose_contour, locate, winding_number, _signed_area
from .grid import build_grid
from .operators import (
    MobiusChart,
    cauchy_offcontour,
    cauchy_singular,
    cm_matrix,
    cp_matrix,
    s_matrix,
    weighted_norm,
)
from .solver import (
    RHProblem,
    _nodes_near_singular_endpoints,
    diagnostics,
    evaluate_solution,
    region_probes,
    solve,
)

#: nodes per wavelength a probe mode must keep on the anchor grid
PROBE_PPW = 16


@dataclass
class ConvergenceReport:
    """One identity's error against grid size, with the empirical order."""

    identity: str
    grid_sizes: list
    errors: list
    threshold: float = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(e < 0 for e in self.errors):
            raise ValueError("errors must be nonnegative")
        if any(b <= a for a, b in zip(self.grid_sizes, self.grid_sizes[1:])):
            raise ValueError("grid sizes must be strictly increasing")

    @property
    def order(self):
        """Least-squares log-log slope over the final three grids."""
        if len(self.errors) < 2:
            return float("nan")
        ns = np.asarray(self.grid_sizes[-3:], dtype=float)
        es = np.maximum(np.asarray(self.errors[-3:], dtype=float), 1e-300)
        slope = np.polyfit(np.log(ns), np.log(es), 1)[0]
        return float(-slope)

    @property
    def passed(self):
        if self.threshold is None:
            return True
        return self.errors[-1] <= self.threshold

    def tail_decreasing(self, floor=1e-12, slack=1.0):
        """Errors over the last three grids decrease (or sit at roundoff)."""
        tail = self.errors[-3:]
        return all(b <= max(a * slack, floor) for a, b in zip(tail, tail[1:]))

    def rows(self):
        return [(self.identity, n, e, self.order) for n, e in zip(self.grid_sizes, self.errors)]


def _grids(contour, grid_params, nodes_per_panel=16, grading_ratio=0.5):
    out = []
    for p in grid_params:
        if isinstance(p, tuple):
            out.append(build_grid(contour, *p))
        else:
            out.append(build_grid(contour, p, nodes_per_panel, grading_ratio))
    if any(b.size <= a.size for a, b in zip(out, out[1:])):
        raise ValueError("grid sequence must be strictly refining")
    return out


def band_probe_family(anchor_grid, ppw=PROBE_PPW):
    """Per-loop Fourier mode degrees resolved on the anchor grid.

    A mode exp(2 pi i k theta) on a loop is admitted when the coarsest panel
    of that loop still gives it ``ppw`` nodes per wavelength.  Returns
    {loop_index: kmax}.
    """
    fam = {}
    nloops = int(anchor_grid.loop_index.max()) + 1
    for li in range(nloops):
        sel = anchor_grid.loop_index == li
        # panel extents in loop parameter
        widths = {}
        for pid, th in zip(anchor_grid.panel_index[sel], anchor_grid.loop_theta[sel]):
            lo, hi = widths.get(pid, (th, th))
            widths[pid] = (min(lo, th), max(hi, th))
        maxw = max(hi - lo for lo, hi in widths.values())
        # interior Gauss nodes underestimate the true panel width slightly
        maxw = maxw * (anchor_grid.nodes_per_panel + 1) / max(anchor_grid.nodes_per_panel - 1, 1)
        fam[li] = max(1, int(anchor_grid.nodes_per_panel / (ppw * maxw)))
    return fam


def _probe_defect(mat, grid, family):
    """Max weighted-L2 amplification of ``mat`` over the probe family."""
    sw = np.sqrt(grid.arclength)
    worst = 0.0
    for li, kmax in family.items():
        sel = grid.loop_index == li
        th = grid.loop_theta[sel]
        for k in range(-kmax, kmax + 1):
            v = np.zeros(grid.size, dtype=complex)
            v[sel] = np.exp(2j * np.pi * k * th)
            worst = max(worst, float(np.linalg.norm(sw * (mat @ v)) /
                                     np.linalg.norm(sw * v)))
    return worst


def _sup_excluding_singular(values, grid, panels=2):
    excl = _nodes_near_singular_endpoints(grid, panels)
    keep = np.ones(grid.size, dtype=bool)
    keep[excl] = False
    if not keep.any():
        return float(values.max())
    return float(values[keep].max())


def check_involution(contour, test_fields, grid_params, nodes_per_panel=16,
                     grading_ratio=0.5, threshold=None):
    """sup |S(Sh) - h| per grid, maximized over the named test fields."""
    grids = _grids(contour, grid_params, nodes_per_panel, grading_ratio)
    errs, per_field = [], {}
    for g in grids:
        worst = 0.0
        for name, fn in test_fields.items():
            h = MatrixField.from_callable(g, fn)
            defect = cauchy_singular(cauchy_singular(h)) - h
            e = _sup_excluding_singular(np.abs(defect.values).max(axis=(1, 2)), g)
            per_field.setdefault(name, []).append(e)
            worst = max(worst, e)
        errs.append(worst)
    return ConvergenceReport("involution", [g.size for g in grids], errs,
                             threshold, {"per_field": per_field})


def check_projection_algebra(contour, grid_params, nodes_per_panel=16,
                             grading_ratio=0.5, threshold=None, ppw=PROBE_PPW):
    """Probe-family operator norms of the four projection-algebra defects.

    The probe family is anchored on the coarsest grid of the study; the
    complementarity defect C+ - C- - 1 is exactly zero by construction and
    reported in the details.
    """
    grids = _grids(contour, grid_params, nodes_per_panel, grading_ratio)
    family = band_probe_family(grids[0], ppw)
    errs, parts = [], {k: [] for k in ("plus_idem", "minus_idem", "pm", "mp")}
    comp = []
    for g in grids:
        cp, cm = cp_matrix(g), cm_matrix(g)
        defs = {
            "plus_idem": cp @ cp - cp,
            "minus_idem": cm @ cm + cm,
            "pm": cp @ cm,
            "mp": cm @ cp,
        }
        worst = 0.0
        for k, m in defs.items():
            e = _probe_defect(m, g, family)
            parts[k].append(e)
            worst = max(worst, e)
        comp.append(float(np.abs(cp - cm - np.eye(g.size)).max()))
        errs.append(worst)
    return ConvergenceReport(
        "projection-algebra", [g.size for g in grids], errs, threshold,
        {"per_defect": parts, "complementarity_exact": comp,
         "probe_family": dict(family), "probe_ppw": ppw},
    )


def check_rational_eigenfunctions(contour, max_degree, grid_params,
                                  nodes_per_panel=16, grading_ratio=0.5,
                                  threshold=None, oracle_targets=4):
    """S r+ = r+ and S r- = -r- for rationals, plus the cross-loop table.

    r+ runs over scaled polynomials up to ``max_degree``; r- over inverse
    powers of (z - c) with c the + loops' interior anchors.  Fields are
    normalized to unit sup so errors are relative.  The restriction of S to
    single loops is compared against an independent principal-value oracle
    (symmetric arclength exclusion, Richardson-extrapolated) at
    ``oracle_targets`` nodes per loop.
    """
    grids = _grids(contour, grid_params, nodes_per_panel, grading_ratio)
    anchors = _loop_anchors(contour, grids[0])
    scale = max(abs(z) for z in grids[0].nodes) * 1.05
    errs = []
    details = {"oracle": [], "cross_loop": []}
    for g in grids:
        worst = 0.0
        for k in range(0, max_degree + 1):
            h = MatrixField(g, (g.nodes / scale) ** k)
            ref = h.values
            sh = cauchy_singular(h)
            worst = max(worst, _sup_excluding_singular(
                np.abs(sh.values - ref).max(axis=(1, 2)), g))
        for c in anchors:
            dmin = np.abs(g.nodes - c).min()
            for k in range(1, max_degree + 1):
                vals = (dmin / (g.nodes - c)) ** k
                h = MatrixField(g, vals)
                sh = cauchy_singular(h)
                worst = max(worst, _sup_excluding_singular(
                    np.abs(sh.values + h.values).max(axis=(1, 2)), g))
        errs.append(worst)

    # cross-loop structure on the finest grid: chi_i-restricted fields
    g = grids[-1]
    nloops = int(g.loop_index.max()) + 1
    cross_max = 0.0
    if nloops > 1:
        S = s_matrix(g)
        for i in range(nloops):
            chi = (g.loop_index == i).astype(complex)
            rplus = (g.nodes / scale) ** 2
            got = S @ (chi * rplus)
            for kk in range(nloops):
                on_k = g.loop_index == kk
                want = rplus[on_k] if kk == i else 0.0
                cross_max = max(cross_max, float(np.abs(got[on_k] - want).max()))
            for j, c in enumerate(anchors):
                dmin = np.abs(g.nodes - c).min()
                rminus = (dmin / (g.nodes - c))
                got = S @ (chi * rminus)
                for kk in range(nloops):
                    on_k = g.loop_index == kk
                    if kk == i == j:
                        want = -rminus[on_k]
                    elif kk == i != j:
                        want = rminus[on_k]
                    elif kk != i and i == j:
                        want = -2 * rminus[on_k]
                    else:
                        want = 0.0
                    cross_max = max(cross_max, float(np.abs(got[on_k] - want).max()))
        details["cross_loop"] = cross_max

    # independent principal-value oracle on the finest grid, applied to the
    # loop-restricted fields that carry the cross-loop structure
    oracle_err = 0.0
    gv = grids[-1]
    S = s_matrix(gv)
    rng = np.random.default_rng(11)
    loop_arcs = [tuple(ai for ai, _ in loop.arc_ids) for loop in contour.plus_loops]
    for i, arcs_i in enumerate(loop_arcs):
        on_i = np.isin(gv.arc_index, arcs_i)

        def h_restricted(z, _on_arcs=arcs_i):
            return (z / scale) ** 2

        hvals = np.where(on_i, (gv.nodes / scale) ** 2, 0.0)
        got = S @ hvals
        # targets both on the carrying loop (singular) and off it (regular),
        # clear of arc seams so the symmetric exclusion fits
        ok = (gv.t > 0.25) & (gv.t < 0.75) & \
            ~np.isin(np.arange(gv.size), _nodes_near_singular_endpoints(gv, 2))
        for pool in (np.flatnonzero(ok & on_i), np.flatnonzero(ok & ~on_i)):
            if len(pool) == 0:
                continue
            picks = rng.choice(pool, size=min(max(1, oracle_targets // 2), len(pool)),
                               replace=False)
            for j in picks:
                want = pv_oracle(contour, h_restricted, gv.nodes[j],
                                 int(gv.arc_index[j]), float(gv.t[j]),
                                 support_arcs=arcs_i)
                oracle_err = max(oracle_err, abs(got[j] - want))
    details["oracle"] = oracle_err
    details["anchors"] = [complex(a) for a in anchors]
    return ConvergenceReport("rational-eigenfunctions",
                             [g.size for g in grids], errs, threshold, details)


def _loop_anchors(contour, grid):
    """One deep-interior point per + loop (pole locations for r- fields)."""
    anchors = []
    for loop in contour.plus_loops:
        cand = complex(loop.polyline.mean())
        try:
            reg, sign = locate(contour, cand)
            deep = reg == loop.region and \
                np.abs(loop.polyline - cand).min() > 0.2 * grid.local_node_spacing().max()
        except ContourError:
            deep = False
        if not deep:
            probes = region_probes(contour, grid, per_region=4, seed=5)
            zs = probes[loop.region]
            cand = complex(zs[np.abs(zs[:, None] - loop.polyline[None, :]).min(axis=1).argmax()])
        anchors.append(cand)
    return anchors


def pv_oracle(contour, h, z_target, arc_id, t_target, eps0=1e-2, levels=4,
              support_arcs=None):
    """Independent principal value of (1/pi i) int h(z')/(z' - z) dz'.

    Dense composite Gauss panels over the parameter with a symmetric
    arclength exclusion around the target, Richardson-extrapolated in the
    exclusion radius (the symmetric-exclusion error is a power series in
    the radius).  Never touches the pole-subtraction Nystrom machinery.
    ``support_arcs`` restricts the integrand to a subset of arcs (for
    characteristic-function fields); arcs outside contribute nothing.
    """
    arcs = range(len(contour.arcs)) if support_arcs is None else support_arcs
    arc = contour.arcs[arc_id]
    singular = arc_id in set(arcs)
    if not singular:
        total = 0.0 + 0.0j
        for i in arcs:
            total += _dense_quad(contour.arcs[i], 0.0, 1.0,
                                 lambda zp: h(zp) / (zp - z_target))
        return total / (np.pi * 1j)
    vals = []
    epss = [eps0 / 2**k for k in range(levels)]
    for eps in epss:
        ta = _arclength_step(arc, t_target, -eps)
        tb = _arclength_step(arc, t_target, +eps)
        total = 0.0 + 0.0j
        for i in arcs:
            a = contour.arcs[i]
            pieces = [(0.0, ta), (tb, 1.0)] if i == arc_id else [(0.0, 1.0)]
            for lo, hi in pieces:
                if hi - lo < 1e-14:
                    continue
                total += _dense_quad(a, lo, hi, lambda zp: h(zp) / (zp - z_target),
                                     refine_toward=(t_target if i == arc_id else None))
        vals.append(total / (np.pi * 1j))
    # Richardson tableau for error = c1 eps + c2 eps^2 + ... with halving
    T = list(vals)
    for k in range(1, levels):
        T = [(2**k * b - a) / (2**k - 1) for a, b in zip(T, T[1:])]
    return T[0]


def _arclength_step(arc, t0, signed_eps):
    """Parameter at signed arclength offset from t0 (bisection on chords)."""
    target = abs(signed_eps)
    lo, hi = (t0, 1.0) if signed_eps > 0 else (0.0, t0)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        s = _chord_length(arc, min(t0, mid), max(t0, mid))
        if signed_eps > 0:
            lo, hi = (lo, mid) if s > target else (mid, hi)
        else:
            lo, hi = (mid, hi) if s > target else (lo, mid)
    out = 0.5 * (lo + hi)
    if _chord_length(arc, min(t0, out), max(t0, out)) < 0.5 * target:
        raise ContourError("oracle exclusion radius exceeds the arc")
    return out


def _chord_length(arc, a, b, n=256):
    t = np.linspace(a, b, n)
    return float(np.abs(np.diff(arc.point(t))).sum())


def _dense_quad(arc, lo, hi, fn, refine_toward=None, base_panels=24, nodes=20):
    x, w = np.polynomial.legendre.leggauss(nodes)
    if refine_toward is None:
        breaks = np.linspace(lo, hi, base_panels + 1)
    else:
        # geometric refinement toward the excluded endpoint nearest the target;
        # both interval endpoints must be breakpoints (no uncovered sliver)
        if abs(refine_toward - hi) < abs(refine_toward - lo):
            b = hi - (hi - lo) * 0.5 ** np.arange(0, base_panels)
        else:
            b = lo + (hi - lo) * 0.5 ** np.arange(0, base_panels)
        breaks = np.unique(np.clip(np.concatenate([[lo, hi], b]), lo, hi))
    total = 0.0 + 0.0j
    for a, b in zip(breaks[:-1], breaks[1:]):
        t = 0.5 * (a + b) + 0.5 * (b - a) * x
        wt = 0.5 * (b - a) * w
        total += np.sum(fn(arc.point(t)) * arc.derivative(t) * wt)
    return total


def check_reproduction(contour, analytic_samples, grid_params,
                       nodes_per_panel=16, grading_ratio=0.5, threshold=None,
                       probes_per_region=8):
    """Cauchy reproduction: C f+ = f inside / 0 outside, C f- mirrored.

    ``analytic_samples``: {name: (callable, side)} with side "+" for
    functions analytic in the + regions and "-" for functions analytic in
    the - regions vanishing at infinity.
    """
    grids = _grids(contour, grid_params, nodes_per_panel, grading_ratio)
    errs, per_field = [], {}
    for g in grids:
        probes = region_probes(contour, g, probes_per_region)
        worst = 0.0
        for name, (fn, side) in analytic_samples.items():
            h = MatrixField.from_callable(g, fn)
            e = 0.0
            for region, zs in probes.items():
                sign = contour.region_signs[region]
                vals = cauchy_offcontour(h, zs)[:, 0, 0]
                if side == "+":
                    want = fn(zs) if sign == 1 else np.zeros_like(zs)
                else:
                    want = -fn(zs) if sign == -1 else np.zeros_like(zs)
                e = max(e, float(np.abs(vals - want).max()))
            per_field.setdefault(name, []).append(e)
            worst = max(worst, e)
        errs.append(worst)
    return ConvergenceReport("cauchy-reproduction", [g.size for g in grids],
                             errs, threshold, {"per_field": per_field})


def check_mobius_covariance(contour, z0, test_fields, grid_params,
                            nodes_per_panel=16, grading_ratio=0.5, threshold=None):
    """sup |S h - pull(S_image(push h))| per grid, plus the norm isometry."""
    errs, iso = [], []
    sizes = []
    for p in grid_params:
        pp = p if isinstance(p, tuple) else (p, nodes_per_panel, grading_ratio)
        chart = MobiusChart.build(contour, z0, *pp)
        g = chart.source_grid
        sizes.append(g.size)
        worst, iso_w = 0.0, 0.0
        for name, fn in test_fields.items():
            h = MatrixField.from_callable(g, fn)
            direct = cauchy_singular(h)
            via = chart.singular(h)
            worst = max(worst, float(np.abs(direct.values - via.values).max()))
            a = weighted_norm(h, NormSpec(2.0, chart.z0))
            b = chart.weighted_norm(h, 2.0)
            iso_w = max(iso_w, abs(a - b) / max(a, 1e-300))
        errs.append(worst)
        iso.append(iso_w)
    return ConvergenceReport("mobius-covariance", sizes, errs, threshold,
                             {"norm_isometry_rel": iso, "z0": complex(z0)})


def check_det_and_uniqueness(problem, grid_params, nodes_per_panel=16,
                             grading_ratio=0.5, threshold=None,
                             probes_per_region=8):
    """|det m - 1| at probes and the sigma_min trend, for det-1 jumps."""
    grids = _grids(problem.contour, grid_params, nodes_per_panel, grading_ratio)
    errs, ratios = [], []
    for g in grids:
        sol = solve(problem, g)
        d = diagnostics(sol, per_region_probes=probes_per_region)
        if not d["det_v_is_one"]:
            raise ValueError("check_det_and_uniqueness needs det v = 1 at the nodes")
        errs.append(d["det_deviation"])
        ratios.append(d["sigma_min_ratio"])
    return ConvergenceReport("det-invariance", [g.size for g in grids], errs,
                             threshold, {"sigma_min_ratio": ratios})


# ---------------------------------------------------------------------------
# Contour deformation


@dataclass
class DeformationSpec:
    """Base problem (Gamma, v) plus an auxiliary closed curve and factor.

    ``aux_arcs`` form a Jordan curve lying inside one region of the base
    contour (it must not cross it); ``m0`` is a single analytic expression
    for the deformation factor on the bounded side neighborhood, with m0 and
    its inverse bounded there.  The induced contour is Gamma together with
    the auxiliary curve (oriented so signs alternate), and the deformed jump
    follows the four-branch rule: m0- v m0+^-1 on Gamma inside the bounded
    side, m0+^-1 / m0- on the auxiliary pieces bordering the +/- side, and
    v outside.
    """

    base_problem: RHProblem
    aux_arcs: list
    m0: object
    name: str = "deformation"

    def build(self):
        base = self.base_problem
        contour = base.contour
        n = base.n
        aux = [a if hasattr(a, "kind") else a for a in self.aux_arcs]
        aux_poly = np.concatenate([a.samples(512) for a in aux])
        # the auxiliary curve must sit inside a single region of the base contour
        regions = set()
        for a in aux:
            regions.add(locate(contour, complex(a.point(0.37)))[0])
            regions.add(locate(contour, complex(a.point(0.71)))[0])
        if len(regions) != 1:
            raise ContourError("auxiliary curve must lie inside one region of the base contour")
        host = regions.pop()
        s_host = contour.region_signs[host]
        inner_id, outer_id = host + "@aux-inside", host

        # orientation: the left of the auxiliary curve must carry sign +
        area = _signed_area(aux_poly)
        inner_sign = -s_host
        want_ccw = inner_sign == 1  # inner on the left <=> ccw
        if (area > 0) != want_ccw:
            aux = [a.reversed() for a in aux][::-1]
            aux_poly = np.concatenate([a.samples(512) for a in aux])

        def wind_aux(z):
            return winding_number(aux_poly, z)

        arcs = list(contour.arcs) + list(aux)
        rmap = []
        in_bplus = []
        for i, (l, r) in enumerate(contour.region_map):
            zm = complex(contour.arcs[i].point(0.5))
            inside = wind_aux(zm) != 0
            in_bplus.append(inside)
            sub = lambda reg: (inner_id if (reg == host and inside) else reg)
            rmap.append((sub(l), sub(r)))
        gamma_plus = []
        for a in aux:
            if inner_sign == 1:
                rmap.append((inner_id, outer_id))
                gamma_plus.append(True)
            else:
                rmap.append((outer_id, inner_id))
                gamma_plus.append(False)
        signs = dict(contour.region_signs)
        signs[inner_id] = inner_sign
        # the host region keeps its sign on the outer part; if every base arc
        # moved inside, the outer part survives only if something borders it
        composed = compose_contour(arcs, rmap, signs, contour.z0)

        m0 = self.m0
        m0c = (lambda z: np.asarray(m0(z), dtype=complex)) if callable(m0) else (lambda z: np.eye(n))
        base_v = base.v

        def v_base(z):
            val = np.asarray(base_v(z), dtype=complex) if callable(base_v) else np.asarray(base_v)
            return val if val.ndim == 2 else val.reshape(1, 1) if n == 1 else val

        table = {}
        nbase = len(contour.arcs)
        for i in range(nbase):
            if in_bplus[i]:
                table[i] = _conjugated_jump(v_base, m0c, n)
            else:
                table[i] = _plain_jump(v_base, n)
        for k, is_plus in enumerate(gamma_plus):
            table[nbase + k] = _aux_jump(m0c, n, is_plus)
        problem = RHProblem(composed, table, n=n, mode=base.mode)
        return composed, problem, {"wind_aux": wind_aux, "host": host,
                                   "inner_sign": inner_sign,
                                   "gamma_plus": gamma_plus,
                                   "n_base_arcs": nbase,
                                   "base_in_bplus": in_bplus}

    def validate_factor(self, per_region=24, seed=3):
        """m0 and its inverse stay bounded on the bounded-side neighborhood."""
        contour = self.base_problem.contour
        n = self.base_problem.n
        aux_poly = np.concatenate([a.samples(512) for a in self.aux_arcs])
        x0, x1 = aux_poly.real.min(), aux_poly.real.max()
        y0, y1 = aux_poly.imag.min(), aux_poly.imag.max()
        rng = np.random.default_rng(seed)
        worst = 0.0
        m0 = self.m0
        for _ in range(per_region * 8):
            z = complex(rng.uniform(x0, x1), rng.uniform(y0, y1))
            if winding_number(aux_poly, z) == 0:
                continue
            if np.abs(aux_poly - z).min() < 1e-3 * max(x1 - x0, y1 - y0):
                continue
            val = np.asarray(m0(z), dtype=complex)
            val = val.reshape(n, n) if val.size == n * n else val * np.eye(n)
            worst = max(worst, float(np.abs(val).max()),
                        float(np.abs(np.linalg.inv(val)).max()))
        if not np.isfinite(worst) or worst > 1e8:
            raise ContourError("deformation factor or its inverse blows up on the bounded side")
        return worst


def _plain_jump(v_base, n):
    def fn(z):
        val = np.asarray(v_base(z), dtype=complex)
        return val.reshape(n, n) if val.size == n * n else val * np.eye(n)
    return fn


def _conjugated_jump(v_base, m0c, n):
    def fn(z):
        v = np.asarray(v_base(z), dtype=complex)
        v = v.reshape(n, n) if v.size == n * n else v * np.eye(n)
        m = np.asarray(m0c(z), dtype=complex)
        m = m.reshape(n, n) if m.size == n * n else m * np.eye(n)
        return m @ v @ np.linalg.inv(m)
    return fn


def _aux_jump(m0c, n, on_plus_side):
    def fn(z):
        m = np.asarray(m0c(z), dtype=complex)
        m = m.reshape(n, n) if m.size == n * n else m * np.eye(n)
        return np.linalg.inv(m) if on_plus_side else m
    return fn


def check_deformation(spec, grid_params, nodes_per_panel=16, grading_ratio=0.5,
                      threshold=None, probes_per_region=8):
    """Solve (Gamma, v) and the deformed problem; compare the solutions.

    Inside the auxiliary curve the deformed solution must match m m0^-1,
    outside it must match m, at off-contour probe points.
    """
    spec.validate_factor()
    composed, deformed_problem, info = spec.build()
    base = spec.base_problem
    n = base.n
    wind_aux = info["wind_aux"]
    m0 = spec.m0
    errs, sizes = [], []
    for p in grid_params:
        pp = p if isinstance(p, tuple) else (p, nodes_per_panel, grading_ratio)
        g_base = build_grid(base.contour, *pp)
        g_def = build_grid(composed, *pp)
        sol_base = solve(base, g_base)
        sol_def = solve(deformed_problem, g_def)
        probes = region_probes(composed, g_def, probes_per_region)
        worst = 0.0
        for zs in probes.values():
            m_def = evaluate_solution(sol_def, zs)
            m_b = evaluate_solution(sol_base, zs)
            for z, md, mb in zip(zs, m_def, m_b):
                if wind_aux(z) != 0:
                    m0v = np.asarray(m0(z), dtype=complex)
                    m0v = m0v.reshape(n, n) if m0v.size == n * n else m0v * np.eye(n)
                    want = mb @ np.linalg.inv(m0v)
                else:
                    want = mb
                worst = max(worst, float(np.abs(md - want).max()))
        errs.append(worst)
        sizes.append(g_def.size)
    return ConvergenceReport(f"deformation-{spec.name}", sizes, errs, threshold,
                             {"host_region": info["host"]})
