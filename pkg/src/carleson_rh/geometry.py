"""Composed jump contours in the plane: arcs, orientation, regions, and
sample-resolution validation, plus arclength-in-disk estimators and Mobius
transport of whole contours.

Contours are unions of oriented arcs.  Every arc carries a (left, right)
region-id pair; left regions have sign ``+`` and right regions sign ``-``,
so the contour is the positively oriented boundary of the union of the
``+`` regions.  Geometry predicates (crossings, winding numbers, region
membership) are evaluated at sample resolution, never symbolically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

ARC_KINDS = ("line-segment", "circular-arc", "log-spiral-segment", "sampled-interpolant")
ENDPOINT_TAGS = ("smooth", "corner", "cusp", "spiral-accumulation", "at-infinity")

#: samples per arc for loop polylines (winding numbers, region tests)
LOOP_SAMPLES = 512
#: samples per arc for injectivity / pairwise-crossing checks
CROSSING_SAMPLES = 1024


class ContourError(ValueError):
    """Malformed arc parameters or a contour violating the jump-contour axioms."""


class AmbiguousLocationError(ContourError):
    """Query point is within sample tolerance of the contour."""


class ConditioningWarning(UserWarning):
    """Estimate is stressed (base point close to the contour)."""


@dataclass(frozen=True)
class Arc:
    """One oriented parametrized curve piece, t in [0, 1].

    ``start_tag``/``end_tag`` record endpoint regularity; ``at-infinity``
    endpoints return None from :meth:`start_point`/:meth:`end_point` and the
    parametrization blows up as t approaches them.
    """

    kind: str
    params: dict
    start_tag: str = "smooth"
    end_tag: str = "smooth"
    _spline: object = field(default=None, repr=False, compare=False)

    def point(self, t):
        """Evaluate the parametrization at t (scalar or array in [0, 1])."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "line-segment":
            a, b, d = p.get("start"), p.get("end"), p.get("direction")
            if a is not None and b is not None:
                return a + t * (b - a)
            if a is not None:
                return a + d * t / (1.0 - t)
            if b is not None:
                return b - d * (1.0 - t) / t
            return p["point"] + d * np.tan(np.pi * (t - 0.5))
        if self.kind == "circular-arc":
            th = p["theta0"] + t * (p["theta1"] - p["theta0"])
            return p["center"] + p["radius"] * np.exp(1j * th)
        if self.kind == "log-spiral-segment":
            r = np.asarray(p["r0"] + t * (p["r1"] - p["r0"]))
            safe = np.where(r > 0, r, 1.0)
            return p["base"] + p["coeff"] * r * np.exp(-1j * p["delta"] * np.log(safe))
        if self.kind == "sampled-interpolant":
            return self._spline(t)
        raise ContourError(f"unknown arc kind {self.kind!r}")

    def derivative(self, t):
        """d(point)/dt at t."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "line-segment":
            a, b, d = p.get("start"), p.get("end"), p.get("direction")
            if a is not None and b is not None:
                out = np.empty(t.shape, dtype=complex)
                out[...] = b - a
                return out if t.shape else complex(b - a)
            if a is not None:
                return d / (1.0 - t) ** 2
            if b is not None:
                return d / t**2
            return d * np.pi / np.cos(np.pi * (t - 0.5)) ** 2
        if self.kind == "circular-arc":
            dth = p["theta1"] - p["theta0"]
            th = p["theta0"] + t * dth
            return p["radius"] * 1j * dth * np.exp(1j * th)
        if self.kind == "log-spiral-segment":
            r = np.asarray(p["r0"] + t * (p["r1"] - p["r0"]))
            dr = p["r1"] - p["r0"]
            safe = np.where(r > 0, r, 1.0)
            return p["coeff"] * dr * (1.0 - 1j * p["delta"]) * np.exp(-1j * p["delta"] * np.log(safe))
        if self.kind == "sampled-interpolant":
            return self._spline(t, 1)
        raise ContourError(f"unknown arc kind {self.kind!r}")

    def start_point(self):
        return None if self.start_tag == "at-infinity" else complex(self.point(0.0))

    def end_point(self):
        return None if self.end_tag == "at-infinity" else complex(self.point(1.0))

    @property
    def unbounded(self):
        return "at-infinity" in (self.start_tag, self.end_tag)

    def reversed(self):
        """Same point set, opposite traversal."""
        p = dict(self.params)
        if self.kind == "line-segment":
            p["start"], p["end"] = p.get("end"), p.get("start")
            if p.get("direction") is not None:
                p["direction"] = -p["direction"]
        elif self.kind == "circular-arc":
            p["theta0"], p["theta1"] = p["theta1"], p["theta0"]
        elif self.kind == "log-spiral-segment":
            p["r0"], p["r1"] = p["r1"], p["r0"]
        else:
            p["points"] = np.asarray(p["points"])[::-1].copy()
        out = build_arc(self.kind, **p)
        return replace(out, start_tag=self.end_tag, end_tag=self.start_tag)

    def samples(self, n=LOOP_SAMPLES):
        """Point samples along the arc (endpoints clipped for unbounded arcs).

        Spiral arcs are oversampled so the polyline tracks at least the outer
        windings; the infinitely many turns at an accumulation point stay
        below sample resolution by construction.
        """
        if self.kind == "log-spiral-segment":
            n = max(n, 4096)
        eps = 1.0 / (4 * n)
        lo = eps if self.start_tag == "at-infinity" else 0.0
        hi = 1.0 - eps if self.end_tag == "at-infinity" else 1.0
        return self.point(np.linspace(lo, hi, n))


def build_arc(kind, *, start_tag=None, end_tag=None, **params):
    """Construct and sanity-check an :class:`Arc` of the given kind.

    Regularity tags are auto-set (spiral endpoint at radius 0 becomes
    ``spiral-accumulation``, unbounded ends ``at-infinity``); explicit
    ``start_tag``/``end_tag`` override the defaults.
    """
    if kind not in ARC_KINDS:
        raise ContourError(f"unknown arc kind {kind!r}")
    s_tag = e_tag = "smooth"
    spline = None
    if kind == "line-segment":
        a = params.get("start")
        b = params.get("end")
        a = None if a is None else complex(a)
        b = None if b is None else complex(b)
        d = params.get("direction")
        if a is not None and b is not None:
            if abs(b - a) == 0:
                raise ContourError("zero-length segment")
            params = {"start": a, "end": b}
        else:
            if d is None or abs(complex(d)) == 0:
                raise ContourError("unbounded segment needs a nonzero direction")
            d = complex(d) / abs(complex(d))
            if a is None and b is None:
                pt = complex(params.get("point", 0.0))
                params = {"start": None, "end": None, "point": pt, "direction": d}
                s_tag = e_tag = "at-infinity"
            else:
                params = {"start": a, "end": b, "direction": d}
                if a is None:
                    s_tag = "at-infinity"
                if b is None:
                    e_tag = "at-infinity"
    elif kind == "circular-arc":
        c = complex(params["center"])
        r = float(params["radius"])
        th0, th1 = float(params["theta0"]), float(params["theta1"])
        if r <= 0:
            raise ContourError("circle radius must be positive")
        if th0 == th1:
            raise ContourError("zero-length circular arc")
        if abs(th1 - th0) > 2 * np.pi + 1e-12:
            raise ContourError("circular arc exceeds a full turn")
        params = {"center": c, "radius": r, "theta0": th0, "theta1": th1}
    elif kind == "log-spiral-segment":
        r0, r1 = float(params["r0"]), float(params["r1"])
        if r0 < 0 or r1 < 0 or r0 == r1:
            raise ContourError("spiral radial range must be nonnegative and nondegenerate")
        params = {
            "base": complex(params.get("base", 0.0)),
            "coeff": complex(params.get("coeff", 1.0)),
            "delta": float(params["delta"]),
            "r0": r0,
            "r1": r1,
        }
        if params["coeff"] == 0:
            raise ContourError("spiral coefficient must be nonzero")
        if r0 == 0.0:
            s_tag = "spiral-accumulation"
        if r1 == 0.0:
            e_tag = "spiral-accumulation"
    elif kind == "sampled-interpolant":
        pts = np.asarray(params["points"], dtype=complex)
        if pts.ndim != 1 or len(pts) < 4:
            raise ContourError("sampled arc needs at least 4 points")
        if np.abs(np.diff(pts)).min() == 0:
            raise ContourError("sampled arc has coincident consecutive points")
        params = {"points": pts}
        chord = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(pts)))])
        spline = CubicSpline(chord / chord[-1], pts)
    arc = Arc(kind, params, start_tag or s_tag, end_tag or e_tag, _spline=spline)
    _check_arc(arc)
    return arc


def _check_arc(arc):
    """Open-interior injectivity and nondegenerate speed at sample resolution.

    Endpoints may coincide (an arc may close a loop by itself)."""
    if arc.unbounded:
        return
    t = np.linspace(0.0, 1.0, 259)[1:-1]
    pts = arc.point(t)
    sp = np.abs(arc.derivative(t))
    if not np.all(np.isfinite(sp)) or sp.min() == 0:
        raise ContourError("arc speed vanishes or blows up on the open interior")
    if arc.kind == "log-spiral-segment":
        return  # windings fall below any fixed sample resolution near r = 0
    d = np.abs(pts[:, None] - pts[None, :])
    sep = np.abs(np.arange(len(t))[:, None] - np.arange(len(t))[None, :])
    scale = np.abs(pts[1:] - pts[:-1]).sum()
    if ((d < 1e-9 * max(scale, 1e-300)) & (sep > 2)).any():
        raise ContourError("arc self-intersects at sample resolution")


# ---------------------------------------------------------------------------
# Mobius maps


@dataclass(frozen=True)
class MobiusMap:
    """Linear fractional map z -> (a z + b) / (c z + d), ad - bc != 0."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(complex(self.a) * complex(self.d) - complex(self.b) * complex(self.c)) == 0:
            raise ContourError("degenerate Mobius map (ad - bc = 0)")

    def __call__(self, z):
        if self.c == 0:
            return (self.a * z + self.b) / self.d
        with np.errstate(divide="ignore", invalid="ignore"):
            return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        det = self.a * self.d - self.b * self.c
        return det / (self.c * z + self.d) ** 2 if self.c != 0 else det / self.d**2 + 0 * z

    def inverse(self):
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    @property
    def pole(self):
        """Preimage of infinity (None for affine maps)."""
        return None if self.c == 0 else -self.d / self.c

    def image_of_infinity(self):
        return None if self.c == 0 else self.a / self.c


def chart_map(z0):
    """The standard bounded chart z -> 1/(z - z0)."""
    return MobiusMap(0.0, 1.0, 1.0, -complex(z0))


# ---------------------------------------------------------------------------
# Jump contours


@dataclass(frozen=True)
class Loop:
    """One closed boundary cycle of a + region, positively oriented."""

    region: str
    arc_ids: tuple          # ordered (arc index, reversed flag)
    polyline: np.ndarray
    orientation: int        # +1 ccw in the plane, -1 cw; 0 if through infinity
    through_infinity: bool


@dataclass(frozen=True)
class JumpContour:
    """Oriented composed contour with region assignment.

    ``region_map[i] = (left_id, right_id)`` for arc i; ``region_signs`` maps
    region id to +1/-1.  ``z0`` is the base point used for weighted norms
    and automatic bounded charts; it must stay clear of the contour.
    """

    arcs: tuple
    region_map: tuple
    region_signs: dict
    z0: complex
    valid: bool = True
    plus_loops: tuple = field(default=(), compare=False, repr=False)
    region_info: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def contains_infinity(self):
        return any(a.unbounded for a in self.arcs)

    def arc_samples(self, n=LOOP_SAMPLES):
        return [a.samples(n) for a in self.arcs]

    def all_samples(self, n=LOOP_SAMPLES):
        return np.concatenate(self.arc_samples(n))

    def diameter(self):
        pts = self.all_samples(256)
        pts = pts[np.isfinite(pts)]
        w = pts.real.max() - pts.real.min()
        h = pts.imag.max() - pts.imag.min()
        return float(max(np.hypot(w, h), 1e-300))

    def bounding_box(self):
        pts = self.all_samples(256)
        pts = pts[np.isfinite(pts)]
        return (pts.real.min(), pts.real.max(), pts.imag.min(), pts.imag.max())

    def distance_to(self, z):
        pts = self.all_samples()
        z = np.asarray(z, dtype=complex)
        if z.ndim == 0:
            return float(np.abs(pts - complex(z)).min())
        return np.abs(z[..., None] - pts).min(axis=-1)

    def regions(self):
        return dict(self.region_signs)


def winding_number(polyline, z):
    """Winding of a closed polyline about z (scalar or array)."""
    z = np.asarray(z)
    scalar = z.ndim == 0
    zz = np.atleast_1d(z).astype(complex)
    v = polyline[None, :] - zz[:, None]
    ang = np.angle(np.roll(v, -1, axis=1) / v).sum(axis=1) / (2 * np.pi)
    out = np.rint(ang).astype(int)
    return int(out[0]) if scalar else out


def _signed_area(polyline):
    p = polyline
    q = np.roll(p, -1)
    return 0.5 * float(np.sum(p.real * q.imag - p.imag * q.real))


def _endpoint_key(pt, scale):
    if pt is None:
        return "inf"
    return (round(pt.real / (1e-9 * scale)), round(pt.imag / (1e-9 * scale)))


def _chain_cycles(sides, scale):
    """Chain oriented (start, end, payload) sides into closed cycles."""
    remaining = list(range(len(sides)))
    cycles = []
    while remaining:
        cur = [remaining.pop(0)]
        while True:
            cur_end = _endpoint_key(sides[cur[-1]][1], scale)
            if cur_end == _endpoint_key(sides[cur[0]][0], scale):
                break
            for j in remaining:
                if _endpoint_key(sides[j][0], scale) == cur_end:
                    cur.append(j)
                    remaining.remove(j)
                    break
            else:
                raise ContourError("region boundary does not chain into closed loops")
        cycles.append([sides[j][2] for j in cur])
    return cycles


def _region_sides(contour, region):
    """Oriented boundary sides of a region (region kept on the left)."""
    sign = contour.region_signs[region]
    sides = []
    for i, (left, right) in enumerate(contour.region_map):
        a = contour.arcs[i]
        if sign == 1 and left == region:
            sides.append((a.start_point(), a.end_point(), (i, False)))
        elif sign == -1 and right == region:
            sides.append((a.end_point(), a.start_point(), (i, True)))
    return sides


def _cycle_polyline(contour, cycle, n=LOOP_SAMPLES):
    pieces = []
    for i, rev in cycle:
        s = contour.arcs[i].samples(n)
        pieces.append(s[::-1] if rev else s)
    return np.concatenate(pieces)


def compose_contour(arcs, region_map, region_signs, z0, validate=True):
    """Assemble and validate a :class:`JumpContour`.

    Validation enforces, at sample resolution: every arc keeps a + region on
    its left and a - region on its right; region boundaries chain into closed
    loops with orientation consistent with the signs; + regions are simply
    connected (single boundary loop); arcs meet at endpoints only; and z0
    keeps its distance.  Unbounded contours are validated on the bounded
    chart image.  Arc junction endpoints are auto-tagged corner/cusp from
    the tangent mismatch.
    """
    arcs = tuple(arcs)
    region_map = tuple((str(l), str(r)) for l, r in region_map)
    signs = {}
    for k, v in region_signs.items():
        if v in (1, "+", "+1"):
            signs[str(k)] = 1
        elif v in (-1, "-", "-1"):
            signs[str(k)] = -1
        else:
            raise ContourError(f"region sign must be + or -, got {v!r}")
    if not arcs:
        raise ContourError("contour needs at least one arc")
    if len(region_map) != len(arcs):
        raise ContourError("region_map length must match arcs")
    if 1 not in signs.values():
        raise ContourError("contour has no + region")
    if -1 not in signs.values():
        raise ContourError("contour has no - region")
    for left, right in region_map:
        if left not in signs or right not in signs:
            raise ContourError("region_map references unknown region id")
        if signs[left] != 1:
            raise ContourError(f"left region {left!r} of an arc must have sign +")
        if signs[right] != -1:
            raise ContourError(f"right region {right!r} of an arc must have sign -")
    z0 = complex(z0)

    arcs = _auto_tag_junctions(arcs)
    contour = JumpContour(arcs, region_map, signs, z0, valid=False)
    info = _region_info(contour)
    loops = _plus_loops(contour, info)
    contour = replace(contour, plus_loops=loops, region_info=info)
    if validate:
        _validate(contour)
        contour = replace(contour, valid=True)
    return contour


def _auto_tag_junctions(arcs):
    """Tag arc junction endpoints corner/cusp from the tangent mismatch."""
    finite = [p for a in arcs for p in (a.start_point(), a.end_point()) if p is not None]
    scale = max([1.0] + [abs(p) for p in finite])
    entries = []
    for i, a in enumerate(arcs):
        for is_end in (False, True):
            pt = a.end_point() if is_end else a.start_point()
            tag = a.end_tag if is_end else a.start_tag
            if pt is None or tag != "smooth":
                continue
            d = complex(a.derivative(1.0 if is_end else 0.0))
            if d == 0 or not np.isfinite(d):
                continue
            entries.append((i, is_end, pt, d / abs(d)))
    by_pt = {}
    for e in entries:
        by_pt.setdefault(_endpoint_key(e[2], scale), []).append(e)
    out = list(arcs)
    for group in by_pt.values():
        if len(group) != 2:
            continue
        (i1, e1, _, t1), (i2, e2, _, t2) = group
        if e1 == e2:
            continue  # two starts or two ends meeting: orientation break, not a junction
        ang = abs(np.angle(t2 / t1))
        if ang < 1e-9:
            continue
        tag = "cusp" if abs(ang - np.pi) < 1e-9 else "corner"
        for i, is_end in ((i1, e1), (i2, e2)):
            a = out[i]
            out[i] = replace(a, end_tag=tag) if is_end else replace(a, start_tag=tag)
    return tuple(out)


def _region_info(contour):
    """Boundary cycles, winding polyline, and a representative point per region."""
    scale = max(contour.diameter(), 1.0)
    pts = contour.all_samples(256)
    pts = pts[np.isfinite(pts)]
    info = {}
    for region in contour.region_signs:
        sides = _region_sides(contour, region)
        if not sides:
            raise ContourError(f"region {region!r} borders no arcs")
        cycles = _chain_cycles(sides, scale)
        poly = np.concatenate([_cycle_polyline(contour, c) for c in cycles])
        rep = None
        for i, rev in cycles[0]:
            a = contour.arcs[i]
            zm = complex(a.point(0.5))
            dm = complex(a.derivative(0.5))
            if not (np.isfinite(zm) and np.isfinite(dm)) or dm == 0:
                continue
            normal = 1j * dm / abs(dm)  # left normal of the arc
            is_left = contour.region_map[i][0] == region
            off = normal if is_left else -normal
            for eps in (1e-3, 1e-2, 3e-2):
                cand = zm + off * eps * scale
                if np.abs(pts - cand).min() > 0.5 * eps * scale:
                    rep = cand
                    break
            if rep is not None:
                break
        info[region] = {"cycles": cycles, "polyline": poly, "rep": rep}
    return info


def _plus_loops(contour, info):
    loops = []
    for region, sign in contour.region_signs.items():
        if sign != 1:
            continue
        for cycle in info[region]["cycles"]:
            poly = _cycle_polyline(contour, cycle)
            through_inf = any(contour.arcs[i].unbounded for i, _ in cycle)
            orientation = 0 if through_inf else (1 if _signed_area(poly) > 0 else -1)
            loops.append(Loop(region, tuple(cycle), poly, orientation, through_inf))
    return tuple(loops)


def _validate(contour):
    scale = max(contour.diameter(), 1.0)
    if contour.contains_infinity:
        image = mobius_apply(contour, chart_map(contour.z0), validate=False)
        if image.contains_infinity:
            raise ContourError("chart image still unbounded; z0 may lie on the contour")
        _validate(image)
        return
    for region, sign in contour.region_signs.items():
        info = contour.region_info[region]
        # regions may have several boundary cycles (two disjoint circles
        # share an exterior; deformation contours make annular regions);
        # the principal-value bookkeeping is cycle-local and unaffected
        rep = info["rep"]
        if rep is None:
            raise ContourError(f"could not place a representative point in region {region!r}")
        w = winding_number(info["polyline"], rep)
        if w not in (0, 1):
            raise ContourError(
                f"region {region!r} boundary winds {w} times about its own "
                "representative point; orientation is inconsistent with the signs"
            )
        info["bounded"] = w == 1
    _check_crossings(contour, scale)
    if np.abs(contour.all_samples() - contour.z0).min() < 1e-6 * scale:
        raise ContourError("base point z0 lies on the contour at sample resolution")


def _check_crossings(contour, scale):
    tol = 1e-7 * scale
    samples = [a.samples(CROSSING_SAMPLES) for a in contour.arcs]
    ends = [p for a in contour.arcs for p in (a.start_point(), a.end_point()) if p is not None]
    ends = np.asarray(ends, dtype=complex) if ends else np.zeros(0, dtype=complex)
    for i in range(len(contour.arcs)):
        for j in range(i + 1, len(contour.arcs)):
            pi, pj = samples[i], samples[j]
            if (max(pi.real.min(), pj.real.min()) - min(pi.real.max(), pj.real.max()) > tol
                    or max(pi.imag.min(), pj.imag.min()) - min(pi.imag.max(), pj.imag.max()) > tol):
                continue
            d = np.abs(pi[:, None] - pj[None, :])
            close = np.argwhere(d < tol)
            if close.size == 0:
                continue
            pts = (pi[close[:, 0]] + pj[close[:, 1]]) / 2.0
            if len(ends) == 0 or np.abs(pts[:, None] - ends[None, :]).min(axis=1).max() > 100 * tol:
                raise ContourError(
                    f"arcs {i} and {j} come within tolerance away from shared endpoints"
                )


# ---------------------------------------------------------------------------
# Operations


def locate(contour, z):
    """Region id and sign containing z, by winding numbers of region boundaries."""
    z = complex(z)
    if contour.contains_infinity:
        psi = chart_map(contour.z0)
        image = mobius_apply(contour, psi, validate=False)
        return locate(image, psi(z))
    scale = max(contour.diameter(), 1.0)
    if np.abs(contour.all_samples() - z).min() < 1e-7 * scale:
        raise AmbiguousLocationError(f"point {z} is within sample tolerance of the contour")
    hits = []
    for region in contour.region_signs:
        info = contour.region_info[region]
        bounded = winding_number(info["polyline"], info["rep"]) == 1
        if winding_number(info["polyline"], z) == (1 if bounded else 0):
            hits.append(region)
    if len(hits) == 1:
        return hits[0], contour.region_signs[hits[0]]
    if not hits:
        raise AmbiguousLocationError(f"no region claims the point {z}")
    # nested regions can both claim a point; keep the one whose other
    # claimers see z and the candidate's representative identically
    for r in hits:
        rep = contour.region_info[r]["rep"]
        if all(winding_number(contour.region_info[o]["polyline"], rep) ==
               winding_number(contour.region_info[o]["polyline"], z)
               for o in hits if o != r):
            return r, contour.region_signs[r]
    raise AmbiguousLocationError(f"ambiguous region for point {z}: {hits}")


def reverse_subcontour(contour, arc_ids):
    """Flip orientation of the listed arcs and swap their region pairs.

    Jump data on the reversed arcs must be inverted by the caller: the posed
    problem is unchanged only under v -> v^-1 there.  Region signs flip for
    regions all of whose bordering arc sides reversed; if the result fails
    re-validation it is returned with ``valid=False`` (reversal is how a
    non-jump-contour orientation gets repaired, so invalid states are legal
    inputs and outputs here).
    """
    arc_ids = sorted(set(int(i) for i in arc_ids))
    for i in arc_ids:
        if i < 0 or i >= len(contour.arcs):
            raise ContourError(f"unknown arc id {i}")
    arcs = list(contour.arcs)
    rmap = list(contour.region_map)
    for i in arc_ids:
        arcs[i] = arcs[i].reversed()
        l, r = rmap[i]
        rmap[i] = (r, l)
    signs = dict(contour.region_signs)
    touched = {}
    for i, (l, r) in enumerate(contour.region_map):
        for reg in (l, r):
            touched.setdefault(reg, []).append(i in arc_ids)
    for reg, flags in touched.items():
        if all(flags):
            signs[reg] = -signs[reg]
    try:
        return compose_contour(arcs, rmap, signs, contour.z0)
    except ContourError:
        return JumpContour(tuple(arcs), tuple(rmap), signs, contour.z0, valid=False)


def mobius_apply(contour, mobius, validate=True):
    """Image contour under a Mobius map; region signs are preserved.

    Analytic kinds stay exact where the image remains in the kind family
    (affine images of all kinds; lines/circles to lines/circles); otherwise
    the image arc is re-expressed as a sampled interpolant.  An endpoint
    mapping to the pole gains an at-infinity tag; unbounded arcs with
    bounded image lose theirs.
    """
    arcs = [_map_arc(a, mobius) for a in contour.arcs]
    pole = mobius.pole
    if pole is None or abs(contour.z0 - pole) > 1e-12 * max(abs(pole), 1.0):
        z0 = mobius(contour.z0)
    else:
        z0 = _fresh_base_point(arcs)
    out = compose_contour(arcs, contour.region_map, contour.region_signs, z0,
                          validate=False)
    if validate and not out.contains_infinity:
        _validate(out)
        out = replace(out, valid=True)
    return out


def _fresh_base_point(arcs):
    pts = np.concatenate([a.samples(256) for a in arcs])
    pts = pts[np.isfinite(pts)]
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    pad = 0.25 * max(x1 - x0, y1 - y0, 1e-6)
    gx = np.linspace(x0 - pad, x1 + pad, 13)
    gy = np.linspace(y0 - pad, y1 + pad, 13)
    cand = (gx[None, :] + 1j * gy[:, None]).ravel()
    d = np.abs(cand[:, None] - pts[None, :]).min(axis=1)
    return complex(cand[np.argmax(d)])


def _three_point_circle(p1, p2, p3):
    ax, ay, bx, by, cx, cy = p1.real, p1.imag, p2.real, p2.imag, p3.real, p3.imag
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    span = max(abs(p1 - p2), abs(p2 - p3), 1e-300)
    if abs(d) < 1e-12 * span**2:
        return None
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay) + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx) + (cx**2 + cy**2) * (bx - ax)) / d
    c = ux + 1j * uy
    return c, abs(p1 - c)


def _map_arc(arc, mobius):
    pole = mobius.pole
    if pole is None:
        p = dict(arc.params)
        sc = mobius.a / mobius.d
        if arc.kind == "line-segment":
            for k in ("start", "end", "point"):
                if p.get(k) is not None:
                    p[k] = mobius(p[k])
            if p.get("direction") is not None:
                d = sc * p["direction"]
                p["direction"] = d / abs(d)
            out = build_arc(arc.kind, **p)
        elif arc.kind == "circular-arc":
            rot = float(np.angle(sc))
            out = build_arc(arc.kind, center=mobius(p["center"]), radius=abs(sc) * p["radius"],
                            theta0=p["theta0"] + rot, theta1=p["theta1"] + rot)
        elif arc.kind == "log-spiral-segment":
            out = build_arc(arc.kind, base=mobius(p["base"]), coeff=sc * p["coeff"],
                            delta=p["delta"], r0=p["r0"], r1=p["r1"])
        else:
            out = build_arc(arc.kind, points=mobius(np.asarray(p["points"])))
        return replace(out, start_tag=arc.start_tag, end_tag=arc.end_tag)

    start, end = arc.start_point(), arc.end_point()
    scale = max([abs(p) for p in (start, end) if p is not None] + [abs(pole), 1.0])
    pole_at_start = start is not None and abs(start - pole) < 1e-12 * scale
    pole_at_end = end is not None and abs(end - pole) < 1e-12 * scale
    if not (pole_at_start or pole_at_end) and not arc.unbounded:
        interior = arc.point(np.linspace(0.0, 1.0, 513))
        if np.abs(interior - pole).min() < 1e-9 * scale:
            raise ContourError("Mobius pole lies on an arc interior; split the arc first")

    if arc.kind in ("line-segment", "circular-arc"):
        return _map_line_or_circle(arc, mobius, pole_at_start, pole_at_end)

    if pole_at_start or pole_at_end or arc.unbounded:
        raise ContourError(f"cannot map a {arc.kind} through infinity")
    pts = arc.point(np.linspace(0.0, 1.0, 513))
    out = build_arc("sampled-interpolant", points=mobius(pts))
    return replace(out, start_tag=arc.start_tag, end_tag=arc.end_tag)


def _map_line_or_circle(arc, mobius, pole_at_start, pole_at_end):
    """Exact image of a line/circle piece under a non-affine Mobius map."""
    start, end = arc.start_point(), arc.end_point()
    probes = mobius(arc.point(np.array([0.25, 0.5, 0.75])))

    img_start = mobius.image_of_infinity() if start is None else (
        None if pole_at_start else mobius(start))
    img_end = mobius.image_of_infinity() if end is None else (
        None if pole_at_end else mobius(end))

    if img_start is None and img_end is None:
        raise ContourError("both endpoints map to infinity; split the arc first")

    if img_start is None or img_end is None:
        # the image reaches infinity, hence is straight
        finite = img_end if img_start is None else img_start
        d = probes[2] - probes[0]
        d = d / abs(d)
        far = probes[0] if img_start is None else probes[2]
        if abs((finite + d) - far) > abs((finite - d) - far):
            d = -d
        if img_start is None:
            out = build_arc("line-segment", start=None, end=finite, direction=-d)
        else:
            out = build_arc("line-segment", start=finite, end=None, direction=d)
        return replace(out,
                       start_tag="at-infinity" if img_start is None else _detag(arc.start_tag),
                       end_tag="at-infinity" if img_end is None else _detag(arc.end_tag))

    cand = _three_point_circle(probes[0], probes[1], probes[2])
    if cand is None:
        out = build_arc("line-segment", start=img_start, end=img_end)
        return replace(out, start_tag=_detag(arc.start_tag), end_tag=_detag(arc.end_tag))
    c, r = cand
    th0 = float(np.angle(img_start - c))
    thm = float(np.angle(probes[1] - c))
    th1 = float(np.angle(img_end - c))
    for cand1 in (th1, th1 + 2 * np.pi, th1 - 2 * np.pi):
        lo, hi = min(th0, cand1), max(th0, cand1)
        if abs(cand1 - th0) > 2 * np.pi + 1e-12:
            continue
        for candm in (thm, thm + 2 * np.pi, thm - 2 * np.pi):
            if lo - 1e-12 <= candm <= hi + 1e-12:
                out = build_arc("circular-arc", center=c, radius=r, theta0=th0, theta1=cand1)
                return replace(out, start_tag=_detag(arc.start_tag), end_tag=_detag(arc.end_tag))
    raise ContourError("could not reconstruct the image circular arc")


def _detag(tag):
    return "smooth" if tag == "at-infinity" else tag


# ---------------------------------------------------------------------------
# Carleson and Muckenhoupt estimators


def _fine_polylines(contour, samples_per_arc=2048):
    """Per-arc parameter grids, points, and chord lengths for the estimators."""
    out = []
    for a in contour.arcs:
        t = np.linspace(0.0, 1.0, samples_per_arc + 1)
        pts = a.point(t)
        out.append((a, t, pts, np.abs(np.diff(pts))))
    return out


def _disk_lengths(polys, center, radii, weight=None):
    """Integral of weight (default 1) over the contour inside D(center, r),
    for every r at once.  Crossing segments are refined by parameter
    bisection against the disk membership predicate.
    """
    totals = np.zeros(len(radii))
    radii = np.asarray(radii)
    for arc, t, pts, seg in polys:
        d = np.abs(pts - center)
        wseg = weight((pts[:-1] + pts[1:]) / 2.0) if weight is not None else np.ones_like(seg)
        inside = d[:, None] < radii[None, :]             # (samples+1, R)
        both = inside[:-1] & inside[1:]
        totals += (seg * wseg) @ both
        crossing = np.argwhere(inside[:-1] ^ inside[1:])  # (k, [seg_idx, r_idx])
        if crossing.size == 0:
            continue
        si, ri = crossing[:, 0], crossing[:, 1]
        lo, hi = t[si].copy(), t[si + 1].copy()
        lo_in = d[si] < radii[ri]
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            m_in = np.abs(arc.point(mid) - center) < radii[ri]
            same = m_in == lo_in
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        tcross = 0.5 * (lo + hi)
        zin = arc.point(np.where(lo_in, t[si], t[si + 1]))
        zc = arc.point(tcross)
        part = np.abs(zc - zin)
        wpart = weight((zc + zin) / 2.0) if weight is not None else 1.0
        np.add.at(totals, ri, part * wpart)
    return totals


def _arclength_uniform_centers(polys, n_centers):
    seg = np.concatenate([p[3] for p in polys])
    mids = np.concatenate([(p[2][:-1] + p[2][1:]) / 2.0 for p in polys])
    s = np.cumsum(seg)
    targets = (np.arange(n_centers) + 0.5) * s[-1] / n_centers
    idx = np.clip(np.searchsorted(s, targets), 0, len(mids) - 1)
    return mids[idx]


def carleson_constant(contour, n_centers=256, n_radii=64):
    """Lower-bound estimate of the sup of arclength-in-disk over radius,
    over centers on the contour and a log radius sweep.

    Monotone nondecreasing along nested refinements of the sweep (doubling
    ``n_centers`` and refining ``n_radii`` as 2n-1 keeps the grids nested).
    Contours through infinity are measured on their bounded chart image.
    """
    if contour.contains_infinity:
        contour = mobius_apply(contour, chart_map(contour.z0), validate=False)
    polys = _fine_polylines(contour)
    diam = contour.diameter()
    radii = np.exp(np.linspace(np.log(1e-3 * diam), np.log(4 * diam), n_radii))
    centers = _arclength_uniform_centers(polys, n_centers)
    best = 0.0
    for c in centers:
        vals = _disk_lengths(polys, c, radii)
        best = max(best, float((vals / radii).max()))
    return best


def muckenhoupt_estimate(contour, p, z0=None, n_centers=256, n_radii=64):
    """Lower-bound estimate of the Muckenhoupt sup for w(z) = |z - z0|^(1-2/p).

    Reduces exactly to :func:`carleson_constant` at p = 2 (unit weight).
    A base point within 1% of the contour triggers a ConditioningWarning:
    the sup is finite but large and refinement-hungry there.
    """
    if not 1 < p < np.inf:
        raise ContourError("p must lie in (1, inf)")
    if contour.contains_infinity:
        contour = mobius_apply(contour, chart_map(contour.z0), validate=False)
    z0 = contour.z0 if z0 is None else complex(z0)
    polys = _fine_polylines(contour)
    diam = contour.diameter()
    if contour.distance_to(z0) < 1e-2 * diam:
        warnings.warn(
            "base point is within 1% of the contour; the Muckenhoupt sup is "
            "ill-conditioned and keeps growing under refinement",
            ConditioningWarning,
            stacklevel=2,
        )
    q = p / (p - 1.0)
    alpha = 1.0 - 2.0 / p
    radii = np.exp(np.linspace(np.log(1e-3 * diam), np.log(4 * diam), n_radii))
    centers = _arclength_uniform_centers(polys, n_centers)
    if alpha == 0.0:
        best = 0.0
        for c in centers:
            vals = _disk_lengths(polys, c, radii)
            best = max(best, float((vals / radii).max()))
        return best
    wP = lambda z: np.abs(z - z0) ** (alpha * p)
    wQ = lambda z: np.abs(z - z0) ** (-alpha * q)
    best = 0.0
    for c in centers:
        a = _disk_lengths(polys, c, radii, weight=wP)
        b = _disk_lengths(polys, c, radii, weight=wQ)
        vals = (a / radii) ** (1.0 / p) * (b / radii) ** (1.0 / q)
        best = max(best, float(vals.max()))
    return best
