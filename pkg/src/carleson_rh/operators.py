"""Discretized Cauchy integral operators on jump-contour grids.

The principal-value operator uses a single global pole subtraction,

    (S h)(z_j) = (1/pi i) sum_k dz_k (h_k - h_j)/(z_k - z_j)
               + (1/pi i) dz_j h'(z_j)/gamma'(t_j) + h_j * I(z_j),

where the k = j term of the regularized integrand is the derivative of the
panel interpolant and I(z_j) is the exact principal value of the kernel
alone, read off from loop topology (grid.pv_constant).  Sokhotski-Plemelj
projections are (S +/- 1)/2 of the same matrix, so C+ - C- = 1 holds
exactly at the discrete level.

Contours through infinity are handled by the bounded chart w = 1/(z - z0):
fields transport via (push h)(w) = h(z)/w, and the singular operator and
Cauchy integral act on the image and pull back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import MatrixField, NormSpec
from .geometry import ContourError, chart_map, winding_number, _signed_area
from .grid import QuadratureGrid, build_grid


class NearBoundaryError(ValueError):
    """Off-contour evaluation too close to the contour.

    Within five panel widths of the contour the plain quadrature loses all
    accuracy; use the Plemelj boundary values and the jump relation instead.
    """


def differentiation_matrix(x):
    """Spectral differentiation on arbitrary distinct nodes (barycentric)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = np.ones(n)
    for j in range(n):
        w[j] = 1.0 / np.prod(x[j] - np.delete(x, j))
    D = np.zeros((n, n))
    for j in range(n):
        for k in range(n):
            if j != k:
                D[j, k] = (w[k] / w[j]) / (x[j] - x[k])
    D[np.arange(n), np.arange(n)] = -D.sum(axis=1)
    return D


def s_matrix(grid):
    """Dense Nystrom matrix of the principal-value operator (cached)."""
    if "S" in grid._cache:
        return grid._cache["S"]
    if np.isnan(grid.pv_constant).any():
        raise ContourError(
            "grid has loops through infinity; use singular_via_chart / MobiusChart"
        )
    z, dz, wt = grid.nodes, grid.dz, grid.param_weight
    N = grid.size
    D = z[None, :] - z[:, None]
    np.fill_diagonal(D, 1.0)
    K = (1.0 / (np.pi * 1j)) * dz[None, :] / D
    np.fill_diagonal(K, 0.0)
    rowsum = K.sum(axis=1)
    gp = dz / wt  # gamma'(t) at each node
    npan = grid.panel_index.max() + 1
    for p in range(npan):
        sl = np.flatnonzero(grid.panel_index == p)
        Dp = differentiation_matrix(grid.t[sl])
        K[np.ix_(sl, sl)] += (1.0 / (np.pi * 1j)) * (dz[sl][:, None] / gp[sl][:, None]) * Dp
    K[np.arange(N), np.arange(N)] += grid.pv_constant - rowsum
    grid._cache["S"] = K
    return K


def cp_matrix(grid):
    if "Cp" not in grid._cache:
        grid._cache["Cp"] = 0.5 * (np.eye(grid.size) + s_matrix(grid))
    return grid._cache["Cp"]


def cm_matrix(grid):
    if "Cm" not in grid._cache:
        grid._cache["Cm"] = 0.5 * (-np.eye(grid.size) + s_matrix(grid))
    return grid._cache["Cm"]


def apply_nodal(matrix, field):
    """Apply an (N, N) scalar-kernel matrix entrywise to a matrix field."""
    return MatrixField(field.grid, np.einsum("jk,kab->jab", matrix, field.values))


def cauchy_singular(field):
    """Principal-value operator applied to a field on its grid."""
    return apply_nodal(s_matrix(field.grid), field)


def plemelj_pair(field):
    """(C+ h, C- h) from a single application of the singular operator."""
    sh = cauchy_singular(field)
    return (
        MatrixField(field.grid, 0.5 * (field.values + sh.values)),
        MatrixField(field.grid, 0.5 * (-field.values + sh.values)),
    )


def plemelj_plus(field):
    return plemelj_pair(field)[0]


def plemelj_minus(field):
    return plemelj_pair(field)[1]


def cauchy_offcontour(field, z, min_panel_factor=5.0):
    """Cauchy integral of a field at points off the contour.

    Refuses evaluation within ``min_panel_factor`` local node spacings of
    the contour (the nearest panel's arclength per node); boundary values
    belong to the Plemelj path.
    """
    grid = field.grid
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    zz = np.atleast_1d(z)
    d = np.abs(zz[:, None] - grid.nodes[None, :])
    nearest = d.argmin(axis=1)
    limit = min_panel_factor * grid.local_node_spacing()[nearest]
    bad = d[np.arange(len(zz)), nearest] < limit
    if bad.any():
        raise NearBoundaryError(
            f"{bad.sum()} evaluation point(s) within {min_panel_factor} panel widths "
            "of the contour; use boundary values via the Plemelj projections"
        )
    ker = grid.dz[None, :] / (grid.nodes[None, :] - zz[:, None])
    out = np.einsum("pk,kab->pab", ker, field.values) / (2j * np.pi)
    return out[0] if scalar else out


def weighted_norm(field, spec=None):
    """Weighted L^p norm with weight |z - z0|^(1-2/p), Frobenius per node."""
    grid = field.grid
    if spec is None:
        spec = NormSpec(2.0, grid.contour.z0)
    w = spec.weight(grid.nodes)
    f = field.frobenius()
    return float(((w * f) ** spec.p @ grid.arclength) ** (1.0 / spec.p))


def operator_norm(matrix, grid):
    """Operator 2-norm in the discrete L^2(Gamma) inner product."""
    s = np.sqrt(grid.arclength)
    return float(np.linalg.norm(matrix * (s[:, None] / s[None, :]), 2))


# ---------------------------------------------------------------------------
# Mobius chart transport


def _image_grid(source, mapping):
    """Pullback grid on the Mobius image: nodes, weights, and loop data are
    the exact images of the source grid under the map."""
    z = source.nodes
    w = mapping(z)
    dw = mapping.derivative(z) * source.dz
    loops = source.contour.plus_loops
    pv = np.full(source.size, np.nan)
    polys = []
    for loop in loops:
        poly = mapping(loop.polyline)
        poly = poly[np.isfinite(poly)]
        polys.append(poly)
    for li, loop in enumerate(loops):
        on = source.loop_index == li
        vals = np.full(on.sum(), 1.0 if _signed_area(polys[li]) > 0 else -1.0)
        for lj in range(len(loops)):
            if lj != li:
                vals = vals + 2.0 * winding_number(polys[lj], w[on])
        pv[on] = vals
    return QuadratureGrid(
        contour=_ImageContour(polys),
        nodes=w,
        dz=dw,
        arclength=np.abs(dw),
        param_weight=source.param_weight,
        t=source.t,
        arc_index=source.arc_index,
        panel_index=source.panel_index,
        panel_spans=source.panel_spans,
        loop_index=source.loop_index,
        loop_theta=source.loop_theta,
        pv_constant=pv,
        panels_per_arc=source.panels_per_arc,
        nodes_per_panel=source.nodes_per_panel,
        grading_ratio=source.grading_ratio,
    )


@dataclass(frozen=True)
class _ImageContour:
    """Minimal stand-in contour for a pullback image grid."""

    polylines: list

    @property
    def contains_infinity(self):
        return False

    @property
    def z0(self):
        pts = np.concatenate(self.polylines)
        c = pts.mean()
        return complex(c) if np.abs(pts - c).min() > 0 else complex(c + 1e-3)


@dataclass
class MobiusChart:
    """Bounded chart w = 1/(z - z0) with aligned source and image grids.

    The image grid is the pointwise image of the source grid (same panels,
    same parameters), so field transport is a nodewise scaling:
    push h = h/w at image nodes, pull H = w H at source nodes.
    """

    contour: object
    z0: complex
    mapping: object
    source_grid: QuadratureGrid
    image_grid: QuadratureGrid

    @classmethod
    def build(cls, contour, z0=None, panels_per_arc=8, nodes_per_panel=16,
              grading_ratio=0.5):
        z0 = contour.z0 if z0 is None else complex(z0)
        if contour.distance_to(z0) <= 0:
            raise ContourError("chart base point lies on the contour")
        scale = contour.diameter() if not contour.contains_infinity else 1.0
        if not contour.contains_infinity and contour.distance_to(z0) < 1e-9 * scale:
            raise ContourError("chart base point lies on the contour")
        mapping = chart_map(z0)
        src = build_grid(contour, panels_per_arc, nodes_per_panel, grading_ratio,
                         allow_unbounded=True)
        if np.abs(src.nodes - z0).min() < 1e-12 * max(1.0, abs(z0)):
            raise ContourError("chart base point collides with a grid node")
        img = _image_grid(src, mapping)
        return cls(contour, z0, mapping, src, img)

    def push(self, field):
        """Transport a source field to the image grid: values h/w."""
        if field.grid is not self.source_grid:
            raise ContourError("field lives on a different grid than the chart source")
        return MatrixField(self.image_grid, field.values / self.image_grid.nodes[:, None, None])

    def pull(self, field):
        """Transport an image field back: values w H."""
        if field.grid is not self.image_grid:
            raise ContourError("field lives on a different grid than the chart image")
        return MatrixField(self.source_grid, field.values * self.image_grid.nodes[:, None, None])

    def singular(self, field):
        """S on the source contour computed as pull(S_image(push(field)))."""
        return self.pull(apply_nodal(s_matrix(self.image_grid), self.push(field)))

    def plemelj_pair(self, field):
        sh = self.singular(field)
        return (
            MatrixField(self.source_grid, 0.5 * (field.values + sh.values)),
            MatrixField(self.source_grid, 0.5 * (-field.values + sh.values)),
        )

    def cauchy_offcontour(self, field, z, min_panel_factor=5.0):
        """Cauchy integral at finite z off the contour, via the image:
        (C h)(z) = phi(z) * (C_image push h)(phi(z))."""
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        zz = np.atleast_1d(z)
        ph = self.mapping(zz)
        H = self.push(field)
        gridw = self.image_grid
        at_base = ~np.isfinite(ph)  # z == z0 maps to infinity on the image
        ph_safe = np.where(at_base, 0.0, ph)
        d = np.abs(ph_safe[:, None] - gridw.nodes[None, :])
        nearest = d.argmin(axis=1)
        limit = min_panel_factor * gridw.local_node_spacing()[nearest]
        if (d[np.arange(len(zz)), nearest] < limit)[~at_base].any():
            raise NearBoundaryError("evaluation point too close to the contour (chart image)")
        with np.errstate(divide="ignore", invalid="ignore"):
            ker = gridw.dz[None, :] / (gridw.nodes[None, :] - ph_safe[:, None])
        vals = np.einsum("pk,kab->pab", ker, H.values) / (2j * np.pi)
        vals = vals * ph_safe[:, None, None]
        if at_base.any():
            # w -> infinity limit of w * (C_image H)(w): -(1/2 pi i) int H dw
            lim = -np.einsum("k,kab->ab", gridw.dz, H.values) / (2j * np.pi)
            vals[at_base] = lim
        return vals[0] if scalar else vals

    def weighted_norm(self, field, p=2.0):
        """Weighted source norm; equals the plain L^p norm of the pushed field."""
        H = self.push(field)
        f = H.frobenius()
        return float((f**p @ self.image_grid.arclength) ** (1.0 / p))


def singular_via_chart(field, chart):
    """Chart-transported principal-value operator (spec operation name)."""
    return chart.singular(field)
