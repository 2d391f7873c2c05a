"""Computational domains described by signed distance functions.

The signed distance is negative inside, so the interior distance used in
barrier constructions is d = -sdf.  Each domain carries a uniform grid,
the radius of an origin-centered ball containing it, and the width of
the boundary collar on which d is treated as twice differentiable.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import ndimage

from .errors import (InvalidParam, OutsideCollar, ResolutionTooCoarse,
                     ValidationFailed)

# fixed step for distance-function derivatives of smooth sdfs; small
# enough that barrier limit studies are not polluted by truncation
DEFAULT_FD_STEP = 2e-4
COLLAR_MIN_CELLS = 4


@dataclass(frozen=True)
class GridSpec:
    """Uniform node lattice covering the domain's bounding box.

    Axis k holds nodes center[k] + h * (-m[k] .. +m[k]); keeping the
    lattice symmetric about the center preserves the symmetry group of
    symmetric domains in discretizations.
    """

    center: np.ndarray
    m: np.ndarray
    h: float

    @property
    def n(self):
        return len(self.center)

    @property
    def shape(self):
        return tuple(2 * int(k) + 1 for k in self.m)

    def axes(self):
        return [self.center[k] + self.h * np.arange(-int(self.m[k]),
                                                    int(self.m[k]) + 1)
                for k in range(self.n)]

    def nodes(self):
        """All node coordinates, shape (*grid_shape, n)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)


@dataclass(frozen=True)
class DomainSpec:
    """A domain, its grid, and its reported enclosing-ball radius.

    ``circumradius`` is the radius of the smallest origin-centered ball
    known to contain the domain (the height estimates use it as stated,
    without recentering).  ``boundary_band`` is the collar width mu;
    distance derivatives are only offered inside the collar.
    ``smooth_sdf`` distinguishes analytic distance functions from
    grid-interpolated ones, which need coarser difference steps.
    """

    sdf: Callable[[np.ndarray], np.ndarray]
    grid: GridSpec
    circumradius: float
    boundary_band: float
    kind: str = "custom"
    smooth_sdf: bool = True
    inscribed_radius_exact: Optional[float] = None

    def inscribed_radius(self):
        """Radius of the largest inscribed ball (exact where known,
        otherwise the deepest grid node)."""
        if self.inscribed_radius_exact is not None:
            return self.inscribed_radius_exact
        vals = self.sdf(self.grid.nodes())
        return float(np.max(-vals))

    def fd_step(self):
        return DEFAULT_FD_STEP if self.smooth_sdf else self.grid.h


def _grid_for(center, radius, h, margin=3):
    center = np.asarray(center, dtype=float)
    m = np.full(len(center), int(np.ceil(radius / h)) + margin)
    return GridSpec(center=center, m=m, h=float(h))


def _collar_width(h, reach):
    return min(5.0 * h, reach)


def make_ball(center, radius, h):
    """Ball domain with the exact signed distance |x - c| - r."""
    center = np.asarray(center, dtype=float)
    if radius <= 0:
        raise InvalidParam(f"ball radius must be positive, got {radius}")
    if h <= 0:
        raise InvalidParam(f"grid spacing must be positive, got {h}")

    def sdf(x):
        return np.linalg.norm(np.asarray(x, dtype=float) - center, axis=-1) - radius

    return DomainSpec(
        sdf=sdf,
        grid=_grid_for(center, radius, h),
        circumradius=float(np.linalg.norm(center) + radius),
        boundary_band=_collar_width(h, radius),
        kind="ball",
        inscribed_radius_exact=float(radius),
    )


def make_rectangle(lo, hi, h):
    """Axis-aligned box domain with the exact signed distance."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise InvalidParam("rectangle needs lo < hi per axis")
    if h <= 0:
        raise InvalidParam(f"grid spacing must be positive, got {h}")
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)

    def sdf(x):
        q = np.abs(np.asarray(x, dtype=float) - center) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=-1)
        inside = np.minimum(np.max(q, axis=-1), 0.0)
        return outside + inside

    corners = np.stack(np.meshgrid(*zip(lo, hi), indexing="ij"),
                       axis=-1).reshape(-1, len(lo))
    return DomainSpec(
        sdf=sdf,
        grid=_grid_for(center, float(np.max(half)), h),
        circumradius=float(np.max(np.linalg.norm(corners, axis=-1))),
        boundary_band=_collar_width(h, float(np.min(half))),
        kind="rectangle",
        inscribed_radius_exact=float(np.min(half)),
    )


def make_sdf(evaluator, center, radius, h, reach=None, eikonal_tol=0.05,
             check_samples=64, seed=0):
    """Domain from a user signed-distance evaluator.

    ``center``/``radius`` bound the domain (grid coverage and reported
    circumradius).  The evaluator is trusted but spot-checked: |grad sdf|
    must be within ``eikonal_tol`` of 1 at sampled collar points.
    """
    center = np.asarray(center, dtype=float)
    if radius <= 0 or h <= 0:
        raise InvalidParam("radius and h must be positive")
    dom = DomainSpec(
        sdf=evaluator,
        grid=_grid_for(center, radius, h),
        circumradius=float(np.linalg.norm(center) + radius),
        boundary_band=_collar_width(h, radius if reach is None else reach),
        kind="sdf",
    )
    rng = np.random.default_rng(seed)
    nodes = dom.grid.nodes().reshape(-1, dom.grid.n)
    vals = np.asarray(evaluator(nodes))
    collar = nodes[np.abs(vals) < dom.boundary_band]
    if len(collar) == 0:
        raise ValidationFailed("no grid nodes inside the boundary collar")
    pick = collar[rng.choice(len(collar), size=min(check_samples, len(collar)),
                             replace=False)]
    step = dom.fd_step()
    grads = np.stack(
        [(evaluator(pick + step * e) - evaluator(pick - step * e)) / (2 * step)
         for e in np.eye(dom.grid.n)], axis=-1)
    worst = float(np.max(np.abs(np.linalg.norm(grads, axis=-1) - 1.0)))
    if worst > eikonal_tol:
        raise ValidationFailed(
            f"|grad sdf| deviates from 1 by {worst:.3g} in the collar "
            f"(tolerance {eikonal_tol})")
    return dom


def read_sdf_grid(path, h_override=None):
    """Domain from a plain-text grid of sdf samples.

    Format: header line ``n h n1 ... nn``, then whitespace-separated
    row-major values.  Nodes are centered about the origin.  The
    interpolated sdf is only piecewise smooth, so derivative steps fall
    back to the grid spacing.
    """
    from scipy.interpolate import RegularGridInterpolator

    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise InvalidParam(f"sdf grid file {path!r} is empty or truncated")
    n = int(tokens[0])
    h = float(tokens[1])
    dims = [int(t) for t in tokens[2:2 + n]]
    if len(dims) != n or any(d < 2 for d in dims):
        raise InvalidParam("sdf grid header must list one size >= 2 per axis")
    vals = np.array([float(t) for t in tokens[2 + n:]])
    if vals.size != int(np.prod(dims)):
        raise InvalidParam(
            f"sdf grid expects {int(np.prod(dims))} values, got {vals.size}")
    field = vals.reshape(dims)
    axes = [h * (np.arange(d) - (d - 1) / 2.0) for d in dims]
    interp = RegularGridInterpolator(axes, field, bounds_error=False,
                                     fill_value=float(np.max(field)))

    def sdf(x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return interp(x[None])[0]
        return interp(x)

    gh = float(h_override) if h_override is not None else h
    radius = float(max(a[-1] for a in axes))
    grid = GridSpec(center=np.zeros(n),
                    m=np.full(n, int(np.floor(radius / gh))), h=gh)
    band = _collar_width(gh, radius)
    return DomainSpec(sdf=sdf, grid=grid, circumradius=radius,
                      boundary_band=band, kind="sdf-grid", smooth_sdf=False)


@dataclass(frozen=True)
class DistanceJet:
    """Gradient and Hessian of the interior distance d = -sdf at a point.

    ``ortho_residual`` is the vector (grad d)^T D^2 d, which vanishes for
    an exact distance function.
    """

    grad: np.ndarray
    hess: np.ndarray
    ortho_residual: np.ndarray


def distance_jet(dom, x, step=None):
    """Difference the interior distance at a collar point.

    Central differences with a fixed small step for analytic sdfs (the
    grid spacing for interpolated ones).  Raises OutsideCollar when x is
    farther than the collar width from the boundary.
    """
    x = np.asarray(x, dtype=float)
    n = dom.grid.n
    s = float(dom.sdf(x))
    if abs(s) > dom.boundary_band:
        raise OutsideCollar(
            f"point at signed distance {s:.3g} is outside the collar "
            f"(width {dom.boundary_band:.3g})")
    eps = dom.fd_step() if step is None else float(step)

    def d(p):
        return -np.asarray(dom.sdf(p), dtype=float)

    eye = np.eye(n)
    grad = np.array([(d(x + eps * eye[i]) - d(x - eps * eye[i])) / (2 * eps)
                     for i in range(n)])
    hess = np.empty((n, n))
    d0 = d(x)
    for i in range(n):
        hess[i, i] = (d(x + eps * eye[i]) - 2 * d0 + d(x - eps * eye[i])) / eps**2
        for j in range(i + 1, n):
            v = (d(x + eps * (eye[i] + eye[j])) - d(x + eps * (eye[i] - eye[j]))
                 - d(x - eps * (eye[i] - eye[j])) + d(x - eps * (eye[i] + eye[j]))) \
                / (4 * eps**2)
            hess[i, j] = hess[j, i] = v
    return DistanceJet(grad=grad, hess=hess, ortho_residual=grad @ hess)


def distance_hessian(dom, x, step=None):
    """Hessian of the interior distance; see distance_jet."""
    return distance_jet(dom, x, step=step).hess


def _deepest_node(dom):
    nodes = dom.grid.nodes()
    vals = np.asarray(dom.sdf(nodes))
    idx = np.unravel_index(np.argmin(vals), vals.shape)
    return nodes[idx]


def bisect_boundary(dom, inside, outside, iters=60):
    """Boundary point on the segment from an inside to an outside point."""
    a = np.asarray(inside, dtype=float)
    b = np.asarray(outside, dtype=float)
    fa = float(dom.sdf(a))
    fb = float(dom.sdf(b))
    if fa > 0 or fb < 0:
        raise InvalidParam("bisect_boundary needs sdf(inside) <= 0 <= sdf(outside)")
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if float(dom.sdf(mid)) <= 0:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def boundary_samples(dom, count):
    """Deterministic boundary points by ray casting from the deepest
    interior node; suited to the star-shaped domains used here."""
    n = dom.grid.n
    anchor = _deepest_node(dom)
    reach = 2.0 * (dom.circumradius + float(np.linalg.norm(anchor))) + 1.0
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])[:count]
    elif n == 2:
        ang = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        from .weights import sphere_samples
        dirs = sphere_samples(n - 1, count, seed=7)
    return np.array([bisect_boundary(dom, anchor, anchor + reach * d)
                     for d in dirs])


@dataclass(frozen=True)
class BoundaryCurvatures:
    """Weighted curvatures of the boundary cylinder at sampled points.

    h_plus uses the inward direction (grad d, 0) and h_minus the outward
    one; for convex domains h_plus > 0 > h_minus.
    """

    points: np.ndarray
    h_plus: np.ndarray
    h_minus: np.ndarray


def boundary_weighted_curvatures(dom, weight, samples=64, points=None):
    """H_G^+/- at boundary samples from the distance-function derivatives.

    H_G^+ = - sum_ij G_ij((grad d, 0)) d_ij d and
    H_G^- = + sum_ij G_ij((-grad d, 0)) d_ij d, with G evaluated on the
    horizontal lift of the boundary normal.
    """
    pts = boundary_samples(dom, samples) if points is None else np.asarray(points)
    n = dom.grid.n
    hp = np.empty(len(pts))
    hm = np.empty(len(pts))
    for k, x in enumerate(pts):
        jet = distance_jet(dom, x)
        p_in = np.concatenate([jet.grad, [0.0]])
        p_out = np.concatenate([-jet.grad, [0.0]])
        hp[k] = -np.sum(weight(p_in)[:n, :n] * jet.hess)
        hm[k] = np.sum(weight(p_out)[:n, :n] * jet.hess)
    return BoundaryCurvatures(points=pts, h_plus=hp, h_minus=hm)


@dataclass(frozen=True)
class GridClassification:
    """Node labels and boundary-cut geometry of a discretized domain.

    ``labels``: 0 exterior, 1 interior, 2 boundary-adjacent (an interior
    node with a boundary crossing on at least one grid arm).
    ``cut_theta[axis, side]`` holds the fractional distance (0, 1] from a
    boundary-adjacent node to the crossing along +axis (side 0) or -axis
    (side 1); NaN where the arm stays inside.
    """

    labels: np.ndarray
    cut_theta: np.ndarray

    @property
    def interior(self):
        return self.labels >= 1

    @property
    def boundary_adjacent(self):
        return self.labels == 2


def classify_grid(dom):
    """Label grid nodes and measure boundary crossings along grid arms.

    Raises ResolutionTooCoarse when the collar is thinner than
    COLLAR_MIN_CELLS grid cells, when no interior nodes exist, when an
    interior node has no interior neighbor, or when the interior is
    disconnected.
    """
    h = dom.grid.h
    if dom.boundary_band < COLLAR_MIN_CELLS * h:
        raise ResolutionTooCoarse(
            f"collar width {dom.boundary_band:.3g} under {COLLAR_MIN_CELLS} "
            f"cells at h={h:.3g}")
    nodes = dom.grid.nodes()
    vals = np.asarray(dom.sdf(nodes))
    inside = vals < 0
    if not np.any(inside):
        raise ResolutionTooCoarse("no grid nodes inside the domain")
    n = dom.grid.n

    neighbor_count = np.zeros(inside.shape, dtype=int)
    for ax in range(n):
        for sh in (+1, -1):
            shifted = np.zeros_like(inside)
            src = [slice(None)] * n
            dst = [slice(None)] * n
            if sh > 0:
                dst[ax], src[ax] = slice(None, -1), slice(1, None)
            else:
                dst[ax], src[ax] = slice(1, None), slice(None, -1)
            shifted[tuple(dst)] = inside[tuple(src)]
            neighbor_count += shifted
    if np.any(inside & (neighbor_count == 0)):
        raise ResolutionTooCoarse("isolated interior node: grid too coarse")
    _, ncomp = ndimage.label(inside)
    if ncomp > 1:
        raise ResolutionTooCoarse(
            f"interior splits into {ncomp} grid components")

    labels = inside.astype(int)
    cut_theta = np.full((n, 2) + inside.shape, np.nan)
    idx_inside = np.argwhere(inside)
    for ax in range(n):
        for side, sh in ((0, +1), (1, -1)):
            for idx in idx_inside:
                jdx = idx.copy()
                jdx[ax] += sh
                out_of_grid = jdx[ax] < 0 or jdx[ax] >= inside.shape[ax]
                if not out_of_grid and inside[tuple(jdx)]:
                    continue
                a = nodes[tuple(idx)]
                b = a.copy()
                b[ax] += sh * h
                cross = bisect_boundary(dom, a, b)
                theta = abs(cross[ax] - a[ax]) / h
                cut_theta[(ax, side) + tuple(idx)] = max(theta, 1e-12)
                labels[tuple(idx)] = 2
    return GridClassification(labels=labels, cut_theta=cut_theta)
