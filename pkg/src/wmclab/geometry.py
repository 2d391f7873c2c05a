"""Pointwise surface geometry: jets, fundamental forms, weighted curvature.

A 2-jet of an immersion at a point consists of the first partials
(tangent vectors) and second partials of the parametrization.  All
quantities here are algebraic in the jet, so every function accepts
arbitrary leading batch axes.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParam, SingularMetric, WeightUndefined, ZeroVector

DET_FLOOR = 1e-14


@dataclass(frozen=True)
class SurfaceJet:
    """Second-order data of an immersion at one point (or a batch).

    ``dX`` has shape (..., n, n+1): row i is the tangent vector of the
    i-th parameter direction.  ``ddX`` has shape (..., n, n, n+1) and
    holds the second partials.  ``point`` optionally carries the ambient
    base point for position-dependent curvature prescriptions.
    """

    dX: np.ndarray
    ddX: np.ndarray
    point: Optional[np.ndarray] = None

    def __post_init__(self):
        dX = np.asarray(self.dX, dtype=float)
        ddX = np.asarray(self.ddX, dtype=float)
        object.__setattr__(self, "dX", dX)
        object.__setattr__(self, "ddX", ddX)
        n = dX.shape[-2]
        if dX.shape[-1] != n + 1:
            raise InvalidParam(
                f"dX must have shape (..., n, n+1), got {dX.shape}")
        if ddX.shape[-3:] != (n, n, n + 1):
            raise InvalidParam(
                f"ddX must have shape (..., {n}, {n}, {n + 1}), got {ddX.shape}")

    @property
    def n(self):
        return self.dX.shape[-2]


def normal(jet, unit=True):
    """Generalized cross product of the tangent rows.

    Component m is (-1)^(n+m) times the minor of dX with column m
    removed; the result is orthogonal to every tangent vector and its
    length equals sqrt(det g).  For graphs (x, u(x)) it points upward,
    along (-grad u, 1).
    """
    dX = jet.dX if isinstance(jet, SurfaceJet) else np.asarray(jet, dtype=float)
    n = dX.shape[-2]
    comps = [(-1.0) ** (n + m) * np.linalg.det(np.delete(dX, m, axis=-1))
             for m in range(n + 1)]
    w = np.stack(comps, axis=-1)
    if not unit:
        return w
    nrm = np.linalg.norm(w, axis=-1, keepdims=True)
    if np.any(nrm <= DET_FLOOR) or not np.all(np.isfinite(nrm)):
        raise SingularMetric("degenerate tangent plane: |cross product| ~ 0")
    return w / nrm


@dataclass(frozen=True)
class MetricData:
    """Metric, unit normal, second fundamental form, and weighted form.

    ``a_g`` is the weighted first fundamental form
    (A_G)_ij = dX_i . G(N) dX_j, present when a weight was supplied.
    """

    g: np.ndarray
    ginv: np.ndarray
    detg: np.ndarray
    normal: np.ndarray
    b: np.ndarray
    a_g: Optional[np.ndarray] = None


def fundamental_forms(jet, weight=None):
    """Fundamental forms of a jet with the cross-product normal.

    Raises SingularMetric when det g falls below the floor, which covers
    both degenerate parametrizations and non-finite input, and
    WeightUndefined when the weight cannot be evaluated at the normal.
    """
    dX, ddX = jet.dX, jet.ddX
    g = np.einsum("...ia,...ja->...ij", dX, dX)
    detg = np.linalg.det(g)
    if not np.all(np.isfinite(detg)) or np.any(detg <= DET_FLOOR):
        raise SingularMetric(f"metric determinant below floor: min {np.min(detg)}")
    ginv = np.linalg.inv(g)
    nu = normal(jet)
    b = np.einsum("...ija,...a->...ij", ddX, nu)
    ag = weighted_form(jet, weight, nu) if weight is not None else None
    return MetricData(g=g, ginv=ginv, detg=detg, normal=nu, b=b, a_g=ag)


def weighted_form(jet, weight, nu=None):
    """Tangential Gram matrix of the weight: (A_G)_ij = dX_i . G(N) dX_j."""
    if nu is None:
        nu = normal(jet)
    try:
        G = weight(nu)
    except ZeroVector:
        raise
    except Exception as exc:
        raise WeightUndefined(
            f"weight evaluation failed at the unit normal: {exc}") from exc
    if not np.all(np.isfinite(G)):
        raise WeightUndefined("weight evaluation returned non-finite entries")
    return np.einsum("...ia,...ab,...jb->...ij", jet.dX, G, jet.dX)


def weighted_mean_curvature(jet, weight, flip_normal=False):
    """Weighted mean curvature H_G = tr(g^-1 A_G g^-1 b).

    Uses the cross-product normal (upward for graphs, toward the center
    for the lower-cap sphere chart); ``flip_normal`` evaluates with the
    opposite orientation instead.  The area weight reduces this to the
    sum of principal curvatures.
    """
    forms = fundamental_forms(jet)
    nu, b = forms.normal, forms.b
    if flip_normal:
        nu, b = -nu, -b
    ag = weighted_form(jet, weight, nu)
    return np.einsum("...ij,...jk,...kl,...li->...", forms.ginv, ag,
                     forms.ginv, b)


def shape_operator(forms):
    """g^-1 b, the shape operator in the chart basis."""
    return np.einsum("...ij,...jk->...ik", forms.ginv, forms.b)


def curvature_energy_bound(jet, weight):
    """Both sides of the pointwise bound tr(g^-1 A_G S^2) tr G >= H_G^2.

    Returns (lhs, rhs).  The left side couples the weighted second
    moment of the shape operator S to the weight trace; equality holds
    exactly at umbilic points such as spheres.
    """
    forms = fundamental_forms(jet, weight)
    S = shape_operator(forms)
    M = np.einsum("...ij,...jk->...ik", forms.ginv, forms.a_g)
    h = np.einsum("...ij,...ji->...", M, S)
    energy = np.einsum("...ij,...jk,...ki->...", M, S, S)
    trace = weight.trace(forms.normal)
    return energy * trace, h**2


def sphere_jet(x, radius, cap="lower"):
    """Jet of the radius-R sphere over a chart point x in the unit ball.

    The lower cap is parametrized as R (x, -sqrt(1 - |x|^2)); its
    cross-product normal points toward the center, so the weighted mean
    curvature is + tr G(N) / R.  The upper cap carries the outward
    normal and the opposite sign.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r2 = np.sum(x**2, axis=-1)
    if np.any(r2 >= 1.0):
        raise InvalidParam("sphere chart requires |x| < 1")
    if cap not in ("lower", "upper"):
        raise InvalidParam(f"cap must be 'lower' or 'upper', got {cap!r}")
    sgn = 1.0 if cap == "lower" else -1.0
    s = np.sqrt(1.0 - r2)[..., None]

    dX = np.zeros(x.shape[:-1] + (n, n + 1))
    for i in range(n):
        dX[..., i, i] = 1.0
    dX[..., :, n] = sgn * x / s
    dX *= radius

    ddX = np.zeros(x.shape[:-1] + (n, n, n + 1))
    eye = np.eye(n)
    s3 = (s**3)[..., None]
    ddX[..., :, :, n] = sgn * (eye / s[..., None]
                               + x[..., :, None] * x[..., None, :] / s3)
    ddX *= radius
    return SurfaceJet(dX=dX, ddX=ddX)


def graph_jet(grad_u, hess_u, point=None):
    """Jet of a graph (x, u(x)) from the gradient and Hessian of u."""
    grad_u = np.asarray(grad_u, dtype=float)
    hess_u = np.asarray(hess_u, dtype=float)
    n = grad_u.shape[-1]
    dX = np.zeros(grad_u.shape[:-1] + (n, n + 1))
    for i in range(n):
        dX[..., i, i] = 1.0
    dX[..., :, n] = grad_u
    ddX = np.zeros(grad_u.shape[:-1] + (n, n, n + 1))
    ddX[..., :, :, n] = hess_u
    return SurfaceJet(dX=dX, ddX=ddX, point=point)


def graph_curvature_operator(grad_u, hess_u, weight):
    """Left-hand side of the graph equation: sum_ij G_ij(-grad u, 1) d_ij u.

    G is evaluated at the unnormalized upper normal direction; by the
    degree -1 homogeneity this equals the weighted mean curvature of the
    graph computed from its jet.
    """
    grad_u = np.asarray(grad_u, dtype=float)
    hess_u = np.asarray(hess_u, dtype=float)
    n = grad_u.shape[-1]
    p = np.concatenate([-grad_u, np.ones(grad_u.shape[:-1] + (1,))], axis=-1)
    G = weight(p)
    return np.einsum("...ij,...ij->...", G[..., :n, :n], hess_u)
