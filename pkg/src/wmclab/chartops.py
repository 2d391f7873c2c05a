"""Grid-sampled chart operators: Christoffel symbols, covariant
derivatives, the weighted Laplace-Beltrami operator, and the residual of
the normal equation.

All fields live on a uniform grid with one leading axis per parameter
direction; tensor indices trail.  Interior outputs are second-order
accurate; nodes whose stencil leaves the grid are filled with NaN (flux
form) or one-sided differences (plain partials), as documented per
function.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GridTooSmall, InvalidParam
from .geometry import SurfaceJet, fundamental_forms, shape_operator

_MIN_AXIS = 3


def _grid_shape(field, tensor_rank):
    shape = field.shape[:field.ndim - tensor_rank] if tensor_rank else field.shape
    if any(s < _MIN_AXIS for s in shape):
        raise GridTooSmall(
            f"need at least {_MIN_AXIS} nodes per axis, got grid shape {shape}")
    return shape


def _partials(field, spacing, n, tensor_rank):
    """Stack of d/dx_k over the n grid axes, new axis inserted before the
    tensor indices.  Central differences inside, second-order one-sided
    at grid edges."""
    _grid_shape(field, tensor_rank)
    outs = [np.gradient(field, spacing, axis=k, edge_order=2) for k in range(n)]
    return np.stack(outs, axis=field.ndim - tensor_rank)


def _shift(field, axis, k):
    """Field sampled at index+k along axis; vacated entries are NaN."""
    out = np.full_like(field, np.nan)
    src = [slice(None)] * field.ndim
    dst = [slice(None)] * field.ndim
    if k > 0:
        dst[axis], src[axis] = slice(None, -k), slice(k, None)
    elif k < 0:
        dst[axis], src[axis] = slice(-k, None), slice(None, k)
    else:
        return field.copy()
    out[tuple(dst)] = field[tuple(src)]
    return out


def jets_from_chart(chart_fn, axes):
    """Sample a chart map on a tensor grid and difference it into jets.

    ``chart_fn`` maps points (..., n) to ambient points (..., n+1);
    ``axes`` is a sequence of n uniformly spaced 1-D coordinate arrays.
    First and second derivatives use central differences (second-order
    one-sided at the edges), so jet-derived quantities carry O(h^2)
    error; the exact base points are kept in ``jet.point``.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    n = len(axes)
    steps = [a[1] - a[0] for a in axes]
    for a, h in zip(axes, steps):
        if len(a) < _MIN_AXIS:
            raise GridTooSmall(f"axis with {len(a)} < {_MIN_AXIS} nodes")
        if not np.allclose(np.diff(a), h, rtol=1e-12, atol=1e-12):
            raise InvalidParam("chart axes must be uniformly spaced")
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    X = np.asarray(chart_fn(mesh), dtype=float)
    dX = np.stack([np.gradient(X, steps[k], axis=k, edge_order=2)
                   for k in range(n)], axis=-2)
    ddX = np.stack([[np.gradient(dX[..., i, :], steps[k], axis=k, edge_order=2)
                     for i in range(n)] for k in range(n)], axis=0)
    ddX = np.moveaxis(ddX, (0, 1), (-3, -2))
    ddX = 0.5 * (ddX + np.swapaxes(ddX, -3, -2))
    return SurfaceJet(dX=dX, ddX=ddX, point=X)


def jets_on_grid(jet_fn, axes):
    """Evaluate an analytic jet constructor on a tensor grid of points."""
    axes = [np.asarray(a, dtype=float) for a in axes]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return jet_fn(mesh)


@dataclass(frozen=True)
class ConnectionData:
    """Christoffel symbols and raw metric derivatives on a chart grid.

    ``gamma`` is indexed [..., l, i, j] for Gamma^l_ij and ``dg`` as
    [..., k, i, j] for d_k g_ij; ``spacing`` is the grid step used, kept
    so covariant derivatives difference with the same scheme.
    """

    gamma: np.ndarray
    dg: np.ndarray
    spacing: float


def christoffel(g_field, spacing):
    """Christoffel symbols of a sampled metric field.

    Gamma^l_ij = (1/2) g^{lk} (d_i g_jk + d_j g_ik - d_k g_ij), with the
    metric derivatives by central differences (one-sided at edges).
    """
    g_field = np.asarray(g_field, dtype=float)
    n = g_field.shape[-1]
    dg = _partials(g_field, spacing, n, 2)
    ginv = np.linalg.inv(g_field)
    # dg indexed [..., k, i, j]; term[..., k, i, j] = d_i g_jk + d_j g_ik - d_k g_ij
    d_i_g_jk = np.einsum("...ijk->...kij", dg)
    d_j_g_ik = np.einsum("...jik->...kij", dg)
    term = d_i_g_jk + d_j_g_ik - dg
    gamma = 0.5 * np.einsum("...lk,...kij->...lij", ginv, term)
    return ConnectionData(gamma=gamma, dg=dg, spacing=float(spacing))


def covariant_derivative_cov1(T, conn):
    """D_i T_j = d_i T_j - Gamma^k_ij T_k for a sampled covector field.

    ``T`` has shape (..., n); the result is indexed [..., i, j].
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[-1]
    dT = _partials(T, conn.spacing, n, 1)
    return dT - np.einsum("...kij,...k->...ij", conn.gamma, T)


def covariant_derivative_cov2(T, conn):
    """D_k T_ij = d_k T_ij - Gamma^l_ik T_lj - Gamma^l_jk T_il.

    ``T`` has shape (..., n, n); the result is indexed [..., k, i, j].
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[-1]
    dT = _partials(T, conn.spacing, n, 2)
    t1 = np.einsum("...lik,...lj->...kij", conn.gamma, T)
    t2 = np.einsum("...ljk,...il->...kij", conn.gamma, T)
    return dT - t1 - t2


def _flux_coefficient(jets, weight):
    forms = fundamental_forms(jets, weight)
    C = np.einsum("...ij,...jk,...kl->...il", forms.ginv, forms.a_g, forms.ginv)
    return forms, C * np.sqrt(forms.detg)[..., None, None]


def weighted_laplace_beltrami(psi, jets, weight, spacing):
    """Divergence-form discretization of the weighted Laplace-Beltrami
    operator (1/sqrt(det g)) d_i ( sqrt(det g) g^{ij} a_jk g^{kl} d_l psi ).

    Diagonal fluxes average the coefficient at cell midpoints, mixed
    terms difference the product of the coefficient with the transverse
    central gradient; on a flat chart with the area weight this is
    exactly the classical 5-point Laplacian.  The outermost ring of
    nodes, where the stencil leaves the grid, is NaN.
    """
    psi = np.asarray(psi, dtype=float)
    n = jets.n
    _grid_shape(psi, 0)
    forms, C = _flux_coefficient(jets, weight)
    h = float(spacing)
    acc = np.zeros_like(psi)
    for i in range(n):
        cii = C[..., i, i]
        up = 0.5 * (cii + _shift(cii, i, +1)) * (_shift(psi, i, +1) - psi)
        dn = 0.5 * (cii + _shift(cii, i, -1)) * (psi - _shift(psi, i, -1))
        acc = acc + (up - dn) / h**2
        for l in range(n):
            if l == i:
                continue
            grad_l = (_shift(psi, l, +1) - _shift(psi, l, -1)) / (2.0 * h)
            prod = C[..., i, l] * grad_l
            acc = acc + (_shift(prod, i, +1) - _shift(prod, i, -1)) / (2.0 * h)
    return acc / np.sqrt(forms.detg)


def laplace_beltrami_covariant(psi, jets, weight, spacing):
    """Covariant-form evaluation g^{ij}(D_i a_jk)g^{kl} d_l psi
    + g^{ij} a_jk g^{kl} D_il psi of the weighted Laplace-Beltrami
    operator.  Agrees with the divergence form to O(h^2) at interior
    nodes; edge values use one-sided differences and are less accurate.
    """
    psi = np.asarray(psi, dtype=float)
    n = jets.n
    forms = fundamental_forms(jets, weight)
    conn = christoffel(forms.g, spacing)
    Da = covariant_derivative_cov2(forms.a_g, conn)
    dpsi = np.stack([np.gradient(psi, spacing, axis=k, edge_order=2)
                     for k in range(n)], axis=-1)
    ddpsi = np.stack([[np.gradient(dpsi[..., l], spacing, axis=k, edge_order=2)
                       for l in range(n)] for k in range(n)], axis=0)
    ddpsi = np.moveaxis(ddpsi, (0, 1), (-2, -1))
    ddpsi = 0.5 * (ddpsi + np.swapaxes(ddpsi, -1, -2))
    hess_cov = ddpsi - np.einsum("...kil,...k->...il", conn.gamma, dpsi)
    t1 = np.einsum("...ij,...ijk,...kl,...l->...", forms.ginv, Da, forms.ginv,
                   dpsi)
    t2 = np.einsum("...ij,...jk,...kl,...il->...", forms.ginv, forms.a_g,
                   forms.ginv, hess_cov)
    return t1 + t2


@dataclass(frozen=True)
class NormalEquationField:
    """Residual of the normal equation and its first-order coefficients."""

    residual: np.ndarray
    p_coeff: np.ndarray


def normal_equation_residual(jets, weight, hfun, spacing):
    """Residual of the prescribed-curvature equation for the normal.

    Assembles Delta_G N + P^i d_i N + (tr(g^-1 A_G S^2) - <grad H, N>) N
    + grad H on the chart grid.  The covariant derivative of the
    weighted form is reduced to D_i a_jk = <V_jk, d_i N> with
    V^mu_jk = <d_j X, dG/dp_mu (N) d_k X>, and the coefficients

        P^q = -g^{ij} (D_i a_jp) g^{pq}
              - g^{ij} g^{kl} b_li <V_jk, d_p X> g^{pq}

    vanish identically for weights that are Hessians of a 1-homogeneous
    integrand.  ``hfun`` may be None (constant prescription, gradient
    terms dropped) or provide ``grad(x, z) -> R^{n+1}`` with the jets
    carrying base points.  The outermost ring is NaN from the flux form.
    """
    n = jets.n
    forms = fundamental_forms(jets, weight)
    nu = forms.normal
    S = shape_operator(forms)
    M = np.einsum("...ij,...jk->...ik", forms.ginv, forms.a_g)
    energy = np.einsum("...ij,...jk,...ki->...", M, S, S)

    lap_n = np.stack([weighted_laplace_beltrami(nu[..., m], jets, weight,
                                                spacing)
                      for m in range(n + 1)], axis=-1)
    dN = np.stack([np.gradient(nu, spacing, axis=k, edge_order=2)
                   for k in range(n)], axis=-2)  # [..., i, mu]

    dG = weight.derivative(nu)  # [..., m, a, b]
    V = np.einsum("...ja,...mab,...kb->...jkm", jets.dX, dG, jets.dX)
    Da = np.einsum("...jkm,...im->...ijk", V, dN)  # D_i a_jk
    p1 = -np.einsum("...ij,...ijp,...pq->...q", forms.ginv, Da, forms.ginv)
    VX = np.einsum("...jkm,...pm->...jkp", V, jets.dX)
    p2 = -np.einsum("...ij,...kl,...li,...jkp,...pq->...q", forms.ginv,
                    forms.ginv, forms.b, VX, forms.ginv)
    P = p1 + p2

    res = lap_n + np.einsum("...i,...im->...m", P, dN) + energy[..., None] * nu
    if hfun is not None:
        if jets.point is None:
            raise InvalidParam(
                "jets must carry base points for a position-dependent "
                "curvature prescription")
        x = jets.point[..., :n]
        z = jets.point[..., n]
        gradH = np.asarray(hfun.grad(x, z), dtype=float)
        res = res + gradH - np.einsum("...m,...m->...", gradH, nu)[..., None] * nu
    return NormalEquationField(residual=res, p_coeff=P)
