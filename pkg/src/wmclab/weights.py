"""Anisotropy weight matrices G(p) and their admissibility checks.

A weight matrix is a symmetric (n+1)x(n+1) matrix field over nonzero
directions p with three structural properties: p lies in the kernel of
G(p), G is homogeneous of degree -1 (t*G(t*p) = G(p) for t > 0), and
G(p) is positive definite on the hyperplane orthogonal to p.  The area
weight G(p) = |p|^-3 (|p|^2 E - p p^T) recovers classical mean curvature;
Hessians of 1-homogeneous elliptic integrands give the general case.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import InvalidParam, ValidationFailed, ZeroVector

# Default tolerances for the sampled admissibility checks.
TOL_SYMMETRY = 1e-12
TOL_KERNEL = 1e-10
TOL_HOMOGENEITY = 1e-9
HOMOGENEITY_SCALES = (0.5, 2.0, 10.0)


def sphere_samples(n, count, seed=0):
    """Low-discrepancy sample of unit vectors in R^(n+1).

    Sobol points mapped through the inverse normal CDF and normalized;
    deterministic for a fixed seed.

    Parameters
    ----------
    n : int
        Intrinsic dimension; vectors live on the n-sphere in R^(n+1).
    count : int
        Number of samples.
    seed : int
        Scramble seed for the Sobol sequence.

    Returns
    -------
    ndarray of shape (count, n+1)
    """
    eng = qmc.Sobol(d=n + 1, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # non-power-of-two draws only forfeit balance, which we do not need
        warnings.simplefilter("ignore", UserWarning)
        u = eng.random(count)
    # shift away from {0,1} where ndtri is infinite
    u = u * (1 - 2e-9) + 1e-9
    z = ndtri(u)
    nrm = np.linalg.norm(z, axis=-1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return z / nrm


def _check_nonzero(p):
    nrm = np.linalg.norm(p, axis=-1)
    if np.any(nrm == 0):
        raise ZeroVector("weight matrix evaluated at p = 0")


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetric matrix field p -> G(p) defining an anisotropy.

    ``evaluator`` acts on arrays whose last axis is the direction; it must
    return matching arrays with two trailing matrix axes.  ``deriv``, when
    provided, returns the closed-form partials dG/dp_m indexed as
    ``[..., m, i, j]``; otherwise derivatives fall back to central
    differences with relative step ``fd_step``.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-5

    def __call__(self, p):
        p = np.asarray(p, dtype=float)
        _check_nonzero(p)
        return self.evaluator(p)

    def derivative(self, p):
        """dG/dp_m at p, indexed [..., m, i, j]."""
        p = np.asarray(p, dtype=float)
        _check_nonzero(p)
        if self.deriv is not None:
            return self.deriv(p)
        d = p.shape[-1]
        out = np.empty(p.shape[:-1] + (d, d, d))
        scale = np.linalg.norm(p, axis=-1, keepdims=True) * self.fd_step
        for m in range(d):
            e = np.zeros(d)
            e[m] = 1.0
            gp = self.evaluator(p + scale * e)
            gm = self.evaluator(p - scale * e)
            out[..., m, :, :] = (gp - gm) / (2.0 * scale[..., None])
        return out

    def trace(self, p):
        g = self(p)
        return np.trace(g, axis1=-2, axis2=-1)


def area_weight():
    """The isotropic weight G(p) = |p|^-3 (|p|^2 E - p p^T).

    Its weighted mean curvature is the classical sum of principal
    curvatures; tr G(p) = n / |p|.
    """

    def ev(p):
        d = p.shape[-1]
        r = np.linalg.norm(p, axis=-1)[..., None, None]
        outer = p[..., :, None] * p[..., None, :]
        return (np.eye(d) * r**2 - outer) / r**3

    def dv(p):
        d = p.shape[-1]
        r = np.linalg.norm(p, axis=-1)[..., None, None, None]
        eye = np.eye(d)
        pm = p[..., :, None, None]
        pi = p[..., None, :, None]
        pj = p[..., None, None, :]
        # axes laid out as (m, i, j):
        #   -delta_{ij} p_m / r^3 - (delta_{im} p_j + delta_{jm} p_i) / r^3
        #   + 3 p_i p_j p_m / r^5
        dij_pm = eye * pm
        dim_pj = eye[:, :, None] * pj
        djm_pi = eye[:, None, :] * pi
        return -(dij_pm + dim_pj + djm_pi) / r**3 + 3.0 * pm * pi * pj / r**5

    return WeightMatrix(evaluator=ev, kind="area", deriv=dv)


def epsilon_regularized_weight(eps):
    """Hessian of F(p) = sqrt(p_1^2 + ... + p_n^2 + eps^2 p_{n+1}^2).

    ``eps = 1`` reproduces the area weight.  Closed form:
    G = M/F - (Mp)(Mp)^T / F^3 with M = diag(1, ..., 1, eps^2).
    """
    if eps <= 0:
        raise InvalidParam(f"eps must be positive, got {eps}")
    e2 = float(eps) ** 2

    def fval(p):
        q = np.array(p, dtype=float, copy=True)
        q[..., -1] *= eps
        return np.linalg.norm(q, axis=-1)

    def ev(p):
        d = p.shape[-1]
        mdiag = np.ones(d)
        mdiag[-1] = e2
        f = fval(p)[..., None, None]
        q = p * mdiag  # M p
        return np.diag(mdiag) / f - (q[..., :, None] * q[..., None, :]) / f**3

    def dv(p):
        d = p.shape[-1]
        mdiag = np.ones(d)
        mdiag[-1] = e2
        M = np.diag(mdiag)
        f = fval(p)[..., None, None, None]
        q = p * mdiag
        qm = q[..., :, None, None]
        qi = q[..., None, :, None]
        qj = q[..., None, None, :]
        # dG/dp_m = -M q_m / F^3 - (M_{im} q_j + M_{jm} q_i)/F^3 + 3 q_i q_j q_m / F^5
        t1 = -M * qm / f**3
        t2 = -(M[:, :, None] * qj + M[:, None, :] * qi) / f**3
        t3 = 3.0 * qm * qi * qj / f**5
        return t1 + t2 + t3

    return WeightMatrix(evaluator=ev, kind="eps-regularized",
                        params={"eps": float(eps)}, deriv=dv)


@dataclass(frozen=True)
class Integrand:
    """A 1-homogeneous scalar integrand F(p) with derivative evaluators.

    ``grad`` and ``hess`` may be omitted; they are then generated by
    central differences with relative step ``fd_step``.
    """

    f: Callable[[np.ndarray], np.ndarray]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: Optional[float] = None

    def _step(self):
        if self.fd_step is not None:
            return self.fd_step
        # first differences of grad tolerate a fine step; second differences
        # of f need a coarser one to keep roundoff below truncation
        return 1e-6 if self.grad is not None else 2e-4

    def hessian(self, p):
        p = np.asarray(p, dtype=float)
        if self.hess is not None:
            return self.hess(p)
        d = p.shape[-1]
        scale = np.linalg.norm(p, axis=-1, keepdims=True) * self._step()
        if self.grad is not None:
            out = np.empty(p.shape[:-1] + (d, d))
            for m in range(d):
                e = np.zeros(d)
                e[m] = 1.0
                out[..., m, :] = (self.grad(p + scale * e) - self.grad(p - scale * e)) \
                    / (2.0 * scale)
            return 0.5 * (out + np.swapaxes(out, -1, -2))
        out = np.empty(p.shape[:-1] + (d, d))
        f0 = self.f(p)
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = 1.0
            out[..., i, i] = (self.f(p + scale * ei) - 2.0 * f0
                             + self.f(p - scale * ei)) / scale[..., 0] ** 2
            for j in range(i + 1, d):
                ej = np.zeros(d)
                ej[j] = 1.0
                mixed = (self.f(p + scale * (ei + ej)) - self.f(p + scale * (ei - ej))
                         - self.f(p - scale * (ei - ej)) + self.f(p - scale * (ei + ej))) \
                    / (4.0 * scale[..., 0] ** 2)
                out[..., i, j] = mixed
                out[..., j, i] = mixed
        return out


def hessian_weight(integrand, n=2, validate=True, samples=200, seed=0):
    """Weight matrix G(p) = Hess F(p) for a 1-homogeneous integrand.

    Euler's relation makes the kernel property automatic for exactly
    1-homogeneous F; the construction still spot-checks all four axioms
    on a sample and raises ValidationFailed on violation unless
    ``validate=False``.  When the Hessian is generated by finite
    differences, the kernel and homogeneity tolerances are widened to the
    discretization noise floor.
    """
    w = WeightMatrix(evaluator=integrand.hessian, kind="hessian")
    if validate:
        if integrand.hess is not None:
            kernel_tol, hom_tol = TOL_KERNEL, TOL_HOMOGENEITY
        else:
            noise = 100.0 * integrand._step() ** 2
            kernel_tol = max(TOL_KERNEL, noise)
            hom_tol = max(TOL_HOMOGENEITY, noise)
        rep = validate_weight(w, n=n, samples=samples, seed=seed,
                              kernel_tol=kernel_tol, hom_tol=hom_tol)
        if not rep.passed:
            raise ValidationFailed(
                "hessian weight failed admissibility checks: " + rep.summary())
    return w


@dataclass
class WeightValidationReport:
    """Worst-case sampled violations of the four weight axioms."""

    samples: int
    worst_symmetry: float
    worst_kernel: float
    worst_homogeneity: float
    min_transverse_eig: float
    max_transverse_eig: float
    symmetry_ok: bool
    kernel_ok: bool
    homogeneity_ok: bool
    ellipticity_ok: bool

    @property
    def passed(self):
        return (self.symmetry_ok and self.kernel_ok and self.homogeneity_ok
                and self.ellipticity_ok)

    def summary(self):
        parts = [
            f"symmetry {'ok' if self.symmetry_ok else 'FAIL'} ({self.worst_symmetry:.3e})",
            f"kernel {'ok' if self.kernel_ok else 'FAIL'} ({self.worst_kernel:.3e})",
            f"homogeneity {'ok' if self.homogeneity_ok else 'FAIL'} ({self.worst_homogeneity:.3e})",
            f"ellipticity {'ok' if self.ellipticity_ok else 'FAIL'} "
            f"(transverse eigs in [{self.min_transverse_eig:.3e}, {self.max_transverse_eig:.3e}])",
        ]
        return "; ".join(parts)

    def as_dict(self):
        return {
            "samples": self.samples,
            "worst_symmetry": self.worst_symmetry,
            "worst_kernel": self.worst_kernel,
            "worst_homogeneity": self.worst_homogeneity,
            "min_transverse_eig": self.min_transverse_eig,
            "max_transverse_eig": self.max_transverse_eig,
            "symmetry_ok": self.symmetry_ok,
            "kernel_ok": self.kernel_ok,
            "homogeneity_ok": self.homogeneity_ok,
            "ellipticity_ok": self.ellipticity_ok,
            "passed": self.passed,
        }


def validate_weight(w, n=2, samples=1000, seed=0, sym_tol=TOL_SYMMETRY,
                    kernel_tol=TOL_KERNEL, hom_tol=TOL_HOMOGENEITY):
    """Spot-check symmetry, kernel, homogeneity, and ellipticity of a weight.

    Samples ``samples`` quasi-random unit directions p on the n-sphere,
    records the worst violation of each axiom, and compares against the
    given tolerances.  Failures are report entries, never exceptions.
    """
    ps = sphere_samples(n, samples, seed=seed)
    G = w(ps)
    gnorm = np.linalg.norm(G, axis=(-2, -1))
    scale = np.maximum(gnorm, 1e-30)

    sym = np.linalg.norm(G - np.swapaxes(G, -1, -2), axis=(-2, -1)) / scale
    ker = np.linalg.norm(np.einsum("kij,kj->ki", G, ps), axis=-1) / scale

    hom = 0.0
    for t in HOMOGENEITY_SCALES:
        Gt = w(t * ps) * t
        hom = max(hom, float(np.max(np.linalg.norm(Gt - G, axis=(-2, -1)) / scale)))

    # eigenvalues of G restricted to the hyperplane orthogonal to p
    mins = np.empty(samples)
    maxs = np.empty(samples)
    d = n + 1
    for k in range(samples):
        basis = _orthonormal_complement(ps[k])
        sub = basis.T @ (0.5 * (G[k] + G[k].T)) @ basis
        ev = np.linalg.eigvalsh(sub)
        mins[k] = ev[0]
        maxs[k] = ev[-1]

    return WeightValidationReport(
        samples=samples,
        worst_symmetry=float(np.max(sym)),
        worst_kernel=float(np.max(ker)),
        worst_homogeneity=float(hom),
        min_transverse_eig=float(np.min(mins)),
        max_transverse_eig=float(np.max(maxs)),
        symmetry_ok=bool(np.max(sym) <= sym_tol),
        kernel_ok=bool(np.max(ker) <= kernel_tol),
        homogeneity_ok=bool(hom <= hom_tol),
        ellipticity_ok=bool(np.min(mins) > 0.0),
    )


def _orthonormal_complement(p):
    """Columns form an orthonormal basis of the hyperplane orthogonal to p."""
    d = len(p)
    q, _ = np.linalg.qr(np.column_stack([p] + [np.eye(d)[:, i] for i in range(d)]))
    return q[:, 1:d]


def trace_on_sphere_bound(w, n=2, samples=500, seed=0):
    """Min and max of tr G(p) over sampled unit directions p.

    The minimum enters the prescribed-curvature smallness and
    non-existence checks.
    """
    ps = sphere_samples(n, samples, seed=seed)
    tr = w.trace(ps)
    return float(np.min(tr)), float(np.max(tr))
