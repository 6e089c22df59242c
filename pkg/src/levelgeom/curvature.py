"""Mean and Gaussian curvature of level hypersurfaces from gradient and Hessian.

With unit normal N = -grad f / |grad f| and Q the Hessian,

    H = (|grad f|^2 tr Q - Q(grad f)) / (n |grad f|^3)
    K = Q*(grad f) / |grad f|^(n+2)

where Q* is the quadratic form of the adjugate of Q.  With this orientation a
round sphere f = |p|^2 has H = 1/r and K = 1/r^n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, NearCriticalError

GRAD_FLOOR = 1e-10


@dataclass(frozen=True)
class CurvatureSample:
    H: float
    K: float
    normal: np.ndarray
    grad_norm: float


def grad_floor(field=None):
    """Gradient norm below which a point is treated as numerically critical."""
    scale = 1.0 if field is None else field.grad_scale
    return GRAD_FLOOR * scale


# -- adjugate ----------------------------------------------------------------------


def _adjugate3(S):
    a, b, c = S[..., 0, 0], S[..., 0, 1], S[..., 0, 2]
    d, e, f = S[..., 1, 0], S[..., 1, 1], S[..., 1, 2]
    g, h, i = S[..., 2, 0], S[..., 2, 1], S[..., 2, 2]
    out = np.empty(S.shape, dtype=float)
    out[..., 0, 0] = e * i - f * h
    out[..., 0, 1] = c * h - b * i
    out[..., 0, 2] = b * f - c * e
    out[..., 1, 0] = f * g - d * i
    out[..., 1, 1] = a * i - c * g
    out[..., 1, 2] = c * d - a * f
    out[..., 2, 0] = d * h - e * g
    out[..., 2, 1] = b * g - a * h
    out[..., 2, 2] = a * e - b * d
    return out


def adjugate_cofactor(S):
    """Adjugate by explicit cofactors; works on stacks of matrices ``(..., d, d)``."""
    S = np.asarray(S, dtype=float)
    d = S.shape[-1]
    if d == 1:
        return np.ones_like(S)
    if d == 2:
        out = np.empty_like(S)
        out[..., 0, 0] = S[..., 1, 1]
        out[..., 1, 1] = S[..., 0, 0]
        out[..., 0, 1] = -S[..., 0, 1]
        out[..., 1, 0] = -S[..., 1, 0]
        return out
    if d == 3:
        return _adjugate3(S)
    out = np.empty_like(S)
    idx = np.arange(d)
    for i in range(d):
        for j in range(d):
            minor = S[..., idx[idx != i], :][..., :, idx[idx != j]]
            # adj is the transpose of the cofactor matrix
            with np.errstate(divide="ignore", invalid="ignore"):
                out[..., j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return out


def adjugate(S):
    """Classical adjoint of a square matrix (exists for singular ``S`` too).

    d <= 3 uses cofactors directly.  For d > 3 the LU route det(S) S^-1 is
    taken when S is safely nonsingular and then checked against the defining
    identity adj(S) S = det(S) I; otherwise explicit cofactors are used.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ConfigError("adjugate needs a square matrix")
    d = S.shape[0]
    if d <= 3:
        return adjugate_cofactor(S)
    scale = np.linalg.norm(S)
    with np.errstate(divide="ignore", invalid="ignore"):  # LU of an exactly singular S
        det = np.linalg.det(S)
    if scale > 0 and abs(det) > 1e-12 * scale**d:
        adj = det * np.linalg.inv(S)
        resid = np.linalg.norm(adj @ S - det * np.eye(d))
        if resid <= 1e-12 * scale**d:
            return adj
    return adjugate_cofactor(S)


# -- pointwise curvature ---------------------------------------------------------------


def _check_regular(jet, floor):
    norm = float(np.linalg.norm(jet.gradient))
    if not norm > floor:
        raise NearCriticalError(f"|grad f| = {norm:.3g} is below the critical floor {floor:.3g}")
    return norm


def _default_n(jet, n):
    return len(jet.gradient) - 1 if n is None else int(n)


def mean_curvature(jet, n=None, floor=GRAD_FLOOR):
    n = _default_n(jet, n)
    norm = _check_regular(jet, floor)
    g, Q = jet.gradient, jet.hessian
    return float((norm**2 * np.trace(Q) - g @ Q @ g) / (n * norm**3))


def gaussian_curvature(jet, n=None, floor=GRAD_FLOOR):
    n = _default_n(jet, n)
    norm = _check_regular(jet, floor)
    g = jet.gradient
    return float(g @ adjugate(jet.hessian) @ g / norm ** (n + 2))


def unit_normal(jet):
    norm = float(np.linalg.norm(jet.gradient))
    if norm == 0.0:
        raise NearCriticalError("unit normal undefined at a zero gradient")
    return -jet.gradient / norm


def curvature_sample(jet, n=None, floor=GRAD_FLOOR):
    return CurvatureSample(
        H=mean_curvature(jet, n, floor),
        K=gaussian_curvature(jet, n, floor),
        normal=unit_normal(jet),
        grad_norm=float(np.linalg.norm(jet.gradient)),
    )


# -- batched curvature -----------------------------------------------------------------


def curvature_batch(grads, hess, floor=GRAD_FLOOR):
    """Vectorized ``(H, K, regular)`` for stacks of gradients and Hessians.

    Points with ``|grad| <= floor`` get H = K = 0 and ``regular = False``.
    """
    grads = np.asarray(grads, dtype=float)
    hess = np.asarray(hess, dtype=float)
    d = grads.shape[1]
    if d == 3:
        return _kernels.curvature3(grads, hess, floor)
    n = d - 1
    n2 = np.einsum("ni,ni->n", grads, grads)
    norm = np.sqrt(n2)
    regular = norm > floor
    safe = np.where(regular, norm, 1.0)
    tr = np.trace(hess, axis1=1, axis2=2)
    qg = np.einsum("ni,nij,nj->n", grads, hess, grads)
    qstar = np.einsum("ni,nij,nj->n", grads, adjugate_cofactor(hess), grads)
    H = np.where(regular, (n2 * tr - qg) / (n * safe**3), 0.0)
    K = np.where(regular, qstar / safe ** (n + 2), 0.0)
    return H, K, regular


# -- divergence oracle -----------------------------------------------------------------


def divergence_H_batch(field, points, h=1e-4, n=None, floor=GRAD_FLOOR):
    """(1/n) div(grad f / |grad f|) by central differences of the unit gradient.

    Uses only gradients at shifted points, never the Hessian, so it checks the
    closed-form mean curvature independently.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    d = field.dim
    n = d - 1 if n is None else int(n)
    total = np.zeros(len(x))
    for i in range(d):
        step = np.zeros(d)
        step[i] = h
        plus, minus = x + step, x - step
        _, gp, _ = field.jets(plus)
        _, gm, _ = field.jets(minus)
        np_, nm = np.linalg.norm(gp, axis=1), np.linalg.norm(gm, axis=1)
        if np.any(np_ <= floor) or np.any(nm <= floor):
            raise NearCriticalError("divergence stencil touches a near-critical point")
        total += (gp[:, i] / np_ - gm[:, i] / nm) / (2 * h)
    return total / n


def divergence_check_H(field, p, h=1e-4, n=None, floor=GRAD_FLOOR):
    return float(divergence_H_batch(field, np.asarray(p, dtype=float)[None, :], h, n, floor)[0])
