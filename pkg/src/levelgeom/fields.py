"""Scalar fields on boxes in R^d with exact second-order jets.

Every field exposes a batched evaluator :meth:`ScalarField.jets` returning
values, gradients and Hessians for an ``(N, d)`` array of points, plus a cheap
value-only path used by meshing and finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, ParseError
from .expr import VARIABLES, parse_expression
from .taylor import Taylor2


@dataclass(frozen=True)
class BoundingBox:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise ConfigError("box corners have different dimensions")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ConfigError(f"box requires lo < hi componentwise, got {lo} / {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, lo, hi, d):
        return cls((lo,) * d, (hi,) * d)

    @classmethod
    def unbounded(cls, d):
        return cls((-np.inf,) * d, (np.inf,) * d)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def lo_array(self):
        return np.asarray(self.lo)

    @property
    def hi_array(self):
        return np.asarray(self.hi)

    @property
    def volume(self):
        return float(np.prod(self.hi_array - self.lo_array))

    @property
    def is_finite(self):
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains(self, points):
        p = np.atleast_2d(points)
        return np.all((p >= self.lo_array) & (p <= self.hi_array), axis=1)

    def contains_box(self, other):
        return all(a <= c for a, c in zip(self.lo, other.lo)) and all(
            b >= e for b, e in zip(self.hi, other.hi)
        )


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        if not self.a <= self.b:
            raise ConfigError(f"interval requires a <= b, got [{self.a}, {self.b}]")

    @property
    def length(self):
        return self.b - self.a

    def __iter__(self):
        return iter((self.a, self.b))


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and (symmetric) Hessian of a field at one point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def grad_norm(self):
        return float(np.linalg.norm(self.gradient))


def _symmetrize(h):
    return 0.5 * (h + np.swapaxes(h, -1, -2))


class ScalarField:
    """A C^2 function on (a subset of) a box in R^d.

    Subclasses implement :meth:`_jets` and :meth:`_values`; the public
    methods add domain checking and Hessian symmetrization.
    """

    name = "field"

    def __init__(self, dim, domain=None, grad_scale=1.0):
        if dim < 3:
            raise ConfigError(f"fields need dimension d >= 3, got {dim}")
        self.dim = int(dim)
        self.domain = domain if domain is not None else BoundingBox.unbounded(dim)
        if self.domain.dim != self.dim:
            raise ConfigError("domain box dimension does not match field dimension")
        self.grad_scale = float(grad_scale)

    # -- subclass hooks -----------------------------------------------------------
    def _jets(self, x):
        raise NotImplementedError

    def _values(self, x):
        return self._jets(x)[0]

    def _excluded(self, x):
        """Mask of points removed from the domain beyond the box (e.g. a singular axis)."""
        return np.zeros(len(x), dtype=bool)

    # -- public API ---------------------------------------------------------------
    def in_domain(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return self.domain.contains(x) & ~self._excluded(x)

    def check_domain(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if x.shape[1] != self.dim:
            raise DomainError(f"expected {self.dim}-dimensional points, got {x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise DomainError("point has non-finite coordinates")
        ok = self.in_domain(x)
        if not np.all(ok):
            bad = x[np.argmin(ok)]
            raise DomainError(f"point {bad.tolist()} lies outside the domain of {self.name}")
        return x

    def jets(self, points, check=True):
        """Batched jets: returns ``(values (N,), gradients (N, d), hessians (N, d, d))``."""
        x = self.check_domain(points) if check else np.atleast_2d(np.asarray(points, dtype=float))
        v, g, h = self._jets(x)
        return v, g, _symmetrize(h)

    def values(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return self._values(x)

    def eval_jet(self, p):
        v, g, h = self.jets(np.asarray(p, dtype=float)[None, :])
        return Jet2(float(v[0]), g[0].copy(), h[0].copy())

    def __call__(self, points):
        return self.values(points)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} d={self.dim}>"


def eval_jet(field, p):
    """Value, gradient and symmetrized Hessian of ``field`` at ``p``."""
    return field.eval_jet(p)


# -- built-in analytic fields ------------------------------------------------------


class QuadricField(ScalarField):
    """f(p) = p^T A p + b . p + c with A symmetric."""

    def __init__(self, A, b=None, c=0.0, name="quadric", domain=None):
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            A = np.diag(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError("quadric coefficient matrix must be square")
        super().__init__(A.shape[0], domain)
        self.A = _symmetrize(A)
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)
        self.name = name

    def _jets(self, x):
        Ax = x @ self.A
        v = np.einsum("ni,ni->n", x, Ax) + x @ self.b + self.c
        g = 2.0 * Ax + self.b
        h = np.broadcast_to(2.0 * self.A, (len(x), self.dim, self.dim)).copy()
        return v, g, h

    def _values(self, x):
        return np.einsum("ni,ni->n", x, x @ self.A) + x @ self.b + self.c


class SphereField(QuadricField):
    """f = |p|^2; level t is the sphere of radius sqrt(t)."""

    def __init__(self, dim=3, domain=None):
        super().__init__(np.eye(dim), name="sphere", domain=domain)

    def _jets(self, x):
        v = np.einsum("ni,ni->n", x, x)
        h = np.broadcast_to(2.0 * np.eye(self.dim), (len(x), self.dim, self.dim)).copy()
        return v, 2.0 * x, h

    def _values(self, x):
        return np.einsum("ni,ni->n", x, x)


class DoubleWellField(ScalarField):
    """f = (x^2 - 1)^2 + sum of squares of the remaining coordinates.

    Minima at (+-1, 0, ...) with value 0, an index-1 saddle at the origin with value 1.
    """

    name = "double_well"

    def __init__(self, dim=3, domain=None):
        super().__init__(dim, domain)

    def _jets(self, x):
        x0 = x[:, 0]
        rest = x[:, 1:]
        q = x0 * x0 - 1.0
        v = q * q + np.einsum("ni,ni->n", rest, rest)
        g = 2.0 * x
        g[:, 0] = 4.0 * x0 * q
        h = np.zeros((len(x), self.dim, self.dim))
        idx = np.arange(1, self.dim)
        h[:, idx, idx] = 2.0
        h[:, 0, 0] = 12.0 * x0 * x0 - 4.0
        return v, g, h

    def _values(self, x):
        q = x[:, 0] ** 2 - 1.0
        return q * q + np.einsum("ni,ni->n", x[:, 1:], x[:, 1:])


class TorusField(ScalarField):
    """f = (sqrt(x^2 + y^2) - R)^2 + z^2 in R^3.

    Level t in (0, R^2) is a torus of tube radius sqrt(t).  The z-axis, where
    f fails to be differentiable, is excluded from the domain: points closer
    than ``axis_clearance`` to it raise :class:`DomainError` in checked
    evaluation.
    """

    name = "torus"

    def __init__(self, R=2.0, domain=None, axis_clearance=None):
        R = float(R)
        if R <= 0:
            raise ConfigError("torus major radius must be positive")
        super().__init__(3, domain)
        self.R = R
        self.axis_clearance = 1e-9 * R if axis_clearance is None else float(axis_clearance)

    def _excluded(self, x):
        return np.hypot(x[:, 0], x[:, 1]) <= self.axis_clearance

    def _jets(self, x):
        R = self.R
        px, py, pz = x[:, 0], x[:, 1], x[:, 2]
        rho = np.hypot(px, py)
        # axis points only reach here through unchecked batch evaluation
        rho_safe = np.where(rho > 0, rho, np.finfo(float).tiny)
        s = rho - R
        v = s * s + pz * pz
        ux, uy = px / rho_safe, py / rho_safe
        g = np.stack([2.0 * s * ux, 2.0 * s * uy, 2.0 * pz], axis=1)
        # d/dx_i (2 s u_j) = 2 u_i u_j + 2 s (delta_ij - u_i u_j) / rho
        k = s / rho_safe
        h = np.zeros((len(x), 3, 3))
        h[:, 0, 0] = 2.0 * ux * ux + 2.0 * k * (1.0 - ux * ux)
        h[:, 1, 1] = 2.0 * uy * uy + 2.0 * k * (1.0 - uy * uy)
        h[:, 0, 1] = h[:, 1, 0] = 2.0 * ux * uy - 2.0 * k * ux * uy
        h[:, 2, 2] = 2.0
        return v, g, h

    def _values(self, x):
        s = np.hypot(x[:, 0], x[:, 1]) - self.R
        return s * s + x[:, 2] ** 2


class ExpressionField(ScalarField):
    """Field defined by a parsed expression; jets by forward-mode Taylor arithmetic."""

    def __init__(self, source, tree, dim, domain=None):
        super().__init__(dim, domain)
        self.source = source
        self.tree = tree
        self.name = source

    def _env(self, x, jets):
        env = {}
        for i, var in enumerate(VARIABLES[: self.dim]):
            env[var] = Taylor2.variable(x, i) if jets else x[:, i]
        return env

    def _jets(self, x):
        n = len(x)
        out = self.tree.evaluate(self._env(x, True))
        if not isinstance(out, Taylor2):  # constant expression
            out = Taylor2.constant(out, n, self.dim)
        return out.v, out.g, out.h

    def _values(self, x):
        out = self.tree.evaluate(self._env(x, False))
        return np.broadcast_to(np.asarray(out, dtype=float), (len(x),)).copy()


def parse_field(expr, d, domain=None):
    """Build a field from an expression in the DSL over the first ``d`` of x, y, z, w, v."""
    if d not in (3, 4, 5):
        raise ConfigError(f"expression fields support d in {{3, 4, 5}}, got {d}")
    if not isinstance(expr, str) or not expr.strip():
        raise ParseError("empty expression", 0)
    tree = parse_expression(expr, d)
    return ExpressionField(expr, tree, d, domain)


BUILTINS = ("sphere", "double_well", "torus", "quadric")


def builtin_field(name, dim=3, domain=None, **params):
    """Construct a built-in analytic field by name.

    ``torus`` takes ``R``; ``quadric`` takes ``A`` (matrix or diagonal), and
    optionally ``b`` and ``c``.
    """
    if name == "sphere":
        return SphereField(dim, domain)
    if name == "double_well":
        return DoubleWellField(dim, domain)
    if name == "torus":
        if dim != 3:
            raise ConfigError("torus field is defined in dimension 3 only")
        return TorusField(params.get("R", 2.0), domain)
    if name == "quadric":
        if "A" not in params:
            raise ConfigError("quadric needs coefficient matrix A")
        return QuadricField(params["A"], params.get("b"), params.get("c", 0.0), domain=domain)
    raise ConfigError(f"unknown builtin field {name!r}; choose from {', '.join(BUILTINS)}")


def finite_diff_jet(field, p, h=1e-4):
    """Central-difference jet of ``field`` at ``p`` (O(h^2) gradient and Hessian).

    Only value evaluations are used, so this is independent of the analytic /
    automatic-differentiation path.
    """
    if not h > 0:
        raise ConfigError("finite-difference step must be positive")
    p = np.asarray(p, dtype=float)
    d = field.dim
    lo = p - 2 * h
    hi = p + 2 * h
    if not (np.all(field.domain.contains(lo[None])) and np.all(field.domain.contains(hi[None]))):
        raise DomainError(f"finite-difference stencil around {p.tolist()} leaves the domain box")
    eye = np.eye(d) * h
    # stencil: centre, +-h e_i, and +-h e_i +-h e_j
    pts = [p]
    for i in range(d):
        pts += [p + eye[i], p - eye[i]]
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    for i, j in pairs:
        pts += [p + eye[i] + eye[j], p + eye[i] - eye[j], p - eye[i] + eye[j], p - eye[i] - eye[j]]
    pts = np.asarray(pts)
    field.check_domain(pts)
    f = field.values(pts)
    f0 = f[0]
    grad = np.empty(d)
    hess = np.empty((d, d))
    for i in range(d):
        fp, fm = f[1 + 2 * i], f[2 + 2 * i]
        grad[i] = (fp - fm) / (2 * h)
        hess[i, i] = (fp - 2 * f0 + fm) / (h * h)
    base = 1 + 2 * d
    for k, (i, j) in enumerate(pairs):
        fpp, fpm, fmp, fmm = f[base + 4 * k : base + 4 * k + 4]
        hess[i, j] = hess[j, i] = (fpp - fpm - fmp + fmm) / (4 * h * h)
    return Jet2(float(f0), grad, hess)
