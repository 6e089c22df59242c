"""Truncated second-order forward-mode Taylor arithmetic.

A :class:`Taylor2` carries, for a batch of ``N`` points in ``R^d``, the value,
gradient and Hessian of some intermediate quantity.  Every operation
propagates all three exactly (up to rounding), so evaluating an expression
tree over ``Taylor2`` inputs yields the full second-order jet in one pass.
"""

from __future__ import annotations

import numpy as np


class Taylor2:
    __slots__ = ("v", "g", "h")

    def __init__(self, v, g, h):
        self.v = v  # (N,)
        self.g = g  # (N, d)
        self.h = h  # (N, d, d)

    @classmethod
    def variable(cls, x, index):
        """Seed the ``index``-th coordinate of points ``x`` (shape (N, d))."""
        n, d = x.shape
        g = np.zeros((n, d))
        g[:, index] = 1.0
        return cls(x[:, index].astype(float, copy=True), g, np.zeros((n, d, d)))

    @classmethod
    def constant(cls, c, n, d):
        return cls(np.full(n, float(c)), np.zeros((n, d)), np.zeros((n, d, d)))

    # -- elementary chain rule ------------------------------------------------
    def _unary(self, f0, f1, f2):
        """Compose with a scalar function given its value and first two derivatives at ``self.v``."""
        g = f1[:, None] * self.g
        h = f1[:, None, None] * self.h + f2[:, None, None] * (
            self.g[:, :, None] * self.g[:, None, :]
        )
        return Taylor2(f0, g, h)

    # -- arithmetic -------------------------------------------------------------
    def __neg__(self):
        return Taylor2(-self.v, -self.g, -self.h)

    def __add__(self, other):
        if not isinstance(other, Taylor2):
            return Taylor2(self.v + other, self.g, self.h)  # (N,) broadcasts
        return Taylor2(self.v + other.v, self.g + other.g, self.h + other.h)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Taylor2):
            return Taylor2(self.v - other, self.g, self.h)
        return Taylor2(self.v - other.v, self.g - other.g, self.h - other.h)

    def __rsub__(self, other):
        return Taylor2(other - self.v, -self.g, -self.h)

    def _lift(self, other):
        o = np.asarray(other, dtype=float)
        if o.ndim == 0:
            return None
        n, d = self.g.shape
        return Taylor2(np.broadcast_to(o, (n,)).copy(), np.zeros((n, d)), np.zeros((n, d, d)))

    def __mul__(self, other):
        if not isinstance(other, Taylor2):
            lifted = self._lift(other)
            if lifted is None:
                return Taylor2(self.v * other, self.g * other, self.h * other)
            other = lifted
        a, b = self, other
        cross = a.g[:, :, None] * b.g[:, None, :]
        h = (
            a.v[:, None, None] * b.h
            + b.v[:, None, None] * a.h
            + cross
            + np.swapaxes(cross, 1, 2)
        )
        g = a.v[:, None] * b.g + b.v[:, None] * a.g
        return Taylor2(a.v * b.v, g, h)

    __rmul__ = __mul__

    def reciprocal(self):
        u = self.v
        with np.errstate(divide="ignore", invalid="ignore"):
            r = 1.0 / u
            return self._unary(r, -r * r, 2.0 * r * r * r)

    def __truediv__(self, other):
        if not isinstance(other, Taylor2):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def powc(self, c):
        """Raise to a constant real (or integer) exponent ``c``."""
        c = float(c)
        u = self.v
        if c == 0.0:
            n, d = self.g.shape
            return Taylor2.constant(1.0, n, d)
        if c == 1.0:
            return self
        integral = c.is_integer()
        with np.errstate(divide="ignore", invalid="ignore"):
            if integral:
                k = int(c)
                f0 = u**k
                f1 = k * u ** (k - 1)
                f2 = k * (k - 1) * u ** (k - 2) if k != 1 else np.zeros_like(u)
            else:
                f0 = np.power(u, c)
                f1 = c * np.power(u, c - 1.0)
                f2 = c * (c - 1.0) * np.power(u, c - 2.0)
        return self._unary(f0, f1, f2)

    def __pow__(self, other):
        if isinstance(other, Taylor2):
            return (other * self.log()).exp()
        return self.powc(other)

    # -- transcendental functions --------------------------------------------
    def sin(self):
        s, c = np.sin(self.v), np.cos(self.v)
        return self._unary(s, c, -s)

    def cos(self):
        s, c = np.sin(self.v), np.cos(self.v)
        return self._unary(c, -s, -c)

    def exp(self):
        e = np.exp(self.v)
        return self._unary(e, e, e)

    def log(self):
        u = self.v
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._unary(np.log(u), 1.0 / u, -1.0 / (u * u))

    def sqrt(self):
        u = self.v
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.sqrt(u)
            return self._unary(s, 0.5 / s, -0.25 / (s * u))
