"""Critical points, regular-interval decompositions and near-critical growth probes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import curvature_batch, grad_floor
from .errors import ConfigError, NearCriticalError, NotMorseError
from .fields import BoundingBox, Interval

CRITICAL_TOL = 1e-9
NONDEGENERACY_FLOOR = 1e-6
DEDUP_RADIUS = 1e-6
MAX_NEWTON = 50


@dataclass(frozen=True)
class CriticalPoint:
    location: tuple
    value: float
    morse_index: int
    hessian_eigenvalues: tuple

    def to_json(self):
        return {
            "location": list(self.location),
            "value": self.value,
            "index": self.morse_index,
            "eigenvalues": list(self.hessian_eigenvalues),
        }


@dataclass(frozen=True)
class RegularDecomposition:
    interval: Interval
    critical_values: tuple
    intervals: tuple  # ((c_j, c_j+1), ...) open intervals of regular values

    def to_json(self):
        return {
            "interval": [self.interval.a, self.interval.b],
            "critical_values": list(self.critical_values),
            "intervals": [list(iv) for iv in self.intervals],
        }


def _seed_points(box, seed_grid):
    d = box.dim
    lo, hi = box.lo_array, box.hi_array
    centers = (np.arange(seed_grid) + 0.5) / seed_grid
    mesh = np.meshgrid(*([centers] * d), indexing="ij")
    u = np.stack([m.ravel() for m in mesh], axis=1)
    return lo + u * (hi - lo)


def _newton(field, x, box):
    """Batched Newton on grad f = 0.

    Points keep iterating after |grad f| <= CRITICAL_TOL until the step itself
    vanishes, so a degenerate zero (where Newton only converges linearly) is
    approached closely enough for its Hessian to show the degeneracy.
    """
    lo, hi = box.lo_array, box.hi_array
    alive = np.ones(len(x), dtype=bool)
    converged = np.zeros(len(x), dtype=bool)
    for _ in range(2 * MAX_NEWTON):
        active = np.flatnonzero(alive & ~converged)
        if active.size == 0:
            break
        _, g, h = field.jets(x[active], check=False)
        gn = np.linalg.norm(g, axis=1)
        step = np.einsum("nij,nj->ni", np.linalg.pinv(h), g)
        xa = x[active]
        tiny = np.linalg.norm(step, axis=1) <= 1e-13 * (1.0 + np.linalg.norm(xa, axis=1))
        done = (gn <= CRITICAL_TOL) & tiny
        converged[active[done]] = True
        todo = active[~done]
        if todo.size == 0:
            break
        x[todo] = x[todo] - step[~done]
        inside = np.all((x[todo] >= lo) & (x[todo] <= hi), axis=1) & np.all(np.isfinite(x[todo]), axis=1)
        inside &= field.in_domain(np.where(np.isfinite(x[todo]), x[todo], 0.0))
        alive[todo[~inside]] = False
    # iteration budget spent: accept anything that met the gradient tolerance
    rest = np.flatnonzero(alive & ~converged)
    if rest.size:
        _, g, _ = field.jets(x[rest], check=False)
        converged[rest[np.linalg.norm(g, axis=1) <= CRITICAL_TOL]] = True
    return x[converged & alive]


def find_critical_points(field, box, seed_grid=8, interval=None):
    """Newton's method on grad f = 0 from a regular grid of seeds.

    Converged points are deduplicated and classified by Hessian eigenvalues.
    A degenerate critical point raises :class:`NotMorseError`, unless
    ``interval`` is given and its value lies outside it (such points do not
    affect anything computed on f^-1([a, b])).  Completeness is heuristic.
    """
    if seed_grid < 8:
        raise ConfigError("seed grid needs at least 8 nodes per axis")
    if not isinstance(box, BoundingBox):
        lo, hi = box
        box = BoundingBox.cube(lo, hi, field.dim)
    seeds = _seed_points(box, seed_grid)
    seeds = seeds[field.in_domain(seeds)]
    roots = _newton(field, seeds.copy(), box)
    span = box.hi_array - box.lo_array
    unique = []
    for p in roots:
        u = (p - box.lo_array) / span
        if all(np.linalg.norm(u - q) > DEDUP_RADIUS for q, _ in unique):
            unique.append((u, p))
    out = []
    for _, p in unique:
        jet = field.eval_jet(p)
        eig = np.linalg.eigvalsh(jet.hessian)
        scale = max(1.0, float(np.max(np.abs(eig))))
        if np.min(np.abs(eig)) < NONDEGENERACY_FLOOR * scale:
            if interval is not None and not (interval.a <= jet.value <= interval.b):
                continue
            raise NotMorseError(
                f"degenerate critical point at {p.tolist()} (value {jet.value:.6g}, "
                f"Hessian eigenvalues {eig.tolist()})",
                location=tuple(p.tolist()),
            )
        out.append(
            CriticalPoint(
                location=tuple(float(c) for c in p),
                value=float(jet.value),
                morse_index=int(np.count_nonzero(eig < 0)),
                hessian_eigenvalues=tuple(float(e) for e in eig),
            )
        )
    out.sort(key=lambda c: (c.value, c.location))
    return out


def regular_decomposition(cps, interval, value_tol=1e-9):
    """Split (a, b) at the critical values it contains."""
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    a, b = interval.a, interval.b
    values = []
    for v in sorted(c.value for c in cps):
        if a <= v <= b and (not values or v - values[-1] > value_tol * max(1.0, abs(v))):
            values.append(v)
    if a == b:
        return RegularDecomposition(interval, tuple(values), ())
    cuts = [a] + [v for v in values if a < v < b] + [b]
    intervals = tuple((lo, hi) for lo, hi in zip(cuts[:-1], cuts[1:]) if hi > lo)
    return RegularDecomposition(interval, tuple(values), intervals)


@dataclass(frozen=True)
class ProbeTable:
    """Growth statistics at each probe radius around a critical point.

    ``h_stat = r max|H|``, ``k_stat = r^(n-1) max|K grad f|`` and
    ``grad_stat = min|grad f| / r``.
    """

    radii: tuple
    h_stat: tuple
    k_stat: tuple
    grad_stat: tuple

    def ratios(self):
        h, k, g = (np.asarray(s) for s in (self.h_stat, self.k_stat, self.grad_stat))
        return {
            "h": float(h.max() / h[0]) if h[0] > 0 else (0.0 if h.max() == 0 else np.inf),
            "k": float(k.max() / k[0]) if k[0] > 0 else (0.0 if k.max() == 0 else np.inf),
            "grad": float(g[0] / g.min()) if g.min() > 0 else np.inf,
        }

    def bounded(self, limit=10.0):
        return all(r < limit for r in self.ratios().values())

    def to_json(self):
        return {
            "radii": list(self.radii),
            "r_max_abs_H": list(self.h_stat),
            "r_pow_max_abs_K_grad": list(self.k_stat),
            "min_grad_over_r": list(self.grad_stat),
        }


def singularity_probe(field, cp, radii, samples=256, seed=0, others=()):
    """Sample spheres of decreasing radius around ``cp`` and record the growth statistics."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(r2 >= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ConfigError("probe radii must be positive and strictly decreasing")
    center = np.asarray(cp.location, dtype=float)
    for other in others:
        dist = np.linalg.norm(np.asarray(other.location) - center)
        if 0 < dist <= radii[0]:
            raise NearCriticalError(f"critical point {list(other.location)} lies inside the probe ball")
    d = field.dim
    n = d - 1
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(samples, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    floor = grad_floor(field)
    hs, ks, gs = [], [], []
    for r in radii:
        pts = center + r * dirs
        _, g, h = field.jets(pts)
        gn = np.linalg.norm(g, axis=1)
        if np.any(gn <= floor):
            raise NearCriticalError(f"another critical point inside the probe ball at radius {r:g}")
        H, K, _ = curvature_batch(g, h, floor)
        hs.append(float(r * np.max(np.abs(H))))
        ks.append(float(r ** (n - 1) * np.max(np.abs(K) * gn)))
        gs.append(float(np.min(gn) / r))
    return ProbeTable(tuple(radii), tuple(hs), tuple(ks), tuple(gs))
