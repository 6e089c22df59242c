"""Stratified Monte Carlo integration over sublevel slabs f^-1([a, b]).

The box is split into ``strata**d`` equal cells with the same number of
uniform samples in each.  Cells are processed in fixed-size chunks; chunk
``k`` draws from an RNG stream derived from ``(seed, k)`` and chunk partial
sums are combined in chunk order, so results are bit-identical for a given
configuration regardless of how many workers run the chunks.

Integrands are callables on a :class:`SampleBatch` (the in-region samples of
one chunk) returning one value per sample.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .curvature import curvature_batch, grad_floor
from .errors import ConfigError, PreconditionError
from .fields import BoundingBox, Interval
from .reports import IntegralEstimate, make_report


@dataclass(frozen=True)
class QuadratureConfig:
    samples: int = 1_000_000
    seed: int = 0
    strata: int = 8
    shell_epsilon: Optional[float] = None
    chunk_samples: int = 1 << 16
    workers: int = 1
    face_samples: int = 10_000

    def __post_init__(self):
        if self.samples < 1000:
            raise ConfigError("quadrature needs at least 1000 samples")
        if self.strata < 1:
            raise ConfigError("strata must be positive")
        if self.shell_epsilon is not None and not self.shell_epsilon > 0:
            raise ConfigError("shell_epsilon must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class LevelProfile:
    bin_edges: np.ndarray
    values: np.ndarray
    std_errors: np.ndarray
    flagged_bins: tuple = ()  # bins whose closure contains a known critical value

    def __post_init__(self):
        if len(self.bin_edges) != len(self.values) + 1 or len(self.values) != len(self.std_errors):
            raise ValueError("profile arrays have inconsistent lengths")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def widths(self):
        return np.diff(self.bin_edges)


class SampleBatch:
    """In-region samples of one chunk with lazily derived geometric quantities."""

    def __init__(self, points, value, gradient, hessian, floor):
        self.points = points
        self.value = value
        self.gradient = gradient
        self.hessian = hessian
        self.floor = floor
        self._curv = None

    @property
    def grad_norm(self):
        return np.sqrt(np.einsum("ni,ni->n", self.gradient, self.gradient))

    @property
    def regular(self):
        return self.grad_norm > self.floor

    def _curvature(self):
        if self._curv is None:
            self._curv = curvature_batch(self.gradient, self.hessian, self.floor)
        return self._curv

    @property
    def H(self):
        return self._curvature()[0]

    @property
    def K(self):
        return self._curvature()[1]

    def __len__(self):
        return len(self.value)


# a few integrands used throughout
def one(s):
    return np.ones(len(s))


def grad_norm(s):
    return s.grad_norm


def mean_curvature(s):
    return s.H


def gaussian_curvature(s):
    return s.K


def field_value(s):
    return s.value


# -- the sweep ----------------------------------------------------------------------


def _layout(box, cfg):
    """Per-axis strata, cells, samples per cell; at least 2 samples per cell for variances."""
    d = box.dim
    s = max(1, min(cfg.strata, int(math.floor((cfg.samples / 2) ** (1.0 / d) + 1e-9))))
    cells = s**d
    m = max(2, -(-cfg.samples // cells))
    per_chunk = max(1, cfg.chunk_samples // m)
    return s, cells, m, per_chunk


def _chunk_rng(seed, index):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def sweep(field, box, interval, cfg, integrands=None, profiles=None, floor=None):
    """One stratified pass evaluating many accumulators on a shared sample stream.

    ``integrands`` maps names to integrand callables; ``profiles`` maps names
    to ``(integrand, bins)`` pairs, binned by f over the interval.  Returns
    ``(estimates, profiles, hits, samples_used)`` where profile values are bin
    sums divided by bin width.
    """
    integrands = dict(integrands or {})
    profiles = dict(profiles or {})
    box = _as_box(box, field.dim)
    interval = _as_interval(interval)
    if not field.domain.contains_box(box):
        raise ConfigError("integration box is not contained in the field's domain")
    floor = grad_floor(field) if floor is None else floor
    a, b = interval.a, interval.b
    d = field.dim
    s, cells, m, per_chunk = _layout(box, cfg)
    lo, hi = box.lo_array, box.hi_array
    width = (hi - lo) / s
    nchunks = -(-cells // per_chunk)

    bins = {name: int(nb) for name, (_, nb) in profiles.items()}
    if bins and not b > a:
        raise ConfigError("profiles need a nondegenerate interval")
    for name, nb in bins.items():
        if nb < 1:
            raise ConfigError(f"profile {name!r} needs at least one bin")

    def run_chunk(k):
        c0 = k * per_chunk
        c1 = min(cells, c0 + per_chunk)
        nc = c1 - c0
        rng = _chunk_rng(cfg.seed, k)
        u = rng.random((nc, m, d))
        idx = np.stack(np.unravel_index(np.arange(c0, c1), (s,) * d), axis=1)
        pts = (lo + (idx[:, None, :] + u) * width).reshape(-1, d)
        fv = field.values(pts)
        inside = (fv >= a) & (fv <= b)
        hit_idx = np.flatnonzero(inside)
        out = {"hits": int(hit_idx.size)}
        if hit_idx.size:
            v, g, h = field.jets(pts[hit_idx], check=False)
            batch = SampleBatch(pts[hit_idx], v, g, h, floor)
            regular = batch.regular
        for name, fn in integrands.items():
            X = np.zeros(nc * m)
            if hit_idx.size:
                X[hit_idx] = np.where(regular, fn(batch), 0.0)
            Xc = X.reshape(nc, m)
            out[name] = (Xc.sum(), np.var(Xc, axis=1, ddof=1).sum())
        for name, (fn, _) in profiles.items():
            nb = bins[name]
            if not hit_idx.size:
                out[name] = (np.zeros(nb), np.zeros(nb))
                continue
            w = np.where(regular, fn(batch), 0.0)
            k_bin = np.clip(((v - a) / (b - a) * nb).astype(np.int64), 0, nb - 1)
            cell_local = hit_idx // m
            key = cell_local * nb + k_bin
            s1 = np.bincount(key, weights=w, minlength=nc * nb)
            s2 = np.bincount(key, weights=w * w, minlength=nc * nb)
            var = np.maximum(s2 - s1 * s1 / m, 0.0) / (m - 1)
            out[name] = (s1.reshape(nc, nb).sum(axis=0), var.reshape(nc, nb).sum(axis=0))
        return out

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(run_chunk, range(nchunks)))
    else:
        parts = [run_chunk(k) for k in range(nchunks)]

    used = cells * m
    cell_vol = box.volume / cells
    hits = 0
    sums = {name: [0.0, 0.0] for name in integrands}
    psums = {name: [np.zeros(nb), np.zeros(nb)] for name, nb in bins.items()}
    for part in parts:  # fixed chunk order
        hits += part["hits"]
        for name in integrands:
            sums[name][0] += part[name][0]
            sums[name][1] += part[name][1]
        for name in profiles:
            psums[name][0] = psums[name][0] + part[name][0]
            psums[name][1] = psums[name][1] + part[name][1]

    hit_fraction = hits / used
    flags = () if hits else ("empty-region",)
    estimates = {
        name: IntegralEstimate(
            float(cell_vol * tot / m), float(cell_vol * math.sqrt(var / m)), used, hit_fraction, flags
        )
        for name, (tot, var) in sums.items()
    }
    prof = {}
    for name, (tot, var) in psums.items():
        edges = np.linspace(a, b, bins[name] + 1)
        w = np.diff(edges)
        prof[name] = LevelProfile(
            edges,
            cell_vol * tot / m / w,
            cell_vol * np.sqrt(var / m) / w,
        )
    return estimates, prof, hits, used


def _as_box(box, d):
    if isinstance(box, BoundingBox):
        if box.dim != d:
            raise ConfigError(f"box is {box.dim}-dimensional but the field has d={d}")
        if not box.is_finite:
            raise ConfigError("integration box must be finite")
        return box
    lo, hi = box
    if np.ndim(lo) == 0:
        return BoundingBox.cube(lo, hi, d)
    return BoundingBox(tuple(lo), tuple(hi))


def _as_interval(interval):
    return interval if isinstance(interval, Interval) else Interval(*interval)


# -- public operations -------------------------------------------------------------


def region_integral(field, g, interval, box, cfg, check_containment=True):
    """Estimate the integral of ``g`` over {p in box : a <= f(p) <= b}."""
    interval = _as_interval(interval)
    box = _as_box(box, field.dim)
    if interval.a == interval.b:
        return IntegralEstimate(0.0, 0.0, 0, 0.0, ())
    est, _, _, _ = sweep(field, box, interval, cfg, {"g": g})
    est = est["g"]
    if check_containment:
        warn = containment_check(field, interval, box, cfg)
        if warn:
            est = replace(est, flags=est.flags + ("containment",) + tuple(warn))
    return est


def default_shell_epsilon(t, interval=None):
    if interval is not None and interval.b > interval.a:
        return 0.005 * interval.length
    return 0.005 * max(abs(t), 1.0)


def level_integral_shell(field, g, t, box, cfg, critical_values=(), epsilon=None):
    """Integral of ``g`` over the level set f = t via a thin shell.

    Uses (1 / 2eps) * integral of g |grad f| over f^-1([t - eps, t + eps]).
    """
    eps = epsilon if epsilon is not None else cfg.shell_epsilon
    if eps is None:
        eps = default_shell_epsilon(t)
    if not eps > 0:
        raise ConfigError("shell half-width must be positive")
    for c in critical_values:
        if t - eps <= c <= t + eps:
            raise PreconditionError(f"critical value {c:.12g} lies inside the shell around t = {t:.12g}")
    est = region_integral(
        field, lambda s: g(s) * s.grad_norm, Interval(t - eps, t + eps), box, cfg, check_containment=False
    )
    return est.scaled(1.0 / (2.0 * eps))


def profile(field, g, interval, bins, box, cfg, critical_values=()):
    """Binned phi_g(t) = integral over f^-1(t) of g/|grad f|: bin mass of g divided by bin width."""
    interval = _as_interval(interval)
    if bins < 1:
        raise ConfigError("profile needs at least one bin")
    if interval.b <= interval.a:
        raise ConfigError("profile needs a nondegenerate interval")
    _, prof, _, _ = sweep(field, box, interval, cfg, profiles={"p": (g, bins)})
    return flag_critical_bins(prof["p"], critical_values)


def nu_profile(field, interval, bins, box, cfg, critical_values=()):
    """Bin averages of nu(t), the n-volume of f^-1(t), using g = |grad f|."""
    return profile(field, grad_norm, interval, bins, box, cfg, critical_values)


def flag_critical_bins(prof, critical_values):
    edges = prof.bin_edges
    flagged = tuple(
        k
        for k in range(len(prof.values))
        if any(edges[k] <= c <= edges[k + 1] for c in critical_values)
    )
    return replace(prof, flagged_bins=flagged)


def containment_check(field, interval, box, cfg):
    """Warn when box faces meet f^-1([a, b]); a sampled heuristic, not a proof."""
    interval = _as_interval(interval)
    box = _as_box(box, field.dim)
    d = field.dim
    lo, hi = box.lo_array, box.hi_array
    rng = _chunk_rng(cfg.seed, 2**32 + 7)
    warnings_out = []
    for axis in range(d):
        for side, fixed in (("lo", lo[axis]), ("hi", hi[axis])):
            pts = lo + rng.random((cfg.face_samples, d)) * (hi - lo)
            pts[:, axis] = fixed
            ok = field.in_domain(pts)
            fv = field.values(pts[ok])
            hit = int(np.count_nonzero((fv >= interval.a) & (fv <= interval.b)))
            if hit:
                warnings_out.append(
                    f"box face x{axis + 1}={side} meets f^-1([{interval.a:g}, {interval.b:g}]) at {hit}/{cfg.face_samples} samples"
                )
    return warnings_out


# -- profile integration -------------------------------------------------------------

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _hat_basis(centers, a, b, t):
    """Piecewise-linear interpolation through bin centers, linearly extrapolated to [a, b].

    Returns B with B[i, k] the weight of node value k at abscissa t[i].
    """
    K = len(centers)
    B = np.zeros((len(t), K))
    if K == 1:
        B[:, 0] = 1.0
        return B
    j = np.clip(np.searchsorted(centers, t) - 1, 0, K - 2)
    lam = (t - centers[j]) / (centers[j + 1] - centers[j])
    rows = np.arange(len(t))
    B[rows, j] = 1.0 - lam
    B[rows, j + 1] = lam
    return B


def integrate_profile(prof, weight=None, lo=None, hi=None, refine=32):
    """Trapezoid integral of weight(t) * profile(t) over [lo, hi] within the profile range.

    The profile is the piecewise-linear interpolant of the bin values at bin
    centres.  The result is linear in the bin values, which gives the
    propagated standard error directly.
    """
    edges = prof.bin_edges
    a, b = float(edges[0]), float(edges[-1])
    lo = a if lo is None else max(a, lo)
    hi = b if hi is None else min(b, hi)
    if hi <= lo:
        return IntegralEstimate(0.0, 0.0)
    n = refine * len(prof.values) + 1
    t = np.linspace(lo, hi, n)
    B = _hat_basis(prof.centers, a, b, t)
    wt = np.ones_like(t) if weight is None else np.asarray(weight(t), dtype=float)
    coeff = _trapezoid(wt[:, None] * B, t, axis=0)
    value = float(coeff @ prof.values)
    err = float(math.sqrt(np.sum((coeff * prof.std_errors) ** 2)))
    return IntegralEstimate(value, err)


def verify_coarea(field, g, interval, box, cfg, bins=64, critical_values=()):
    """Both sides of the coarea formula: region integral of g vs integral over t of phi_g."""
    interval = _as_interval(interval)
    notes = []
    if interval.a == interval.b:
        return make_report("COAREA", 0.0, 0.0, notes=["degenerate interval"])
    est, prof, _, _ = sweep(field, box, interval, cfg, {"g": g}, {"phi": (g, bins)})
    lhs = est["g"]
    prof = flag_critical_bins(prof["phi"], critical_values)
    rhs = integrate_profile(prof)
    if prof.flagged_bins:
        notes.append(f"profile bins {list(prof.flagged_bins)} contain critical values")
    notes += containment_check(field, interval, _as_box(box, field.dim), cfg)
    return make_report("COAREA", lhs, rhs, notes=notes)
