"""Marching-cubes extraction of level surfaces in R^3 and mesh measurements.

Vertices are welded by the identity of the grid edge they sit on, so the
mesh topology is exact and independent of coordinate round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

from . import _kernels
from .curvature import grad_floor
from .errors import ConfigError, TopologyError
from .fields import BoundingBox
from .quadrature import SampleBatch
from .reports import IntegralEstimate

DEGENERATE_FRACTION = 1e-14
ISO_NUDGE = 1e-9


@dataclass(frozen=True)
class GridSpec:
    box: BoundingBox
    resolution: int = 128

    def __post_init__(self):
        if self.resolution < 16:
            raise ConfigError("grid resolution must be at least 16 cells per axis")
        if self.box.dim != 3:
            raise ConfigError("meshing grids are 3-dimensional")
        if not self.box.is_finite:
            raise ConfigError("meshing box must be finite")

    def with_resolution(self, resolution):
        return GridSpec(self.box, resolution)

    @property
    def spacing(self):
        return (self.box.hi_array - self.box.lo_array) / self.resolution


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (F, 3) vertex indices
    level: float = math.nan
    pruned: int = 0  # degenerate triangles removed at extraction

    @cached_property
    def areas(self):
        if len(self.triangles) == 0:
            return np.zeros(0)
        p = self.vertices[self.triangles]
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    @cached_property
    def centroids(self):
        if len(self.triangles) == 0:
            return np.zeros((0, 3))
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def is_empty(self):
        return len(self.triangles) == 0

    def __len__(self):
        return len(self.triangles)


def grid_values(field, grid):
    r = grid.resolution
    axes = [np.linspace(lo, hi, r + 1) for lo, hi in zip(grid.box.lo, grid.box.hi)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    return field.values(pts).reshape(r + 1, r + 1, r + 1)


def extract_level_set(field, t, grid):
    """Triangulate f^-1(t) inside the grid box with 256-case marching cubes."""
    if field.dim != 3:
        raise ConfigError(f"marching cubes needs d = 3, field has d = {field.dim}")
    t = float(t)
    vals = grid_values(field, grid)
    # nodes (numerically) on the level would put vertices of several edges on one
    # point; push them just above t so the triangulation stays non-degenerate
    nudge = ISO_NUDGE * max(1.0, abs(t))
    vals = np.where(np.abs(vals - t) <= nudge, t + nudge, vals)
    keys = _kernels.mc_triangle_keys(vals, t)
    if len(keys) == 0:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64), float(t))
    uniq, tri = np.unique(keys, return_inverse=True)
    tri = tri.reshape(-1, 3)
    n1 = grid.resolution + 1
    node, axis = uniq // 3, uniq % 3
    ijk = np.stack(np.unravel_index(node, (n1, n1, n1)), axis=1)
    step = np.eye(3, dtype=np.int64)[axis]
    ijk1 = ijk + step
    f0 = vals[ijk[:, 0], ijk[:, 1], ijk[:, 2]]
    f1 = vals[ijk1[:, 0], ijk1[:, 1], ijk1[:, 2]]
    mu = (t - f0) / (f1 - f0)
    h = grid.spacing
    lo = grid.box.lo_array
    verts = lo + (ijk + mu[:, None] * step) * h
    mesh = TriangleMesh(verts, tri, float(t))
    areas = mesh.areas
    keep = areas > DEGENERATE_FRACTION * areas.mean()
    if not np.all(keep):
        mesh = TriangleMesh(verts, tri[keep], float(t), pruned=int(np.count_nonzero(~keep)))
    return mesh


def surface_area(mesh):
    return float(mesh.areas.sum())


@dataclass(frozen=True)
class SurfaceIntegral:
    value: float
    skipped_area_fraction: float


def surface_integral_detailed(mesh, field, g):
    """Centroid-rule integral of ``g`` over the mesh, skipping near-critical centroids."""
    if mesh.is_empty:
        return SurfaceIntegral(0.0, 0.0)
    v, grad, hess = field.jets(mesh.centroids, check=False)
    batch = SampleBatch(mesh.centroids, v, grad, hess, grad_floor(field))
    regular = batch.regular
    vals = np.where(regular, g(batch), 0.0)
    areas = mesh.areas
    total = float(areas.sum())
    skipped = float(areas[~regular].sum()) / total if total > 0 else 0.0
    return SurfaceIntegral(float(vals @ areas), skipped)


def surface_integral(mesh, field, g):
    return surface_integral_detailed(mesh, field, g).value


def edge_counts(mesh):
    tri = mesh.triangles
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e.sort(axis=1)
    return np.unique(e, axis=0, return_counts=True)


def euler_characteristic(mesh):
    """V - E + F of a closed edge-manifold mesh."""
    if mesh.is_empty:
        return 0
    edges, counts = edge_counts(mesh)
    if np.any(counts > 2):
        bad = edges[np.argmax(counts > 2)]
        raise TopologyError(
            f"non-manifold edge at {mesh.vertices[bad].mean(axis=0).tolist()} "
            "(grid too coarse near a critical point?)"
        )
    if np.any(counts < 2):
        raise TopologyError(f"mesh has {int(np.sum(counts < 2))} boundary edges; level set leaves the box")
    V = len(np.unique(mesh.triangles))
    return int(V - len(edges) + len(mesh.triangles))


def connected_components(mesh):
    if mesh.is_empty:
        return 0
    tri = mesh.triangles
    used = np.unique(tri)
    remap = np.full(len(mesh.vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    t = remap[tri]
    rows = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
    cols = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(used), len(used)))
    n, _ = _cc(adj, directed=False)
    return int(n)


def area_estimate(field, t, grid, coarse_ratio=0.75):
    """Mesh area at ``grid`` with a discretization error from a coarser grid.

    The error assumes second-order convergence: |A_h - A_H| / ((H/h)^2 - 1).
    """
    fine = surface_area(extract_level_set(field, t, grid))
    rc = max(16, int(round(grid.resolution * coarse_ratio)))
    if rc >= grid.resolution:
        return IntegralEstimate(fine, 0.0)
    coarse = surface_area(extract_level_set(field, t, grid.with_resolution(rc)))
    ratio = grid.resolution / rc
    return IntegralEstimate(fine, abs(fine - coarse) / (ratio * ratio - 1.0), hit_fraction=1.0)


def write_off(mesh, path, comments=()):
    """Write the mesh as an OFF file; ``comments`` go on '#' lines after the header."""
    with open(path, "w") as fh:
        fh.write("OFF\n")
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.triangles)} 0\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in mesh.triangles:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def read_off(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if lines[0] != "OFF":
        raise ValueError("not an OFF file")
    nv, nf, _ = (int(x) for x in lines[1].split())
    verts = np.array([[float(x) for x in ln.split()] for ln in lines[2 : 2 + nv]]).reshape(-1, 3)
    faces = np.array([[int(x) for x in ln.split()[1:4]] for ln in lines[2 + nv : 2 + nv + nf]], dtype=np.int64)
    return TriangleMesh(verts, faces.reshape(-1, 3))
