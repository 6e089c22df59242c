"""Pure numpy implementations of the hot kernels.

These are the reference versions; the compiled extension must reproduce them
bit for bit (marching cubes) or to rounding (curvature).
"""

import numpy as np

from .._mc_tables import CORNER_OFFSETS, EDGE_CORNERS, TRI_TABLE

BACKEND = "python"


def edge_start_axis():
    """For each cube edge: offset of its lower corner and the axis it runs along."""
    out = []
    for a, b in EDGE_CORNERS:
        oa, ob = np.array(CORNER_OFFSETS[a]), np.array(CORNER_OFFSETS[b])
        axis = int(np.flatnonzero(oa != ob)[0])
        out.append((tuple(np.minimum(oa, ob)), axis))
    return out


_EDGES = edge_start_axis()


def mc_triangle_keys(vals, iso):
    """Triangles of the iso-surface as triples of global grid-edge keys.

    ``vals`` is the (nx+1, ny+1, nz+1) array of node values.  The key of the
    grid edge leaving node (i, j, k) along ``axis`` is
    ``((i*(ny+1) + j)*(nz+1) + k)*3 + axis``.  Triangles are ordered by cell
    (C order) and then by table slot.
    """
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    nx, ny, nz = (s - 1 for s in vals.shape)
    below = vals < iso
    case = np.zeros((nx, ny, nz), dtype=np.uint8)
    for bit, (ox, oy, oz) in enumerate(CORNER_OFFSETS):
        case |= below[ox : ox + nx, oy : oy + ny, oz : oz + nz].astype(np.uint8) << bit
    flat = case.ravel()
    cells = np.flatnonzero((flat != 0) & (flat != 255))
    if cells.size == 0:
        return np.empty((0, 3), dtype=np.int64)
    rows = TRI_TABLE[flat[cells]].astype(np.int64)
    ci, cj, ck = np.unravel_index(cells, (nx, ny, nz))
    ekeys = np.empty((cells.size, 12), dtype=np.int64)
    for e, ((ox, oy, oz), axis) in enumerate(_EDGES):
        node = ((ci + ox) * (ny + 1) + (cj + oy)) * (nz + 1) + (ck + oz)
        ekeys[:, e] = node * 3 + axis
    tris = rows[:, :15].reshape(-1, 5, 3)
    valid = tris[:, :, 0] >= 0
    keys = np.take_along_axis(ekeys, np.clip(rows[:, :15], 0, None), axis=1).reshape(-1, 5, 3)
    return keys[valid]


def curvature3(grads, hess, floor):
    """Mean and Gaussian curvature of level surfaces in R^3 (n = 2).

    Returns ``(H, K, regular)``; entries with ``|grad| <= floor`` are 0 and
    flagged irregular.
    """
    g = np.asarray(grads, dtype=np.float64)
    q = np.asarray(hess, dtype=np.float64)
    gx, gy, gz = g[:, 0], g[:, 1], g[:, 2]
    a, b, c = q[:, 0, 0], q[:, 1, 1], q[:, 2, 2]
    xy, xz, yz = q[:, 0, 1], q[:, 0, 2], q[:, 1, 2]
    n2 = gx * gx + gy * gy + gz * gz
    norm = np.sqrt(n2)
    regular = norm > floor
    tr = a + b + c
    qg = a * gx * gx + b * gy * gy + c * gz * gz + 2.0 * (xy * gx * gy + xz * gx * gz + yz * gy * gz)
    # cofactors of the symmetric Hessian
    c00 = b * c - yz * yz
    c11 = a * c - xz * xz
    c22 = a * b - xy * xy
    c01 = xz * yz - xy * c
    c02 = xy * yz - xz * b
    c12 = xy * xz - a * yz
    qstar = (
        c00 * gx * gx + c11 * gy * gy + c22 * gz * gz
        + 2.0 * (c01 * gx * gy + c02 * gx * gz + c12 * gy * gz)
    )
    safe = np.where(regular, norm, 1.0)
    H = np.where(regular, (n2 * tr - qg) / (2.0 * safe**3), 0.0)
    K = np.where(regular, qstar / safe**4, 0.0)
    return H, K, regular
