import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levelgeom import _kernels
from levelgeom._kernels import _pure
from levelgeom.curvature import adjugate_cofactor

ck = pytest.importorskip("levelgeom._kernels._ckernels", reason="compiled backend not built")


def test_backends_report_names():
    assert _pure.BACKEND == "python"
    assert ck.BACKEND == "cython"
    assert _kernels.BACKEND in ("python", "cython")


def test_pure_fallback_selected_by_env():
    env = dict(os.environ, LEVELGEOM_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from levelgeom import _kernels; print(_kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "python"


@given(st.integers(0, 2**32 - 1), st.integers(2, 9), st.floats(-0.5, 0.5))
def test_mc_keys_identical(seed, n, iso):
    vals = np.random.default_rng(seed).uniform(-1, 1, size=(n, n + 1, n + 2))
    a = _pure.mc_triangle_keys(vals, iso)
    b = ck.mc_triangle_keys(vals, iso)
    assert a.dtype == b.dtype == np.int64
    np.testing.assert_array_equal(a, b)


def test_mc_keys_empty():
    vals = np.ones((5, 5, 5))
    assert _pure.mc_triangle_keys(vals, 0.0).shape == (0, 3)
    assert ck.mc_triangle_keys(vals, 0.0).shape == (0, 3)


def test_mc_single_corner():
    vals = np.ones((2, 2, 2))
    vals[0, 0, 0] = -1.0
    keys = _pure.mc_triangle_keys(vals, 0.0)
    assert keys.shape == (1, 3)
    # the three grid edges leaving node 0 along x, y and z
    assert sorted(keys[0].tolist()) == [0, 1, 2]


def _random_jets(rng, n):
    g = rng.normal(size=(n, 3))
    h = rng.normal(size=(n, 3, 3))
    return g, h + np.swapaxes(h, 1, 2)


def test_curvature3_backends_agree(rng):
    g, h = _random_jets(rng, 5000)
    g[:10] = 0.0
    Hp, Kp, rp = _pure.curvature3(g, h, 1e-10)
    Hc, Kc, rc = ck.curvature3(g, h, 1e-10)
    np.testing.assert_array_equal(rp, rc)
    assert not rp[:10].any() and rp[10:].all()
    np.testing.assert_allclose(Hc, Hp, rtol=1e-13, atol=1e-300)
    np.testing.assert_allclose(Kc, Kp, rtol=1e-12, atol=1e-300)


def test_curvature3_formula(rng):
    g, h = _random_jets(rng, 200)
    H, K, _ = _pure.curvature3(g, h, 1e-10)
    gn = np.linalg.norm(g, axis=1)
    tr = np.trace(h, axis1=1, axis2=2)
    q = np.einsum("ni,nij,nj->n", g, h, g)
    np.testing.assert_allclose(H, (gn**2 * tr - q) / (2 * gn**3), rtol=1e-12)
    kq = np.einsum("ni,nij,nj->n", g, adjugate_cofactor(h), g)
    np.testing.assert_allclose(K, kq / gn**4, rtol=1e-10, atol=1e-12)
