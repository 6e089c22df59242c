import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from levelgeom.curvature import (
    adjugate,
    adjugate_cofactor,
    curvature_batch,
    divergence_H_batch,
    divergence_check_H,
    gaussian_curvature,
    mean_curvature,
    unit_normal,
)
from levelgeom.errors import NearCriticalError
from levelgeom.fields import builtin_field, eval_jet, parse_field


def _rel_residual(S):
    d = S.shape[-1]
    det = np.linalg.det(S)
    resid = np.abs(adjugate(S) @ S - det * np.eye(d)).max()
    return resid / max(abs(det), np.linalg.norm(S) ** d)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_adjugate_identity_random(d, rng):
    S = rng.normal(size=(100, d, d))
    S = S + np.swapaxes(S, 1, 2)
    assert max(_rel_residual(m) for m in S) < 1e-10


@pytest.mark.parametrize("d", [3, 4, 5])
def test_adjugate_singular(d, rng):
    v = rng.normal(size=(d, d - 1))
    S = v @ v.T  # rank d - 1
    A = adjugate(S)
    np.testing.assert_allclose(A @ S, 0.0, atol=1e-9 * np.linalg.norm(S) ** d)
    np.testing.assert_allclose(A, adjugate_cofactor(S), atol=1e-9 * np.linalg.norm(S) ** (d - 1))
    assert np.abs(A).max() > 0  # rank-deficient by one, so adj has rank 1


@given(arrays(float, (4, 4), elements=st.floats(-10, 10)))
def test_adjugate_paths_agree(M):
    S = M + M.T
    np.testing.assert_allclose(adjugate(S), adjugate_cofactor(S), atol=1e-8 * max(1.0, np.abs(S).max()) ** 3)


def test_sphere_curvatures():
    j = eval_jet(builtin_field("sphere"), [2.0, 0.0, 0.0])
    assert mean_curvature(j) == pytest.approx(0.5, rel=1e-15)
    assert gaussian_curvature(j) == pytest.approx(0.25, rel=1e-15)
    np.testing.assert_array_equal(unit_normal(j), [-1.0, 0.0, 0.0])
    np.testing.assert_array_equal(unit_normal(eval_jet(parse_field("x", 3), [0.3, 0.2, 0.1])), [-1.0, 0.0, 0.0])


@pytest.mark.parametrize("d", [3, 4, 5])
def test_sphere_exactness(d, rng):
    n = d - 1
    f = builtin_field("sphere", dim=d)
    r = rng.uniform(0.5, 3.0, size=200)
    u = rng.normal(size=(200, d))
    pts = u / np.linalg.norm(u, axis=1, keepdims=True) * r[:, None]
    _, g, h = f.jets(pts)
    H, K, ok = curvature_batch(g, h)
    assert ok.all()
    np.testing.assert_allclose(H * r, 1.0, rtol=1e-10)
    np.testing.assert_allclose(K * r**n, 1.0, rtol=1e-10)


def test_near_critical_raises():
    j = eval_jet(builtin_field("sphere"), [0.0, 0.0, 0.0])
    with pytest.raises(NearCriticalError):
        mean_curvature(j)
    with pytest.raises(NearCriticalError):
        gaussian_curvature(j)


def test_scaling_invariance(rng):
    pts = rng.uniform(-2, 2, size=(50, 3))
    a = curvature_batch(*builtin_field("sphere").jets(pts)[1:])
    b = curvature_batch(*parse_field("2*(x^2+y^2+z^2)", 3).jets(pts)[1:])
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12)
    np.testing.assert_allclose(a[1], b[1], rtol=1e-12)


def test_divergence_examples():
    assert divergence_check_H(builtin_field("sphere"), [0, 0, 1.5], 1e-4) == pytest.approx(1 / 1.5, abs=1e-5)
    assert abs(divergence_check_H(parse_field("x", 3), [0.3, 0.2, 0.1], 1e-4)) <= 1e-8
    f = builtin_field("torus", R=2)
    p = [3.0, 0.0, 0.0]
    assert divergence_check_H(f, p, 1e-4) == pytest.approx(mean_curvature(eval_jet(f, p)), abs=1e-4)


def test_torus_mean_curvature_closed_form():
    # tube radius rho, major radius R, outer equator: H = (1/rho + 1/(R+rho)) / 2
    f = builtin_field("torus", R=2)
    j = eval_jet(f, [2.5, 0.0, 0.0])
    assert mean_curvature(j) == pytest.approx(0.5 * (1 / 0.5 + 1 / 2.5), rel=1e-12)
    assert gaussian_curvature(j) == pytest.approx((1 / 0.5) * (1 / 2.5), rel=1e-12)


def test_batch_matches_pointwise(rng):
    f = parse_field("x^2+2*y^2-z^2+x*y*w", 4)
    pts = rng.uniform(-1, 1, size=(30, 4))
    _, g, h = f.jets(pts)
    H, K, ok = curvature_batch(g, h)
    for k, p in enumerate(pts):
        j = f.eval_jet(p)
        assert H[k] == pytest.approx(mean_curvature(j), rel=1e-12, abs=1e-12)
        assert K[k] == pytest.approx(gaussian_curvature(j), rel=1e-10, abs=1e-12)


def test_divergence_oracle_batch(rng):
    f = builtin_field("double_well")
    pts = rng.uniform(-1.8, 1.8, size=(200, 3))
    _, g, h = f.jets(pts)
    H, _, ok = curvature_batch(g, h)
    Hd = divergence_H_batch(f, pts)
    keep = ok & (np.linalg.norm(g, axis=1) > 1e-2)
    assert np.all(np.abs(H - Hd)[keep] <= np.maximum(1e-4, 1e-3 * np.abs(H[keep])))
