import math

import numpy as np
import pytest

from levelgeom.errors import ConfigError, ParseError, PreconditionError
from levelgeom.fields import BoundingBox, Interval, builtin_field
from levelgeom.identities import (
    SuiteConfig,
    WeightSpec,
    make_field,
    run_suite,
    scan_kinks,
    sphere_volume,
    summarize,
    verify_corollary_vprime,
    verify_prop_a,
    verify_prop_b,
    verify_theorem_a,
    verify_theorem_b,
)
from levelgeom.quadrature import LevelProfile, QuadratureConfig
from levelgeom.reports import PASS, SKIPPED, dumps

QCFG = QuadratureConfig(samples=1_000_000, seed=3)
TBOX = BoundingBox((-3.5, -3.5, -1.5), (3.5, 3.5, 1.5))


def sphere_cfg(interval=(1, 4), **kw):
    return SuiteConfig(builtin_field("sphere"), Interval(*interval), BoundingBox.cube(-2.5, 2.5, 3), QCFG, **kw)


def dw_cfg(**kw):
    return SuiteConfig(builtin_field("double_well"), Interval(0.5, 1.5), BoundingBox.cube(-2, 2, 3), QCFG, **kw)


def torus_cfg(**kw):
    return SuiteConfig(builtin_field("torus", R=2), Interval(0.25, 1.0), TBOX, QCFG, **kw)


def close(q, truth, rel=0.01):
    v = getattr(q, "value", q)
    s = getattr(q, "std_error", 0.0)
    return abs(v - truth) <= max(rel * abs(truth), 3 * s)


def test_sphere_volume():
    assert sphere_volume(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert sphere_volume(1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert sphere_volume(3) == pytest.approx(2 * math.pi**2, rel=1e-15)
    with pytest.raises(ConfigError):
        sphere_volume(0)


def test_theorem_a_sphere():
    rep = verify_theorem_a(sphere_cfg())
    assert rep.passed
    assert close(rep.lhs, 12 * math.pi) and close(rep.rhs, 12 * math.pi)


def test_theorem_a_degenerate_interval():
    rep = verify_theorem_a(sphere_cfg((2, 2)))
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.passed


def test_theorem_a_critical_endpoint():
    cfg = SuiteConfig(builtin_field("double_well"), Interval(1.0, 1.5), BoundingBox.cube(-2, 2, 3), QCFG)
    with pytest.raises(PreconditionError):
        verify_theorem_a(cfg)


def test_theorem_a_telescopes():
    whole = verify_theorem_a(sphere_cfg((1, 4))).rhs
    left = verify_theorem_a(sphere_cfg((1, 2.5))).rhs
    right = verify_theorem_a(sphere_cfg((2.5, 4))).rhs
    sigma = math.sqrt(whole.std_error**2 + left.std_error**2 + right.std_error**2)
    assert abs(whole.value - left.value - right.value) <= 3 * sigma


def test_theorem_a_crossing_critical_value():
    cfg = dw_cfg()
    rep = verify_theorem_a(cfg)
    assert rep.passed
    assert rep.details["decomposition"]["intervals"] == [[0.5, pytest.approx(1.0)], [pytest.approx(1.0), 1.5]]


@pytest.mark.parametrize("t0", [2.0, 3.0])
def test_corollary_sphere(t0):
    rep = verify_corollary_vprime(sphere_cfg(), t0)
    assert rep.passed
    assert abs(rep.lhs.value - 4 * math.pi) <= 0.01 * 4 * math.pi
    assert abs(rep.rhs.value - 4 * math.pi) <= 0.01 * 4 * math.pi


def test_corollary_torus():
    rep = verify_corollary_vprime(torus_cfg(), 0.5)
    assert rep.passed
    assert close(rep.rhs, 4 * math.pi**2 * 2 / (2 * math.sqrt(0.5)))


def test_corollary_stencil_precondition():
    with pytest.raises(PreconditionError):
        verify_corollary_vprime(dw_cfg(), 1.02)


@pytest.mark.parametrize(
    "weight, truth",
    [("1", 30 * math.pi), ("poly:0,1", 84 * math.pi), ("indicator:1,2.5", 10.5 * math.pi)],
)
def test_theorem_b_sphere(weight, truth):
    rep = verify_theorem_b(sphere_cfg(), WeightSpec.parse(weight))
    assert rep.passed
    assert close(rep.lhs, truth) and close(rep.rhs, truth)


@pytest.mark.parametrize("cfg", [sphere_cfg, dw_cfg, lambda: SuiteConfig(
    builtin_field("quadric", A=[1.0, 2.0, 3.0]), Interval(1, 4), BoundingBox.cube(-2.5, 2.5, 3), QCFG)])
def test_prop_a(cfg):
    reps = verify_prop_a(cfg())
    assert [r.component for r in reps] == [1, 2, 3]
    assert all(r.passed for r in reps)
    assert all(r.rhs == 0.0 for r in reps)


def test_prop_b_sphere_and_torus():
    rep = verify_prop_b(sphere_cfg())
    assert rep.rhs == pytest.approx(12 * math.pi, rel=1e-15)
    assert rep.passed and close(rep.lhs, 12 * math.pi)
    rep = verify_prop_b(torus_cfg())
    assert rep.rhs == 0.0
    assert rep.passed


def test_prop_b_preconditions():
    with pytest.raises(PreconditionError):
        verify_prop_b(dw_cfg())
    cfg4 = SuiteConfig(builtin_field("sphere", dim=4), Interval(1, 4), BoundingBox.cube(-2.5, 2.5, 4), QCFG)
    with pytest.raises(PreconditionError):
        verify_prop_b(cfg4)


def test_sphere_suite_all_pass():
    reps = run_suite(sphere_cfg(identities=("COAREA", "THM_A", "COR_VPRIME", "THM_B", "PROP_A", "PROP_B")))
    verdicts = summarize(reps)
    assert list(verdicts) == ["COAREA", "THM_A", "COR_VPRIME", "THM_B", "PROP_A", "PROP_B"]
    assert set(verdicts.values()) == {PASS}


def test_double_well_suite_skips_prop_b():
    verdicts = summarize(run_suite(dw_cfg()))
    assert verdicts.pop("PROP_B") == SKIPPED
    assert set(verdicts.values()) == {PASS}


def test_suite_subset_order():
    reps = run_suite(sphere_cfg(identities=("PROP_B", "THM_A")))
    assert [r.identity for r in reps] == ["THM_A", "PROP_B"]


def test_suite_deterministic():
    cfg = dict(identities=("COAREA", "THM_B", "PROP_A"))
    a = dumps([r.to_json() for r in run_suite(sphere_cfg(**cfg))])
    b = dumps([r.to_json() for r in run_suite(sphere_cfg(**cfg))])
    assert a == b


def test_config_errors_before_work():
    with pytest.raises(ParseError):
        make_field("bad(((", 3)
    with pytest.raises(ConfigError):
        sphere_cfg(identities=("THM_Z",))
    with pytest.raises(ConfigError):
        SuiteConfig(builtin_field("sphere"), Interval(1, 4), BoundingBox.cube(-2, 2, 4), QCFG)


def test_weight_spec():
    assert WeightSpec.parse("2")(np.array([0.0, 5.0])).tolist() == [2.0, 2.0]
    assert WeightSpec.parse("indicator:1,2")(np.array([0.5, 1.5, 2.5])).tolist() == [0.0, 1.0, 0.0]
    assert WeightSpec.parse("poly:1,0,1")(np.array([2.0])).tolist() == [5.0]
    assert WeightSpec.parse("indicator:1,2").support(0, 4) == (1, 2)
    for bad in ("poly:", "indicator:1", "cubic:1", "x"):
        with pytest.raises(ConfigError):
            WeightSpec.parse(bad)


def test_make_field_specs():
    assert make_field("torus(R=3)").R == 3.0
    assert make_field("torus(1.5)").R == 1.5
    assert make_field("quadric(1,2,3,4)").dim == 4
    assert make_field("x^2+y^2+z^2+w^2", 4).dim == 4
    with pytest.raises(ConfigError):
        make_field("quadric")


def test_kink_scan():
    edges = np.linspace(0, 2, 41)
    c = 0.5 * (edges[1:] + edges[:-1])
    vals = np.where(c < 1.3, c, 1.3 + 5 * (c - 1.3))
    prof = LevelProfile(edges, vals, np.full(40, 1e-4))
    assert scan_kinks(prof, ()) and "1.3" in scan_kinks(prof, ())[0]
    assert scan_kinks(prof, (1.3,)) == []
    smooth = LevelProfile(edges, 4 * np.pi * c, np.full(40, 1e-4))
    assert scan_kinks(smooth, ()) == []
