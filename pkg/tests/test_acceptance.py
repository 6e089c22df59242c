"""Acceptance suite: nine end-to-end criteria at their stated tolerances.

Each criterion prints a single ``[PASS]``/``[FAIL]`` line (collected in the
pytest terminal summary; run this file directly to print them inline).
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from levelgeom import quadrature as q
from levelgeom.curvature import adjugate, curvature_batch, divergence_H_batch
from levelgeom.fields import BoundingBox, Interval, builtin_field
from levelgeom.identities import (
    SuiteConfig,
    WeightSpec,
    run_suite,
    verify_corollary_vprime,
    verify_prop_b,
    verify_theorem_b,
)
from levelgeom.meshing import GridSpec, connected_components, euler_characteristic, extract_level_set
from levelgeom.morse import find_critical_points, singularity_probe
from levelgeom.reports import PASS

PI = math.pi
RESULTS = []
SPHERE_BOX = BoundingBox.cube(-2.5, 2.5, 3)
TORUS_BOX = BoundingBox((-3.5, -3.5, -1.5), (3.5, 3.5, 1.5))
DW_BOX = BoundingBox.cube(-2.0, 2.0, 3)


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    return ok


def _val(x):
    return float(getattr(x, "value", x))


def _sig(x):
    return float(getattr(x, "std_error", 0.0))


def agree(a, b, rel=0.01):
    """|a - b| <= max(rel * |b|, 3 combined sigma)."""
    tol = max(rel * max(abs(_val(a)), abs(_val(b))), 3 * math.hypot(_sig(a), _sig(b)))
    return abs(_val(a) - _val(b)) <= tol


def both_sides(rep, truth, rel=0.01):
    return agree(rep.lhs, rep.rhs, rel) and agree(rep.lhs, truth, rel) and agree(rep.rhs, truth, rel)


def _sphere_cfg(**kw):
    return SuiteConfig(
        builtin_field("sphere"),
        Interval(1.0, 4.0),
        SPHERE_BOX,
        q.QuadratureConfig(samples=2_000_000, seed=42),
        grid=GridSpec(SPHERE_BOX, 128),
        **kw,
    )


# -- criteria ------------------------------------------------------------------------


def criterion_1():
    t = time.perf_counter()
    cfg = _sphere_cfg(identities=("COAREA", "THM_A", "THM_B", "PROP_B"))
    reps = {r.identity: r for r in run_suite(cfg)}
    reps["THM_B_t"] = verify_theorem_b(cfg, WeightSpec.parse("poly:0,1"))
    elapsed = time.perf_counter() - t
    truths = {"THM_A": 12 * PI, "THM_B": 30 * PI, "THM_B_t": 84 * PI, "PROP_B": 12 * PI, "COAREA": 124 * PI / 5}
    bad = [k for k, truth in truths.items() if not both_sides(reps[k], truth)]
    ok = not bad and elapsed <= 60.0
    return record(1, "sphere suite closed forms", ok, f"failed={bad}, runtime {elapsed:.1f}s")


def criterion_2():
    cfg = _sphere_cfg()
    worst = 0.0
    for t0 in (2.0, 3.0):
        rep = verify_corollary_vprime(cfg, t0)
        for side in (rep.lhs, rep.rhs):
            worst = max(worst, abs(_val(side) - 4 * PI) / (4 * PI))
    return record(2, "sphere nu'(t0) = 4 pi at t0 = 2, 3", worst <= 0.01, f"max rel err {worst:.2e}")


def criterion_3():
    cfg = SuiteConfig(
        builtin_field("double_well"),
        Interval(0.5, 1.5),
        DW_BOX,
        q.QuadratureConfig(samples=2_000_000, seed=42),
        identities=("THM_A", "THM_B", "PROP_A"),
    )
    reps = run_suite(cfg)
    dec = [tuple(round(x, 9) for x in iv) for iv in cfg.decomposition.intervals]
    verdicts = {r.identity + (str(r.component) if r.component else ""): r.verdict for r in reps}
    scale_ok = all(
        r.abs_diff <= max(1e-3 * r.details["scale"], 3 * _sig(r.lhs))
        for r in reps
        if r.identity == "PROP_A"
    )
    ok = dec == [(0.5, 1.0), (1.0, 1.5)] and set(verdicts.values()) == {PASS} and scale_ok
    return record(3, "double-well crossing the saddle value", ok, f"decomposition={dec}, verdicts={verdicts}")


def criterion_4():
    chi_s = euler_characteristic(extract_level_set(builtin_field("sphere"), 1.0, GridSpec(SPHERE_BOX, 128)))
    torus = builtin_field("torus", R=2)
    chi_t = euler_characteristic(extract_level_set(torus, 0.5, GridSpec(TORUS_BOX, 128)))
    dw = builtin_field("double_well")
    comps = [connected_components(extract_level_set(dw, t, GridSpec(DW_BOX, 160))) for t in (0.5, 1.5)]
    rep = verify_prop_b(
        SuiteConfig(torus, Interval(0.25, 1.0), TORUS_BOX, q.QuadratureConfig(samples=2_000_000, seed=42))
    )
    ok = chi_s == 2 and chi_t == 0 and comps == [2, 1] and rep.rhs == 0.0 and rep.passed
    return record(
        4, "mesh topology", ok, f"chi sphere={chi_s}, chi torus={chi_t}, components={comps}, torus rhs={rep.rhs}"
    )


def criterion_5():
    rng = np.random.default_rng(5)
    worst = 0.0
    for d in (3, 4, 5):
        for _ in range(100):
            M = rng.normal(size=(d, d))
            S = M + M.T
            det = np.linalg.det(S)
            resid = np.abs(adjugate(S) @ S - det * np.eye(d)).max()
            worst = max(worst, resid / max(abs(det), np.linalg.norm(S) ** d))
    r = rng.uniform(0.5, 3.0, 1000)
    u = rng.normal(size=(1000, 3))
    pts = u / np.linalg.norm(u, axis=1, keepdims=True) * r[:, None]
    _, g, h = builtin_field("sphere").jets(pts)
    H, K, _ = curvature_batch(g, h)
    sph = max(np.abs(H * r - 1).max(), np.abs(K * r**2 - 1).max())
    ok = worst <= 1e-10 and sph <= 1e-10
    return record(5, "adjugate identity and sphere exactness", ok, f"adj residual {worst:.1e}, sphere {sph:.1e}")


def _regular_points(field, box, n, rng):
    out = []
    while sum(len(o) for o in out) < n:
        p = box.lo_array + rng.random((4 * n, field.dim)) * (box.hi_array - box.lo_array)
        p = p[field.in_domain(p)]
        _, g, _ = field.jets(p, check=False)
        out.append(p[np.linalg.norm(g, axis=1) >= 1e-2])
    return np.concatenate(out)[:n]


def criterion_6():
    rng = np.random.default_rng(6)
    fields = [
        ("sphere", builtin_field("sphere"), SPHERE_BOX),
        ("double_well", builtin_field("double_well"), DW_BOX),
        ("torus", builtin_field("torus", R=2), TORUS_BOX),
        ("quadric", builtin_field("quadric", A=[1.0, 2.0, 3.0]), SPHERE_BOX),
    ]
    errs = {}
    for name, f, box in fields:
        pts = _regular_points(f, box, 1000, rng)
        _, g, h = f.jets(pts)
        H, _, _ = curvature_batch(g, h)
        errs[name] = float(np.abs(H - divergence_H_batch(f, pts)).max())
    ok = max(errs.values()) <= 1e-4
    return record(6, "divergence oracle agreement", ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()))


def criterion_7():
    radii = [1e-1, 1e-2, 1e-3, 1e-4]
    cases = [
        ("sphere", builtin_field("sphere"), SPHERE_BOX),
        ("double_well", builtin_field("double_well"), DW_BOX),
        ("quadric(1,2,3)", builtin_field("quadric", A=[1.0, 2.0, 3.0]), SPHERE_BOX),
        ("quadric(1,-2,3)", builtin_field("quadric", A=[1.0, -2.0, 3.0]), SPHERE_BOX),
    ]
    worst, count = 0.0, 0
    for _, f, box in cases:
        cps = find_critical_points(f, box)
        for cp in cps:
            table = singularity_probe(f, cp, radii, others=cps)
            worst = max(worst, *table.ratios().values())
            count += 1
    ok = count == 6 and worst < 10.0
    return record(7, "near-critical growth rates", ok, f"{count} critical points, worst ratio {worst:.3g}")


def _cli(args, out):
    subprocess.run([sys.executable, "-m", "levelgeom", *args, "--out", str(out)], check=True, capture_output=True)


def criterion_8(tmp):
    verify = ["verify", "--field", "sphere", "--interval", "1", "4", "--box", "-2.5", "2.5",
              "--samples", "500000", "--seed", "11", "--identities", "coarea,thm_b,prop_a"]
    prof = ["profile", "--field", "sphere", "--interval", "1", "4", "--box", "-2.5", "2.5",
            "--samples", "500000", "--seed", "11", "--bins", "30"]
    same = []
    for args, name in ((verify, "reports.json"), (prof, "profile.csv")):
        _cli(args, tmp / "a")
        _cli(args, tmp / "b")
        same.append((tmp / "a" / name).read_bytes() == (tmp / "b" / name).read_bytes())
    json.loads((tmp / "a" / "reports.json").read_text())
    return record(8, "byte-identical artifacts", all(same), f"reports.json {same[0]}, profile.csv {same[1]}")


def criterion_9():
    f = builtin_field("sphere")
    covered = {"volume": 0, "grad_norm": 0}
    truths = {"volume": (q.one, 28 * PI / 3), "grad_norm": (q.grad_norm, 30 * PI)}
    for seed in range(100):
        cfg = q.QuadratureConfig(samples=200_000, seed=seed)
        est, _, _, _ = q.sweep(f, SPHERE_BOX, Interval(1, 4), cfg, {k: g for k, (g, _) in truths.items()})
        for k, (_, truth) in truths.items():
            covered[k] += abs(est[k].value - truth) <= 3 * est[k].std_error
    ok = min(covered.values()) >= 95
    return record(9, "3-sigma coverage over 100 seeds", ok, ", ".join(f"{k} {v}/100" for k, v in covered.items()))


# -- pytest entry points -------------------------------------------------------------


def test_criterion_1_sphere_suite():
    assert criterion_1()


def test_criterion_2_derivative():
    assert criterion_2()


def test_criterion_3_critical_crossing():
    assert criterion_3()


def test_criterion_4_topology():
    assert criterion_4()


def test_criterion_5_algebra():
    assert criterion_5()


def test_criterion_6_divergence_oracle():
    assert criterion_6()


def test_criterion_7_growth_rates():
    assert criterion_7()


def test_criterion_8_determinism(tmp_path):
    assert criterion_8(tmp_path)


@pytest.mark.slow
def test_criterion_9_coverage():
    assert criterion_9()


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]
    results = [c() for c in checks]
    with tempfile.TemporaryDirectory() as tmp:
        results.append(criterion_8(Path(tmp)))
    results.append(criterion_9())
    sys.exit(0 if all(results) else 1)
