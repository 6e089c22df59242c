"""Estimate and report records shared by quadrature, meshing and identities."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

IDENTITIES = ("COAREA", "THM_A", "COR_VPRIME", "THM_B", "PROP_A", "PROP_B")

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


@dataclass(frozen=True)
class IntegralEstimate:
    """A numerical estimate with a one-sigma error.

    For Monte Carlo results ``std_error`` is the statistical standard error;
    for mesh-derived values it is a discretization error estimate.
    """

    value: float
    std_error: float = 0.0
    samples_used: int = 0
    hit_fraction: float = 0.0
    flags: tuple = ()

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be non-negative")
        if not 0.0 <= self.hit_fraction <= 1.0:
            raise ValueError("hit_fraction must lie in [0, 1]")

    def scaled(self, c):
        return IntegralEstimate(
            self.value * c, self.std_error * abs(c), self.samples_used, self.hit_fraction, self.flags
        )

    def __sub__(self, other):
        return IntegralEstimate(
            self.value - other.value,
            math.hypot(self.std_error, other.std_error),
            self.samples_used + other.samples_used,
            0.0,
            self.flags + other.flags,
        )

    def within(self, truth, k_sigma=3.0, rel=0.0):
        return abs(self.value - truth) <= max(k_sigma * self.std_error, rel * abs(truth))


Quantity = Union[IntegralEstimate, float]


def _value(q):
    return float(q.value) if isinstance(q, IntegralEstimate) else float(q)


def _sigma(q):
    return q.std_error if isinstance(q, IntegralEstimate) else 0.0


@dataclass
class IdentityReport:
    identity: str
    lhs: Quantity
    rhs: Quantity
    abs_diff: float
    tolerance: float
    verdict: str
    notes: list = field(default_factory=list)
    component: int = None  # coordinate index for PROP_A
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == PASS

    def to_json(self):
        out = {
            "identity": self.identity,
            "lhs": {"value": _value(self.lhs), "stderr": _sigma(self.lhs)},
            "rhs": {"value": _value(self.rhs), "stderr": _sigma(self.rhs)},
            "diff": self.abs_diff,
            "tolerance": self.tolerance,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }
        if self.component is not None:
            out["component"] = self.component
        if self.details:
            out["details"] = self.details
        return out


def make_report(identity, lhs, rhs, notes=(), k_sigma=3.0, abs_floor=None, component=None, details=None):
    """Build a report; passes iff |lhs - rhs| <= max(abs_floor, k_sigma * combined sigma).

    ``abs_floor`` defaults to 1e-3 * max(|lhs|, |rhs|, 1).
    """
    lv, rv = _value(lhs), _value(rhs)
    diff = float(abs(lv - rv))
    sigma = math.hypot(_sigma(lhs), _sigma(rhs))
    if abs_floor is None:
        abs_floor = 1e-3 * max(abs(lv), abs(rv), 1.0)
    tol = max(abs_floor, k_sigma * sigma)
    return IdentityReport(
        identity=identity,
        lhs=lhs,
        rhs=rhs,
        abs_diff=diff,
        tolerance=tol,
        verdict=PASS if diff <= tol else FAIL,
        notes=list(notes),
        component=component,
        details=dict(details or {}),
    )


def skipped_report(identity, reason, notes=()):
    return IdentityReport(
        identity=identity,
        lhs=math.nan,
        rhs=math.nan,
        abs_diff=math.nan,
        tolerance=math.nan,
        verdict=SKIPPED,
        notes=[reason, *notes],
    )


# -- serialization -------------------------------------------------------------------


def _fmt(x):
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return "null"
        return format(x, ".17g")
    if isinstance(x, int):
        return str(x)
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    if hasattr(x, "item"):  # numpy scalar
        return _fmt(x.item())
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj):
    """JSON text with every float printed to 17 significant digits."""
    return _fmt(obj)
