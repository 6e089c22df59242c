"""Command-line front end: ``levelgeom {verify,profile,critical,mesh}``.

Exit codes: 0 success, 1 verification or topology failure, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from . import __version__
from .errors import ConfigError, LevelGeomError, NotMorseError, ParseError, TopologyError
from .fields import BoundingBox, Interval
from .identities import SuiteConfig, WeightSpec, make_field, run_suite, summarize, summary_line
from .reports import FAIL, IDENTITIES, dumps

log = logging.getLogger("levelgeom")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "field": None,
    "dim": 3,
    "interval": None,
    "box": [-3.0, 3.0],
    "samples": 1_000_000,
    "seed": 0,
    "strata": 8,
    "bins": 64,
    "resolution": 128,
    "identities": "all",
    "out": "out",
    "weight": "1",
    "t0": None,
    "fd_step": None,
    "coarea_g": "value",
    "workers": 1,
    "seed_grid": 8,
    "level": None,
    "json": False,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _common(p):
    # every default is None so that file values survive unless a flag is given
    p.add_argument("--config", help="JSON file with any of the flag values (flags win)")
    p.add_argument("--field", help="builtin name (sphere, double_well, torus(R=2), quadric(1,2,3)) or expression")
    p.add_argument("--dim", type=int, help="dimension d of the ambient space (3, 4 or 5)")
    p.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    p.add_argument("--box", type=float, nargs="+", metavar="X", help="lo hi (uniform) or lo1 hi1 ... lod hid")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--strata", type=int, help="strata per axis")
    p.add_argument("--workers", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--resolution", type=int, help="marching-cubes cells per axis")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser():
    parser = _Parser(prog="levelgeom", description="Numerical checks of level-set integral identities.")
    parser.add_argument("--version", action="version", version=f"levelgeom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="run the identity suite and write reports.json")
    _common(p)
    p.add_argument("--identities", help=f"comma or space separated subset of {','.join(IDENTITIES)}, or 'all'")
    p.add_argument("--weight", help="h(t): constant '2', 'indicator:lo,hi' or 'poly:c0,c1,...'")
    p.add_argument("--t0", type=float, help="level for the derivative check")
    p.add_argument("--fd-step", dest="fd_step", type=float, help="finite-difference step for the derivative check")
    p.add_argument("--coarea-g", dest="coarea_g", choices=("value", "one", "grad_norm"))
    p.add_argument("--seed-grid", dest="seed_grid", type=int, help="Newton seeds per axis")

    p = sub.add_parser("profile", help="write the binned nu(t) profile as profile.csv")
    _common(p)

    p = sub.add_parser("critical", help="list critical points and the regular decomposition")
    _common(p)
    p.add_argument("--seed-grid", dest="seed_grid", type=int)
    p.add_argument("--json", action="store_const", const=True, help="also write critical.json")

    p = sub.add_parser("mesh", help="extract a level surface and write mesh.off")
    _common(p)
    p.add_argument("--level", "-t", type=float, help="level value t")
    return parser


def resolve(args):
    """Merge defaults, the optional JSON config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        opts.update(data)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if not opts["field"]:
        raise ConfigError("a field is required (--field)")
    for key in ("samples", "strata", "bins", "resolution", "workers", "seed_grid"):
        if not isinstance(opts[key], int) or isinstance(opts[key], bool):
            raise ConfigError(f"{key} must be an integer")
    return opts


def _field(opts, d=None):
    return make_field(str(opts["field"]), opts["dim"] if d is None else d)


def _box(opts, d):
    vals = [float(x) for x in opts["box"]]
    if len(vals) == 2:
        return BoundingBox.cube(vals[0], vals[1], d)
    if len(vals) == 2 * d:
        return BoundingBox(tuple(vals[0::2]), tuple(vals[1::2]))
    raise ConfigError(f"--box needs 2 or {2 * d} numbers, got {len(vals)}")


def _interval(opts, required=True):
    iv = opts["interval"]
    if iv is None:
        if required:
            raise ConfigError("an interval is required (--interval A B)")
        return None
    if len(iv) != 2:
        raise ConfigError("interval needs two numbers")
    return Interval(float(iv[0]), float(iv[1]))


def _quad(opts):
    from .quadrature import QuadratureConfig

    return QuadratureConfig(samples=opts["samples"], seed=opts["seed"], strata=opts["strata"], workers=opts["workers"])


def _identities(spec):
    if isinstance(spec, (list, tuple)):
        spec = ",".join(spec)
    names = [s.strip().upper() for s in str(spec).replace(",", " ").split()]
    if not names or names == ["ALL"]:
        return IDENTITIES
    bad = [n for n in names if n not in IDENTITIES]
    if bad:
        raise ConfigError(f"unknown identities {bad}; choose from {', '.join(IDENTITIES)} or all")
    return tuple(i for i in IDENTITIES if i in names)


def _outdir(opts):
    out = opts["out"]
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _echo(opts, command):
    """Run parameters recorded in every artifact."""
    keep = {k: v for k, v in opts.items() if k not in ("out", "json")}
    return {"command": command, "version": __version__, **keep}


def _r4(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4g}"


# -- commands ------------------------------------------------------------------------


def cmd_verify(opts):
    from .meshing import GridSpec

    field = _field(opts)
    box = _box(opts, field.dim)
    cfg = SuiteConfig(
        field=field,
        interval=_interval(opts),
        box=box,
        quad=_quad(opts),
        grid=GridSpec(box, opts["resolution"]) if field.dim == 3 else None,
        identities=_identities(opts["identities"]),
        weight=WeightSpec.parse(str(opts["weight"])),
        coarea_integrand=opts["coarea_g"],
        t0=opts["t0"],
        fd_step=opts["fd_step"],
        bins=opts["bins"],
        seed_grid=opts["seed_grid"],
    )
    out = _outdir(opts)
    reports = run_suite(cfg)
    line = summary_line(reports)
    doc = {"run": _echo(opts, "verify"), "reports": [r.to_json() for r in reports], "summary": line}
    with open(os.path.join(out, "reports.json"), "w") as fh:
        fh.write(dumps(doc) + "\n")
    for r in reports:
        lv = getattr(r.lhs, "value", r.lhs)
        rv = getattr(r.rhs, "value", r.rhs)
        tag = r.identity + (f"[{r.component}]" if r.component else "")
        print(f"{tag:<12} {r.verdict:<8} lhs={_r4(lv)} rhs={_r4(rv)} diff={_r4(r.abs_diff)} tol={_r4(r.tolerance)}")
        for note in r.notes:
            log.info("  %s: %s", tag, note)
    print(line)
    return EXIT_FAIL if FAIL in summarize(reports).values() else EXIT_OK


def cmd_profile(opts):
    from .morse import find_critical_points
    from .quadrature import nu_profile

    field = _field(opts)
    box = _box(opts, field.dim)
    interval = _interval(opts)
    if opts["bins"] < 1:
        raise ConfigError("bins must be at least 1")
    if interval.length <= 0:
        raise ConfigError("profile needs a < b")
    try:
        crit = tuple(c.value for c in find_critical_points(field, box, opts["seed_grid"], interval=interval))
    except NotMorseError as exc:
        log.warning("critical point search failed (%s); bins are not flagged", exc)
        crit = ()
    prof = nu_profile(field, interval, opts["bins"], box, _quad(opts), critical_values=crit)
    out = _outdir(opts)
    path = os.path.join(out, "profile.csv")
    with open(path, "w") as fh:
        fh.write("# " + dumps(_echo(opts, "profile")) + "\n")
        if prof.flagged_bins:
            fh.write(f"# bins containing critical values: {list(prof.flagged_bins)}\n")
        fh.write("t,nu,stderr\n")
        for t, v, s in zip(prof.centers, prof.values, prof.std_errors):
            fh.write(f"{t:.17g},{v:.17g},{s:.17g}\n")
    print(f"wrote {path} ({len(prof.values)} bins over [{_r4(interval.a)}, {_r4(interval.b)}])")
    return EXIT_OK


def cmd_critical(opts):
    from .morse import find_critical_points, regular_decomposition

    field = _field(opts)
    box = _box(opts, field.dim)
    interval = _interval(opts, required=False)
    try:
        cps = find_critical_points(field, box, opts["seed_grid"], interval=interval)
    except NotMorseError as exc:
        print(f"not Morse: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"{'location':<40} {'value':>10} {'index':>5}")
    for c in cps:
        loc = "(" + ", ".join(_r4(x) for x in c.location) + ")"
        print(f"{loc:<40} {_r4(c.value):>10} {c.morse_index:>5}")
    if not cps:
        print("(no critical points found in the box)")
    doc = {"run": _echo(opts, "critical"), "critical_points": [c.to_json() for c in cps]}
    if interval is not None:
        dec = regular_decomposition(cps, interval)
        ivs = ", ".join(f"({_r4(lo)}, {_r4(hi)})" for lo, hi in dec.intervals) or "none"
        print(f"critical values in [{_r4(interval.a)}, {_r4(interval.b)}]: {[_r4(v) for v in dec.critical_values]}")
        print(f"regular intervals: {ivs}")
        doc["decomposition"] = dec.to_json()
    if opts["json"]:
        path = os.path.join(_outdir(opts), "critical.json")
        with open(path, "w") as fh:
            fh.write(dumps(doc) + "\n")
        print(f"wrote {path}")
    return EXIT_OK


def cmd_mesh(opts):
    from .meshing import (
        GridSpec,
        connected_components,
        euler_characteristic,
        extract_level_set,
        surface_area,
        write_off,
    )

    if opts["dim"] != 3:
        raise ConfigError(f"mesh extraction needs d = 3, got d = {opts['dim']}")
    if opts["level"] is None:
        raise ConfigError("a level is required (--level T)")
    field = _field(opts)
    if field.dim != 3:
        raise ConfigError(f"mesh extraction needs d = 3, field has d = {field.dim}")
    grid = GridSpec(_box(opts, 3), opts["resolution"])
    mesh = extract_level_set(field, opts["level"], grid)
    out = _outdir(opts)
    path = os.path.join(out, "mesh.off")
    write_off(mesh, path, comments=[dumps(_echo(opts, "mesh"))])
    if mesh.is_empty:
        log.warning("level %s does not meet the box: empty mesh", _r4(opts["level"]))
        print(f"wrote {path} (empty mesh)")
        return EXIT_OK
    code = EXIT_OK
    try:
        chi = str(euler_characteristic(mesh))
    except TopologyError as exc:
        log.error("topology: %s", exc)
        chi, code = "undefined", EXIT_FAIL
    print(f"wrote {path}")
    print(f"vertices={len(mesh.vertices)} triangles={len(mesh.triangles)} area={_r4(surface_area(mesh))}")
    print(f"components={connected_components(mesh)} chi={chi}")
    return code


COMMANDS = {"verify": cmd_verify, "profile": cmd_profile, "critical": cmd_critical, "mesh": cmd_mesh}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        opts = resolve(args)
        return COMMANDS[args.command](opts)
    except ParseError as exc:
        print(f"error: cannot parse field: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TopologyError as exc:
        print(f"topology error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except LevelGeomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
