"""Command-line interface.

Every command reads a JSON config (``--config``), writes CSV/JSON reports
into ``--out`` and exits with 0 (all checks passed), 1 (violations found)
or 2 (configuration or runtime error).
"""

import argparse
import json
import math
import os
import sys
from dataclasses import fields, replace

import numpy as np
from scipy import optimize

from .detect import DetectorConfig, classify_batch, write_csv
from .errors import ConfigError, PeriodFnError
from .expr import PolynomialField
from .flow import Domain, FlowSpec, field_batch
from .gallery import gallery_get
from .geometry import orbit_geometry_batch, write_geometry_csv
from .grid import box_region, disk_region, make_grid, sector_region
from .linearization import classify_fixed_point, gamma_estimate, period_blowup_probe
from .period_function import (FieldConfig, build_period_field, check_regularity,
                              detect_generator, probe_conditions, verify_p_function,
                              zp_divisibility_test)

COMMANDS = ("classify", "field", "generator", "fixedpoints", "geometry", "probe",
            "verify-paper")


# -- config ----------------------------------------------------------------

def _need(cfg, key, where="config"):
    if key not in cfg:
        raise ConfigError(f"{where} is missing {key!r}")
    return cfg[key]


def load_flow(spec):
    """Flow and default detector config from the ``flow`` section."""
    if not isinstance(spec, dict):
        raise ConfigError("flow must be an object")
    kind = _need(spec, "type", "flow")
    if kind == "gallery":
        entry = gallery_get(_need(spec, "name", "flow"), spec.get("params") or {})
        return entry.flow, entry.detector
    if kind == "polynomial_field":
        dim = int(_need(spec, "dim", "flow"))
        comps = _need(spec, "components", "flow")
        if not isinstance(comps, list) or len(comps) != dim:
            raise ConfigError("components must list one expression per dimension")
        cls = spec.get("class", "Cinf")
        if cls not in ("C1", "C2", "Cinf"):
            raise ConfigError("class must be one of C1, C2, Cinf")
        dom_spec = spec.get("domain")
        if dom_spec:
            dom = Domain(dom_spec["lo"], dom_spec["hi"], dom_spec.get("periodic"))
        else:
            dom = Domain.euclidean(dim, float(spec.get("bound", 1e6)))
        vf = PolynomialField(comps, dim)
        flow = FlowSpec(dom, "vector_field", field=vf, jacobian=vf.jacobian,
                        smoothness=cls, expressions=vf.components,
                        name=spec.get("name", "polynomial_field"))
        return flow, DetectorConfig()
    raise ConfigError(f"unknown flow type {kind!r}")


def _override(obj, values, scale=1.0, scaled=()):
    if not values and scale == 1.0:
        return obj
    names = {f.name for f in fields(obj)}
    values = dict(values or {})
    bad = set(values) - names
    if bad:
        raise ConfigError(f"unknown settings {sorted(bad)} for {type(obj).__name__}")
    obj = replace(obj, **values)
    if scale != 1.0:
        obj = replace(obj, **{k: getattr(obj, k) * scale for k in scaled})
    return obj


def load_region(spec):
    if spec is None:
        return None
    kind = _need(spec, "type", "region")
    if kind == "disk":
        return disk_region(float(spec.get("r_max", 1.0)), float(spec.get("r_min", 0.0)),
                           tuple(spec.get("dims", (0, 1))))
    if kind == "sector":
        return sector_region(float(spec["r_min"]), float(spec["r_max"]),
                             float(spec["angle_lo"]), float(spec["angle_hi"]))
    if kind == "box":
        return box_region(spec["lo"], spec["hi"])
    raise ConfigError(f"unknown region type {kind!r}")


def load_grid(flow, spec):
    if spec is None:
        raise ConfigError("config needs a 'grid' section")
    region = load_region(spec.get("region"))
    if "axes" in spec:
        return make_grid(flow.domain, axes=spec["axes"], region=region)
    return make_grid(flow.domain, spec.get("resolution", 41), region,
                     bounds=spec.get("bounds"))


def load_points(flow, cfg, rng):
    if "points" in cfg:
        X = np.asarray(cfg["points"], dtype=float)
        if X.ndim != 2 or X.shape[1] != flow.dim:
            raise ConfigError(f"points must be a list of {flow.dim}-vectors")
        return flow.domain.wrap(X)
    if "random_points" in cfg:
        spec = cfg["random_points"]
        n = int(spec.get("n", 100))
        bounds = np.asarray(spec.get("bounds"), dtype=float)
        region = load_region(spec.get("region"))
        out = []
        while sum(len(o) for o in out) < n:
            X = rng.uniform(bounds[:, 0], bounds[:, 1], (4 * n, flow.dim))
            if region is not None:
                X = X[region(X)]
            out.append(X)
        return flow.domain.wrap(np.concatenate(out)[:n])
    if "grid" in cfg:
        return load_grid(flow, cfg["grid"]).points
    raise ConfigError("config needs 'points', 'random_points' or 'grid'")


# -- commands --------------------------------------------------------------

class Context:
    def __init__(self, args, cfg):
        self.args = args
        self.cfg = cfg
        self.seed = args.seed
        self.rng = np.random.default_rng(args.seed)
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        self.flow = None
        if args.command != "verify-paper":
            self.flow, det = load_flow(_need(cfg, "flow"))
            self.detector = _override(det, cfg.get("detector"), args.tol_scale,
                                      ("return_tol", "fixed_tol"))
            self.field_cfg = _override(FieldConfig(threads=args.threads), cfg.get("field"),
                                       args.tol_scale, ("verify_tol", "continuity_tol"))

    def header(self):
        name = self.flow.name if self.flow is not None else "-"
        return f"seed={self.seed} command={self.args.command} flow={name}"

    def path(self, name):
        return os.path.join(self.out, name)

    def write_json(self, name, obj):
        obj = dict(obj)
        obj.setdefault("seed", self.seed)
        with open(self.path(name), "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def cmd_classify(ctx):
    X = load_points(ctx.flow, ctx.cfg, ctx.rng)
    batch = classify_batch(ctx.flow, X, ctx.detector, ctx.args.threads)
    with open(ctx.path("classify.csv"), "w") as fh:
        write_csv(fh, batch, ctx.header())
    counts = {s: int(np.sum(batch.status == s)) for s in np.unique(batch.status)}
    print(f"classified {len(batch)} points: {counts}")
    return 0


def _build_field(ctx):
    grid = load_grid(ctx.flow, ctx.cfg.get("grid"))
    return build_period_field(ctx.flow, grid, ctx.detector, ctx.field_cfg)


def cmd_field(ctx):
    fld = _build_field(ctx)
    with open(ctx.path("field.csv"), "w") as fh:
        fld.to_csv(fh, ctx.header())
    reg = check_regularity(ctx.flow, fld, fld.points,
                           continuity_tol=ctx.field_cfg.continuity_tol)
    ver = verify_p_function(ctx.flow, fld.points, fld.theta, ctx.field_cfg.verify_tol)
    ctx.write_json("field_report.json", {
        "trivial": fld.trivial, "reason": fld.reason, "points": len(fld),
        "verify": ver.to_dict(), "regular": reg.regular,
        "regularity_max_difference": reg.max_difference,
        "regularity_witnesses": reg.witnesses})
    print(f"field over {len(fld)} points: trivial={fld.trivial} "
          f"max residual={ver.max_residual:.3g} regular={reg.regular}")
    return 0 if ver.passed and reg.regular else 1


def cmd_generator(ctx):
    fld = _build_field(ctx)
    primes = tuple(ctx.cfg.get("primes", (2, 3, 5, 7)))
    res = detect_generator(ctx.flow, fld, primes)
    gen = res.generator
    with open(ctx.path("generator.csv"), "w") as fh:
        gen.to_csv(fh, ctx.header())
    tol = ctx.field_cfg.verify_tol
    final = [] if gen.trivial else [
        zp_divisibility_test(ctx.flow, gen.theta, p, gen.points, tol) for p in primes]
    ok = gen.verified and all(r.max_pth_iterate_displacement < 10 * tol for r in final)
    ctx.write_json("zp_reports.json", {
        "group": res.group, "divisions": res.divisions, "tested_primes": list(primes),
        "trivial_reason": gen.reason,
        "generator_max_residual": gen.max_residual,
        "final_reports": [r.to_dict() for r in final],
        "all_reports": [r.to_dict() for r in res.reports]})
    print(f"group {res.group}; divided by {res.divisions}; "
          f"generator residual {gen.max_residual:.3g}")
    return 0 if ok else 1


def locate_fixed_points(flow, grid, tol=1e-9):
    """Zeros of the field near lattice minima of ``|F|``."""
    speed = np.linalg.norm(field_batch(flow, grid.points), axis=1)
    cands = []
    for i in range(len(grid)):
        nb = grid.neighbors[i]
        nb = nb[nb >= 0]
        if np.all(speed[i] <= speed[nb]):
            cands.append(grid.points[i])
    found = []
    for x0 in cands:
        if np.linalg.norm(field_batch(flow, x0[None])[0]) < tol:
            z = x0
        else:
            sol = optimize.root(lambda x: field_batch(flow, x[None])[0], x0,
                                jac=flow.jacobian, method="hybr")
            z = sol.x
        if np.linalg.norm(field_batch(flow, z[None])[0]) >= tol:
            continue
        if not any(np.linalg.norm(z - f) < 1e-6 for f in found):
            found.append(z)
    return found


def cmd_fixedpoints(ctx):
    if "fixed_points" in ctx.cfg:
        pts = [np.asarray(p, dtype=float) for p in ctx.cfg["fixed_points"]]
    else:
        pts = locate_fixed_points(ctx.flow, load_grid(ctx.flow, ctx.cfg.get("grid")),
                                  ctx.detector.fixed_tol)
    eig_tol = float(ctx.cfg.get("eig_tol", 1e-7))
    reports = []
    for z in pts:
        rep = {"fixed_point": z.tolist()}
        rep.update(classify_fixed_point(ctx.flow, z, eig_tol).to_dict())
        gspec = ctx.cfg.get("gamma")
        if gspec:
            g = gamma_estimate(ctx.flow, z, float(gspec.get("T", 1.0)), gspec["radii"],
                               seed=ctx.seed)
            rep["gamma_curve"] = g.to_dict()
        bspec = ctx.cfg.get("blowup")
        if bspec:
            b = period_blowup_probe(ctx.flow, z, float(bspec.get("epsilon", 0.5)),
                                    bspec["radii"], float(bspec.get("threshold", 10.0)),
                                    ctx.detector, seed=ctx.seed)
            rep["blowup_table"] = b.to_dict()
        reports.append(rep)
    ctx.write_json("fixedpoints.json", {"fixed_points": reports})
    for r in reports:
        print(f"{r['fixed_point']}: {r['verdict']} ({r['details']})")
    return 0


def cmd_geometry(ctx):
    X = load_points(ctx.flow, ctx.cfg, ctx.rng)
    batch = classify_batch(ctx.flow, X, ctx.detector, ctx.args.threads)
    P = X[batch.periodic]
    quad_n = int(ctx.cfg.get("quad_n", 4096))
    quad_tol = float(ctx.cfg.get("quad_tol", 1e-7))
    geoms = orbit_geometry_batch(ctx.flow, P, batch.period[batch.periodic], quad_n,
                                 quad_tol)
    with open(ctx.path("geometry.csv"), "w") as fh:
        write_geometry_csv(fh, geoms, ctx.header())
    ok = all(g.holds(quad_tol) for g in geoms)
    print(f"{len(geoms)} periodic orbits; inequalities hold: {ok}")
    return 0 if ok else 1


def cmd_probe(ctx):
    spec = ctx.cfg.get("probe", {"kind": "conditions"})
    kind = spec.get("kind", "conditions")
    if kind == "blowup":
        z = np.asarray(_need(spec, "fixed_point", "probe"), dtype=float)
        rep = period_blowup_probe(ctx.flow, z, float(spec.get("epsilon", 0.5)),
                                  _need(spec, "radii", "probe"),
                                  float(spec.get("threshold", 10.0)), ctx.detector,
                                  directions=spec.get("directions"), seed=ctx.seed)
        ctx.write_json("blowup.json", rep.to_dict())
        print(f"blow-up observed: {rep.blow_up}")
        return 0
    if kind != "conditions":
        raise ConfigError(f"unknown probe kind {kind!r}")
    fld = _build_field(ctx)
    fixed = _need(spec, "fixed_points", "probe")
    alpha = tuple(spec.get("alpha", (1, 2)))
    rep = probe_conditions(ctx.flow, fld, fixed, alpha, spec.get("radii"), seed=ctx.seed)
    ctx.write_json("conditions.json", rep.to_dict())
    print(f"(A) {rep.condA['holds']}  (D) {rep.condD_alpha['pth_power_identity']}")
    return 0


def cmd_acceptance(ctx):
    from .acceptance import run_all

    results = run_all(verbose=True)
    ctx.write_json("acceptance.json", {"criteria": [
        {"number": r.number, "name": r.name, "passed": r.passed,
         "runtime": r.runtime, "limit": r.limit, "details": r.details}
        for r in results]})
    return 0 if all(r.passed for r in results) else 1


HANDLERS = {
    "classify": cmd_classify,
    "field": cmd_field,
    "generator": cmd_generator,
    "fixedpoints": cmd_fixedpoints,
    "geometry": cmd_geometry,
    "probe": cmd_probe,
    "verify-paper": cmd_acceptance,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="periodfn",
                                 description="Period functions of flows.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=0, help="seed for random sampling")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--tol-scale", type=float, default=1.0,
                    help="multiply every tolerance by this factor")
    return ap


def run(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if args.tol_scale <= 0 or args.threads < 1:
            raise ConfigError("--tol-scale must be positive and --threads >= 1")
        if args.config:
            with open(args.config) as fh:
                cfg = json.load(fh)
            if not isinstance(cfg, dict):
                raise ConfigError("config must be a JSON object")
        elif args.command == "verify-paper":
            cfg = {}
        else:
            raise ConfigError(f"{args.command} needs --config")
        ctx = Context(args, cfg)
        return HANDLERS[args.command](ctx)
    except (OSError, json.JSONDecodeError, PeriodFnError, ValueError, KeyError,
            TypeError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
