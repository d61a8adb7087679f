"""End-to-end acceptance checks on the gallery flows.

Each ``criterion_N`` function runs one check and returns a
:class:`CriterionResult`; :func:`run_all` runs all of them.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .detect import DetectorConfig, classify_batch
from .flow import Domain
from .gallery import gallery_get
from .geometry import (CyclicActionSample, dress_bound_check, hoffman_mann_check,
                       orbit_geometry_batch, rotation_generator)
from .grid import disk_region, make_grid
from .linearization import (DEGENERATE, HYPERBOLIC, PERIODIC_TYPE,
                            classify_fixed_point, period_blowup_probe)
from .period_function import (build_period_field, circle_action, detect_generator,
                              orbit_hausdorff, verify_p_function, zp_divisibility_test)

PRIMES = (2, 3, 5, 7)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    runtime: float
    limit: float = math.inf
    details: dict = field(default_factory=dict)

    def line(self):
        lim = f" (limit {self.limit:g} s)" if math.isfinite(self.limit) else ""
        return (f"criterion {self.number} [{self.name}]: "
                f"{'PASS' if self.passed else 'FAIL'} in {self.runtime:.2f} s{lim}")


# -- shared grids ----------------------------------------------------------

def seifert_grid(entry, n=40):
    """n x n x n lattice on the solid torus: spacing 2/n on the disk
    factor with 0 on the lattice, n angles on the circle factor."""
    ax = -1.0 + (2.0 / n) * np.arange(n)
    tau = np.arange(n) / n
    return make_grid(entry.domain, axes=(ax, ax, tau), region=disk_region(1.0))


def disk_grid(entry, r_max=1.0, r_min=0.0, spacing=0.05, offset=0.0):
    m = int(round(2.0 / spacing))
    ax = -1.0 + spacing * np.arange(m + 1)
    return make_grid(entry.domain, axes=(ax + offset, ax), region=disk_region(r_max, r_min))


def _random_disk(rng, n, r_min, r_max):
    r = np.sqrt(rng.uniform(r_min ** 2, r_max ** 2, n))
    a = rng.uniform(0, 2 * np.pi, n)
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


# -- criteria ----------------------------------------------------------------

def criterion_1(ks=(2, 3, 5), threads=1):
    details = {}
    ok_all = True
    worst = 0.0
    for k in ks:
        t0 = time.perf_counter()
        e = gallery_get("seifert", k=k)
        grid = seifert_grid(e)
        fld = build_period_field(e.flow, grid, e.detector)
        gen = detect_generator(e.flow, fld, PRIMES).generator
        dev = float(np.max(np.abs(gen.theta - k)))
        central = np.all(grid.points[:, :2] == 0.0, axis=1)
        mult_ok = bool(np.all(gen.multiplier[central] == k)
                       and np.all(gen.multiplier[~central] == 1))
        zp = [zp_divisibility_test(e.flow, gen, p, grid.points, gen.config.verify_tol)
              for p in PRIMES]
        not_div = all(not r.divisible for r in zp)
        dt = time.perf_counter() - t0
        worst = max(worst, dt)
        ok = (not gen.trivial) and dev < 1e-5 and mult_ok and not_div and dt < 60
        ok_all &= ok
        details[f"k={k}"] = {"points": len(grid), "max_deviation": dev,
                             "central_points": int(central.sum()),
                             "multiplier_ok": mult_ok,
                             "zp_divisible": {r.p: r.divisible for r in zp},
                             "zp_pth_power_displacement": {
                                 r.p: r.max_pth_iterate_displacement for r in zp},
                             "runtime": dt}
    return CriterionResult(1, "Seifert dichotomy", ok_all, worst, 60.0, details)


def criterion_2():
    t0 = time.perf_counter()
    e0 = gallery_get("c0_disk")
    g0 = disk_grid(e0)
    f0 = detect_generator(e0.flow, build_period_field(e0.flow, g0, e0.detector)).generator
    r2 = np.sum(g0.points ** 2, axis=1)
    err0 = float(np.max(np.abs(f0.theta - r2)))
    origin = np.nonzero(r2 == 0)[0]
    th0 = float(f0.theta[origin[0]])

    e1 = gallery_get("c_inf_disk")
    g1 = disk_grid(e1, 1.0, 0.2)
    f1 = detect_generator(e1.flow, build_period_field(e1.flow, g1, e1.detector)).generator
    r2 = np.sum(g1.points ** 2, axis=1)
    err1 = float(np.max(np.abs(f1.theta * r2 - 1.0)))

    # punctured disk whose lattice contains the point (0.03, 0)
    g2 = disk_grid(e1, 1.0, 0.03, offset=0.03)
    f2 = detect_generator(e1.flow, build_period_field(e1.flow, g2, e1.detector)).generator
    r = np.sqrt(np.sum(g2.points ** 2, axis=1))
    i = int(np.argmin(np.abs(r - 0.03)))
    growth = float(f2.theta[i])
    dt = time.perf_counter() - t0
    ok = (not f0.trivial and err0 < 1e-4 and th0 < 1e-4 and not f1.trivial
          and err1 < 1e-4 and growth > 1e3 and dt < 30)
    return CriterionResult(2, "C0/C1 contrast", ok, dt, 30.0, {
        "c0_max_abs_error": err0, "c0_theta_at_origin": th0,
        "c_inf_max_rel_error": err1, "c_inf_theta_at_0.03": growth,
        "c_inf_radius_used": float(r[i])})


def criterion_3():
    t0 = time.perf_counter()
    details = {}
    ok = True
    for beta in (1.0, 3.0, 2 * np.pi):
        e = gallery_get("rotation", beta=beta)
        c = classify_fixed_point(e.flow, [0.0, 0.0])
        eig = np.sort_complex(c.linear_part.eigenvalues)
        err = float(np.max(np.abs(eig - np.array([-1j * beta, 1j * beta]))))
        good = c.verdict == PERIODIC_TYPE and err < 1e-7
        ok &= good
        details[f"rotation({beta:g})"] = {"verdict": c.verdict, "eig_error": err}
    ax = np.linspace(-0.5, 0.5, 11)
    for name, want in (("hamiltonian_even", DEGENERATE), ("saddle", HYPERBOLIC)):
        e = gallery_get(name)
        c = classify_fixed_point(e.flow, [0.0, 0.0])
        grid = make_grid(e.domain, axes=(ax, ax), region=disk_region(0.5))
        fld = build_period_field(e.flow, grid, e.detector)
        off = ~fld.fixed
        mx = float(np.max(np.abs(fld.theta[off])))
        good = c.verdict == want and mx < 1e-6
        if name == "hamiltonian_even":
            blocks = [(b.kind, b.re, b.size) for b in c.linear_part.blocks]
            good &= blocks == [("real", 0.0, 2)]
        ok &= good
        details[name] = {"verdict": c.verdict, "details": c.details,
                         "max_theta_off_fix": mx, "reason": fld.reason}
    dt = time.perf_counter() - t0
    return CriterionResult(3, "linear part at fixed points", bool(ok and dt < 10), dt,
                           10.0, details)


def criterion_4():
    t0 = time.perf_counter()
    radii = [0.5, 0.25, 0.125, 0.0625]
    e = gallery_get("hamiltonian_even", b=2)
    rep = period_blowup_probe(e.flow, [0.0, 0.0], 0.5, radii, threshold_T=10.0,
                              detector=e.detector)
    mins = rep.min_periods()
    axis = rep.axis_periods()
    increasing = bool(np.all(np.diff(mins) > 0))
    ratio_axis = float(axis[-1] / axis[0])
    ratio_min = float(mins[-1] / mins[0])
    ang = 2 * np.pi * np.arange(8) / 8
    dirs = np.column_stack([np.zeros(8), np.zeros(8), np.cos(ang), np.sin(ang)])
    ef = gallery_get("flat_circle")
    rf = period_blowup_probe(ef.flow, np.zeros(4), 0.5, radii, threshold_T=10.0,
                             detector=ef.detector, directions=dirs)
    flat_err = max(max(abs(r["min_period"] - 2 * np.pi), abs(r["max_period"] - 2 * np.pi))
                   for r in rf.rows)
    flat_ok = all(r["n_periodic"] == r["n_samples"] for r in rf.rows) and flat_err < 1e-5
    dt = time.perf_counter() - t0
    ok = increasing and ratio_axis > 4 and flat_ok and dt < 60
    return CriterionResult(4, "period blow-up", ok, dt, 60.0, {
        "min_periods": mins.tolist(), "axis_periods": axis.tolist(),
        "axis_ratio": ratio_axis, "cone_min_ratio": ratio_min,
        "flat_circle_max_error": flat_err})


def _orbit_samples(seed=0):
    """(entry, points) pairs spread over the gallery."""
    rng = np.random.default_rng(seed)
    out = []
    for beta in (1.0, 3.0, 2 * np.pi):
        out.append((gallery_get("rotation", beta=beta), _random_disk(rng, 20, 0.05, 1.5)))
    for k in (2, 3, 5):
        z = _random_disk(rng, 20, 0.0, 1.0)
        out.append((gallery_get("seifert", k=k),
                    np.column_stack([z, rng.uniform(0, 1, 20)])))
    out.append((gallery_get("c_inf_disk"), _random_disk(rng, 30, 0.3, 1.0)))
    out.append((gallery_get("c0_disk"), _random_disk(rng, 30, 0.1, 1.0)))
    out.append((gallery_get("hamiltonian_even", b=2), _random_disk(rng, 20, 0.2, 1.0)))
    v = _random_disk(rng, 20, 0.1, 1.0)
    out.append((gallery_get("flat_circle"),
                np.column_stack([np.zeros(20), rng.uniform(-1, 1, 20), v])))
    return out


def criterion_5(seed=0, quad_n=4096, quad_tol=1e-7):
    t0 = time.perf_counter()
    n = 0
    worst1 = worst2 = np.inf
    per_flow = {}
    for e, X in _orbit_samples(seed):
        b = classify_batch(e.flow, X, e.detector)
        P = X[b.periodic]
        geoms = orbit_geometry_batch(e.flow, P, b.period[b.periodic], quad_n, quad_tol)
        s1 = min(g.slack_diameter for g in geoms)
        s2 = min(g.slack_speed for g in geoms)
        worst1, worst2 = min(worst1, s1), min(worst2, s2)
        n += len(geoms)
        per_flow[e.flow.name] = {"orbits": len(geoms), "min_slack_diameter": s1,
                                 "min_slack_speed": s2}
    dt = time.perf_counter() - t0
    ok = n >= 200 and worst1 >= -1e-7 and worst2 >= -1e-7 and dt < 60
    return CriterionResult(5, "orbit inequalities", ok, dt, 60.0, {
        "orbits": n, "min_slack_diameter": worst1, "min_slack_speed": worst2,
        "per_flow": per_flow})


def _generator_cases():
    """Flows with a nonzero generator, with a sampler for their region."""
    cases = []
    for k in (2, 3, 5):
        e = gallery_get("seifert", k=k)

        def sample(rng, n):
            return np.column_stack([_random_disk(rng, n, 0.0, 1.0), rng.uniform(0, 1, n)])

        cases.append((e, seifert_grid(e, 20), sample))
    e = gallery_get("c0_disk")
    cases.append((e, disk_grid(e), lambda rng, n: _random_disk(rng, n, 0.0, 1.0)))
    e = gallery_get("c_inf_disk")
    cases.append((e, disk_grid(e, 1.0, 0.2), lambda rng, n: _random_disk(rng, n, 0.2, 1.0)))
    for beta in (1.0, 3.0, 2 * np.pi):
        e = gallery_get("rotation", beta=beta)
        cases.append((e, disk_grid(e), lambda rng, n: _random_disk(rng, n, 0.0, 1.0)))
    return cases


def criterion_6(seed=0, n_points=500, n_orbits=20):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    ok = True
    details = {}
    for e, grid, sample in _generator_cases():
        gen = detect_generator(e.flow, build_period_field(e.flow, grid, e.detector)).generator
        B = circle_action(e.flow, gen)
        X = sample(rng, n_points)
        Y = B.closed_form(X, np.ones(len(X)))
        res = float(np.max(e.domain.distance(Y, X)))
        b = classify_batch(e.flow, X[:n_orbits], e.detector)
        th = gen.theta_at(X[:n_orbits])
        haus = 0.0
        for i in range(n_orbits):
            if b.periodic[i]:
                haus = max(haus, orbit_hausdorff(e.flow, B, X[i], b.period[i], th[i]))
        good = res < 1e-6 and haus < 1e-4
        ok &= good
        details[e.flow.name] = {"max_residual_B1": res, "max_hausdorff": haus}
    dt = time.perf_counter() - t0
    return CriterionResult(6, "circle action", bool(ok), dt, math.inf, details)


def vanishing_propagates(fld):
    """If the field vanishes at some non-fixed lattice point, it vanishes on
    that point's whole lattice component of non-fixed points."""
    off = ~fld.fixed
    zero = off & (fld.theta == 0)
    if not zero.any():
        return True
    seen = np.zeros(len(fld), dtype=bool)
    stack = list(np.nonzero(zero)[0][:1])
    seen[stack] = True
    while stack:
        i = stack.pop()
        for j in fld.grid.neighbors[i]:
            if j >= 0 and off[j] and not seen[j]:
                seen[j] = True
                stack.append(j)
    return bool(np.all(fld.theta[seen] == 0))


def criterion_7():
    t0 = time.perf_counter()
    details = {}
    ok = True
    fields = []
    for e, grid, _ in _generator_cases()[:5]:
        fld = build_period_field(e.flow, grid, e.detector)
        fields.append((e, detect_generator(e.flow, fld).generator))
    for e, gen in fields:
        X = gen.points
        th = gen.theta
        tol = gen.config.verify_tol
        group = all(verify_p_function(e.flow, X, mu, tol).passed
                    for mu in (th + 2 * th, th - 2 * th, 3 * th - th))
        per = gen.per
        m = gen.periodic
        ratio = th[m] / per[m]
        integral = float(np.max(np.abs(ratio - np.rint(ratio)))) if m.any() else 0.0
        dp = max(zp_divisibility_test(e.flow, th, p, X, tol).max_pth_iterate_displacement
                 for p in PRIMES)
        good = group and integral < 1e-6 and dp < 1e-5
        ok &= good
        details[e.flow.name] = {"group_closed": group, "max_integrality_defect": integral,
                                "max_pth_power_displacement": dp}
    es = gallery_get("saddle")
    ax = np.linspace(-1, 1, 21)
    fs = build_period_field(es.flow, make_grid(es.domain, axes=(ax, ax)), es.detector)
    seif = [f for e, f in fields if e.name == "seifert"][0]
    unique = (vanishing_propagates(fs) and bool(np.all(fs.theta == 0))
              and vanishing_propagates(seif) and vanishing_propagates(seif.scaled(0.0)))
    ok &= unique
    details["local_uniqueness"] = {"saddle_zero": bool(np.all(fs.theta == 0)),
                                   "seifert": unique}
    dt = time.perf_counter() - t0
    return CriterionResult(7, "group and value structure", bool(ok), dt, math.inf, details)


def _half_ball_grid(r, n=15):
    ax = np.linspace(-r, r, 2 * n + 1)
    az = np.linspace(0, r, n + 1)
    dom = Domain((-r, -r, 0.0), (r, r, r), boundary_coord=2)
    return make_grid(dom, axes=(ax, ax, az),
                     region=lambda X: np.linalg.norm(X, axis=1) <= r + 1e-12)


def criterion_8():
    t0 = time.perf_counter()
    ok = True
    rows = []
    for r in (0.1, 0.5):
        ax = np.linspace(-r, r, 41)
        disk = make_grid(Domain.euclidean(2, 1.0), axes=(ax, ax), region=disk_region(r))
        half = _half_ball_grid(r)
        for p in PRIMES:
            gen2 = rotation_generator(p)
            a2 = CyclicActionSample.from_grid(disk, gen2, p)
            d2 = dress_bound_check(a2)
            h2 = hoffman_mann_check(a2, [0.0, 0.0], r, interior=True)
            a3 = CyclicActionSample.from_grid(half, rotation_generator(p), p)
            d3 = dress_bound_check(a3)
            h3 = hoffman_mann_check(a3, [0.0, 0.0, 0.0], r, interior=False, boundary_coord=2)
            good = d2.holds and d3.holds and h2.holds and h3.holds
            ok &= good
            rows.append({"r": r, "p": p, "disk_D": d2.D, "disk_C": d2.C,
                         "half_D": d3.D, "half_C": d3.C,
                         "interior_ratio": h2.ratio, "boundary_ratio": h3.ratio,
                         "boundary_face": h3.face})
    dt = time.perf_counter() - t0
    return CriterionResult(8, "diameter bounds for cyclic actions", bool(ok and dt < 10),
                           dt, 10.0, {"rows": rows})


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8)


def run_all(verbose=True):
    results = []
    for fn in CRITERIA:
        res = fn()
        if verbose:
            print(res.line(), flush=True)
        results.append(res)
    return results
