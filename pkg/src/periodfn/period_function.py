"""Period functions on sampled open sets.

A period function ``mu`` on V satisfies ``Phi(x, mu(x)) = x`` for every x in
V. Its values at periodic points are integer multiples of the minimal
period and it vanishes on non-periodic points. This module builds the
positive generator ``theta`` of the group of continuous period functions on
a lattice, verifies period functions, checks orbit constancy, extends them
along the flow, tests divisibility by primes and probes the behaviour of the
maps ``d(x) = Phi(x, alpha * mu(x))`` near fixed points.
"""

import csv
import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .detect import DetectorConfig, classify_batch, sphere_directions
from .errors import FieldVanishesOffFix, InconsistentRepair, NotInSaturation
from .flow import FlowSpec, propagate
from .grid import Grid, interpolate, make_grid

DEFAULT_PRIMES = (2, 3, 5, 7)


@dataclass(frozen=True)
class FieldConfig:
    continuity_tol: float = 1e-3
    verify_tol: float = 1e-6
    probe_scale: float = 1e-4  # continuity probes at this fraction of the spacing
    max_multiplier: int = 64
    neighbor_slack: float = 0.25  # |n Per - theta_nb| allowed in units of Per
    fit_rings: int = 2
    fix_probe_levels: int = 4
    threads: int = 1


def probe_directions(dim):
    """Two fixed unit directions: the diagonal and an alternating-sign one."""
    a = np.ones(dim) / np.sqrt(dim)
    b = np.array([(-1.0) ** i for i in range(dim)]) / np.sqrt(dim)
    if dim == 1:
        b = -a
    return np.stack([a, b])


@dataclass(eq=False)
class PeriodFunctionField:
    """Lattice-sampled period function with its repair bookkeeping."""

    flow: FlowSpec
    grid: Grid
    per: np.ndarray  # minimal period, nan where not periodic
    code: np.ndarray  # detector status codes
    theta: np.ndarray
    multiplier: np.ndarray
    dense_mask: np.ndarray
    residual: np.ndarray
    detector: DetectorConfig
    config: FieldConfig = field(default_factory=FieldConfig)
    trivial: bool = False
    reason: str = ""

    @property
    def fixed(self):
        return self.code == 0

    @property
    def periodic(self):
        return self.code == 1

    @property
    def points(self):
        return self.grid.points

    @property
    def max_residual(self):
        return float(np.max(self.residual)) if len(self.residual) else 0.0

    @property
    def verified(self):
        return self.max_residual < self.config.verify_tol

    def __len__(self):
        return len(self.theta)

    def with_theta(self, theta, multiplier=None, trivial=None, reason=None):
        theta = np.asarray(theta, dtype=float)
        if multiplier is None:
            with np.errstate(invalid="ignore", divide="ignore"):
                multiplier = np.where(self.periodic, theta / self.per, 0.0)
        return replace(self, theta=theta, multiplier=np.asarray(multiplier, dtype=float),
                       residual=period_residuals(self.flow, self.points, theta),
                       trivial=bool(np.all(theta == 0)) if trivial is None else trivial,
                       reason=self.reason if reason is None else reason)

    def scaled(self, c):
        """The field ``c * theta`` (multipliers scale with it)."""
        return self.with_theta(self.theta * c, self.multiplier * c)

    def theta_at(self, X):
        """Evaluate at arbitrary points.

        The lattice values are interpolated to fix the multiplier ``n``,
        then the value is snapped to ``n * Per(x)`` at periodic points.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.trivial:
            return np.zeros(len(X))
        ref = interpolate(self.grid, self.theta, X)
        batch = classify_batch(self.flow, X, self.detector)
        out = np.where(batch.fixed, ref, 0.0)
        per = batch.period
        p = batch.periodic
        with np.errstate(invalid="ignore", divide="ignore"):
            n = np.rint(ref / per)
        n = np.where(ref > 0, np.maximum(n, 1.0), 0.0)
        out[p] = n[p] * per[p]
        return out

    def to_csv(self, stream, header_comment=None):
        if header_comment:
            stream.write(f"# {header_comment}\n")
        w = csv.writer(stream, lineterminator="\n")
        dim = self.points.shape[1]
        w.writerow([f"x{i + 1}" for i in range(dim)]
                   + ["per", "theta", "multiplier", "dense_mask", "residual"])
        mult = np.where(np.abs(self.multiplier - np.rint(self.multiplier)) < 1e-6,
                        np.rint(self.multiplier), self.multiplier)
        for i in range(len(self)):
            m = mult[i]
            w.writerow([repr(float(v)) for v in self.points[i]]
                       + [repr(float(self.per[i])), repr(float(self.theta[i])),
                          str(int(m)) if m == int(m) else repr(float(m)),
                          int(self.dense_mask[i]), repr(float(self.residual[i]))])


def period_residuals(flow, X, mu):
    """``dist(Phi(x, mu(x)), x)``; nan where the orbit leaves the domain."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (len(X),))
    Y, ok = propagate(flow, X, mu)
    res = flow.domain.distance(Y, X)
    return np.where(ok, res, np.nan)


def _as_grid(flow, grid, region=None):
    if isinstance(grid, Grid):
        return grid
    return make_grid(flow.domain, grid, region)


def _zero_field(flow, grid, batch, detector, cfg, reason):
    n = len(grid)
    per = np.where(batch.periodic, batch.period, np.nan)
    return PeriodFunctionField(flow, grid, per, batch.code.copy(), np.zeros(n),
                               np.zeros(n), np.zeros(n, dtype=bool), np.zeros(n),
                               detector, cfg, True, reason)


def _fit_value(dom, x0, pts, vals):
    """Quadratic least-squares value at ``x0``; falls back to the mean."""
    D = dom.displacement(x0, pts)
    n = D.shape[1]
    cols = [np.ones(len(D))] + [D[:, i] for i in range(n)]
    cols += [D[:, i] * D[:, j] for i in range(n) for j in range(i, n)]
    M = np.stack(cols, axis=1)
    if len(D) > M.shape[1] and np.linalg.matrix_rank(M) == M.shape[1]:
        coef, *_ = np.linalg.lstsq(M, vals, rcond=None)
        return float(coef[0])
    return float(np.mean(vals))


def build_period_field(flow, grid, detector=None, cfg=None, region=None):
    """Construct the generator candidate ``theta`` on a lattice.

    Points where the minimal period is locally continuous (checked by two
    nearby probes) get ``theta = Per``. At the remaining periodic points the
    multiplier is read off the probes, or from already assigned lattice
    neighbours. Fixed points receive a local quadratic fit of the neighbour
    values, validated by probes on shrinking spheres. Any non-periodic
    point, or a fixed point at which no continuous value exists, yields
    the zero field.
    """
    cfg = cfg or FieldConfig()
    detector = detector or DetectorConfig()
    grid = _as_grid(flow, grid, region)
    dom = flow.domain
    n_pts = len(grid)
    batch = classify_batch(flow, grid.points, detector, cfg.threads)
    if batch.non_periodic.any():
        return _zero_field(flow, grid, batch, detector, cfg,
                           "non-periodic points present")
    if batch.unknown.any():
        return _zero_field(flow, grid, batch, detector, cfg,
                           "orbits leave the domain")
    if not batch.periodic.any():
        return _zero_field(flow, grid, batch, detector, cfg, "no periodic points")

    per = np.where(batch.periodic, batch.period, np.nan)
    pid = np.nonzero(batch.periodic)[0]
    dirs = probe_directions(dom.dim)
    delta = cfg.probe_scale * float(np.min(grid.spacing))
    probes = grid.points[pid][:, None, :] + delta * dirs[None, :, :]
    # points on the edge of the box probe inwards instead
    flip = ~dom.contains(probes, slack=0.0)
    probes[flip] -= 2 * delta * np.broadcast_to(dirs, probes.shape)[flip]
    probes = dom.wrap(probes)
    pb =classify_batch(flow, probes.reshape(-1, dom.dim), detector, cfg.threads)
    pper = pb.period.reshape(len(pid), len(dirs))
    pok = pb.periodic.reshape(len(pid), len(dirs))
    base = per[pid][:, None]
    with np.errstate(invalid="ignore"):
        cont = pok.all(axis=1) & np.all(np.abs(pper - base) <= cfg.continuity_tol * base,
                                        axis=1)

    theta = np.zeros(n_pts)
    mult = np.zeros(n_pts)
    assigned = np.zeros(n_pts, dtype=bool)
    dense = np.zeros(n_pts, dtype=bool)
    good = pid[cont]
    theta[good] = per[good]
    mult[good] = 1.0
    assigned[good] = True
    dense[good] = True

    # discontinuity points: multiplier from the probe periods when they agree
    disc = np.nonzero(~cont)[0]
    pending = []
    for j in disc:
        i = pid[j]
        pp = pper[j]
        if pok[j].all():
            mean = float(np.mean(pp))
            ratio = mean / per[i]
            n = int(np.rint(ratio))
            spread = float(np.ptp(pp))
            if (1 <= n <= cfg.max_multiplier and spread <= cfg.continuity_tol * mean
                    and abs(ratio - n) <= cfg.continuity_tol * ratio):
                theta[i] = n * per[i]
                mult[i] = n
                assigned[i] = True
                continue
        pending.append(i)
    _repair_from_neighbors(grid, per, theta, mult, assigned, pending, cfg)

    fix_ids = np.nonzero(batch.fixed)[0]
    if len(fix_ids):
        ok, msg = _assign_fixed(flow, grid, fix_ids, per, theta, mult, assigned,
                                detector, cfg)
        if not ok:
            return _zero_field(flow, grid, batch, detector, cfg, msg)

    residual = period_residuals(flow, grid.points, theta)
    return PeriodFunctionField(flow, grid, per, batch.code.copy(), theta, mult, dense,
                               residual, detector, cfg, False, "")


def _repair_from_neighbors(grid, per, theta, mult, assigned, pending, cfg):
    """Breadth-first multiplier repair from assigned lattice neighbours."""
    pending = list(pending)
    while pending:
        progress = False
        rest = []
        for i in pending:
            nbs = [j for j in grid.neighbors[i] if j >= 0 and assigned[j] and theta[j] > 0]
            if not nbs:
                rest.append(i)
                continue
            choices = {}
            for j in nbs:
                n = max(1, int(np.rint(theta[j] / per[i])))
                if abs(n * per[i] - theta[j]) <= cfg.neighbor_slack * per[i]:
                    choices.setdefault(n, j)
            if not choices:
                raise InconsistentRepair(
                    f"no multiplier of Per={per[i]:.6g} matches any neighbour at "
                    f"point {i}", edge=(int(i), int(nbs[0])))
            if len(choices) > 1:
                (n1, j1), (n2, j2) = list(choices.items())[:2]
                raise InconsistentRepair(
                    f"neighbours {j1} and {j2} demand multipliers {n1} and {n2} "
                    f"at point {i}", edge=(int(j1), int(j2)))
            n = next(iter(choices))
            if n > cfg.max_multiplier:
                raise InconsistentRepair(f"multiplier {n} exceeds the cap at point {i}",
                                         edge=(int(i), int(choices[n])))
            theta[i] = n * per[i]
            mult[i] = n
            assigned[i] = True
            progress = True
        if not progress:
            # isolated from everything assigned: a separate component
            for i in rest:
                theta[i] = per[i]
                mult[i] = 1.0
                assigned[i] = True
            return
        pending = rest


def _assign_fixed(flow, grid, fix_ids, per, theta, mult, assigned, detector, cfg):
    dom = flow.domain
    h = float(np.min(grid.spacing))
    hats = np.zeros(len(fix_ids))
    near_mult = np.ones(len(fix_ids))
    has_nb = np.zeros(len(fix_ids), dtype=bool)
    for k, i in enumerate(fix_ids):
        ids = grid.ring(i, cfg.fit_rings)
        ids = ids[assigned[ids] & ~np.isnan(per[ids])]
        if not len(ids):
            continue
        has_nb[k] = True
        hats[k] = max(0.0, _fit_value(dom, grid.points[i], grid.points[ids], theta[ids]))
        d = dom.distance(grid.points[ids], grid.points[i])
        near_mult[k] = mult[ids[np.argmin(d)]]
    theta[fix_ids] = np.where(has_nb, hats, 0.0)
    todo = np.nonzero(has_nb)[0]
    if not len(todo):
        return True, ""
    dirs = probe_directions(dom.dim)
    dirs = np.concatenate([dirs, -dirs])
    radii = h * 2.0 ** -np.arange(1, cfg.fix_probe_levels + 1)
    Z = grid.points[fix_ids[todo]]
    P = Z[:, None, None, :] + radii[None, :, None, None] * dirs[None, None, :, :]
    pb = classify_batch(flow, P.reshape(-1, dom.dim), detector, cfg.threads)
    shape = (len(todo), len(radii), len(dirs))
    pp = pb.period.reshape(shape)
    pok = pb.periodic.reshape(shape)
    vals = near_mult[todo][:, None, None] * pp
    dev = np.abs(vals - hats[todo][:, None, None]).max(axis=2)
    scale = np.maximum(1.0, hats[todo])
    for k in range(len(todo)):
        z = Z[k]
        if not pok[k].all():
            return False, f"fixed point {z.tolist()} is a limit of non-periodic points"
        if not (dev[k, -1] <= 1e-6 * scale[k] or dev[k, -1] <= 0.5 * dev[k, 0]):
            return False, (f"no continuous value at fixed point {z.tolist()}: "
                           f"deviation {dev[k, 0]:.3g} -> {dev[k, -1]:.3g}")
    return True, ""


# -- verification ----------------------------------------------------------

@dataclass
class VerifyReport:
    residuals: np.ndarray
    inconclusive: np.ndarray
    max_residual: float
    passed: bool
    verify_tol: float

    def to_dict(self):
        return {"max_residual": self.max_residual, "passed": self.passed,
                "verify_tol": self.verify_tol,
                "n_inconclusive": int(self.inconclusive.sum()),
                "n_samples": int(len(self.residuals))}


def mu_values(mu, X):
    """Evaluate a period function given as a field, callable, array or scalar."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if isinstance(mu, PeriodFunctionField):
        if X is mu.points or (X.shape == mu.points.shape and np.array_equal(X, mu.points)):
            return mu.theta.copy()
        return mu.theta_at(X)
    if callable(mu):
        return np.broadcast_to(np.asarray(mu(X), dtype=float), (len(X),)).copy()
    return np.broadcast_to(np.asarray(mu, dtype=float), (len(X),)).copy()


def verify_p_function(flow, samples, mu, verify_tol=1e-6):
    """Check ``Phi(x, mu(x)) = x`` at every sample."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    res = period_residuals(flow, X, mu_values(mu, X))
    bad = np.isnan(res)
    mx = float(np.max(res[~bad])) if (~bad).any() else 0.0
    return VerifyReport(res, bad, mx, bool(mx < verify_tol), verify_tol)


@dataclass
class RegularityReport:
    regular: bool
    max_difference: float
    witnesses: list
    n_compared: int
    n_skipped: int


def check_regularity(flow, mu, samples, region=None, n_tau=16, continuity_tol=1e-3):
    """Compare ``mu(x)`` with ``mu(Phi(x, tau))`` for ``tau`` spread over
    ``[0, 2 mu(x)]``; pairs whose image leaves ``region`` are skipped."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    mx = mu_values(mu, X)
    use = mx > 0
    frac = (np.arange(n_tau) + 0.5) / n_tau
    Xs = np.repeat(X[use], n_tau, axis=0)
    taus = (2.0 * mx[use][:, None] * frac[None, :]).ravel()
    Y, ok = propagate(flow, Xs, taus)
    if region is not None:
        ok &= np.asarray(region(Y), dtype=bool)
    n_skipped = int((~ok).sum()) + int((~use).sum()) * n_tau
    if not ok.any():
        return RegularityReport(True, 0.0, [], 0, n_skipped)
    my = mu_values(mu, Y[ok])
    mref = np.repeat(mx[use], n_tau)[ok]
    diff = np.abs(my - mref)
    bad = diff > continuity_tol * np.maximum(1.0, np.abs(mref))
    witnesses = []
    for k in np.nonzero(bad)[0][:10]:
        witnesses.append({"x": Xs[ok][k].tolist(), "tau": float(taus[ok][k]),
                          "mu_x": float(mref[k]), "mu_y": float(my[k])})
    return RegularityReport(not bad.any(), float(diff.max()), witnesses,
                            int(ok.sum()), n_skipped)


def two_sector_function(m, n):
    """``m |z|^2`` on ``Re z <= 0`` and ``n |z|^2`` on ``Re z > 0``: a period
    function of the continuous disk flow on any set, regular only if m = n
    on sets where orbits meet both half planes."""

    def mu(X):
        X = np.atleast_2d(X)
        r2 = X[..., 0] ** 2 + X[..., 1] ** 2
        return np.where(X[..., 0] <= 0, m * r2, n * r2)

    return mu


def two_triangles_region(slope=0.5, size=1.0):
    """Two closed triangles with common vertex at the origin, opening left
    and right: ``|y| <= slope |x|``, ``|x| <= size``."""

    def region(X):
        x, y = X[..., 0], X[..., 1]
        return (np.abs(y) <= slope * np.abs(x) + 1e-12) & (np.abs(x) <= size)

    return region


# -- extension -------------------------------------------------------------

@dataclass
class ExtensionResult:
    targets: np.ndarray
    theta: np.ndarray
    entry_time: np.ndarray
    residual: np.ndarray


def extend_period_function(flow, field_, targets, region, horizon=None, step=None):
    """Extend a regular period function along orbits.

    Each target is flowed backward and forward until it enters ``region``
    (where the field is defined); the value there is carried back.
    """
    T = np.atleast_2d(np.asarray(targets, dtype=float))
    det = field_.detector
    horizon = horizon or det.horizon
    step = step or det.step
    n = len(T)
    entry = np.full(n, np.nan)
    inside = np.asarray(region(T), dtype=bool)
    entry[inside] = 0.0
    found = inside.copy()
    hit_pts = T.copy()
    k = 1
    while not found.all() and k * step <= horizon:
        todo = np.nonzero(~found)[0]
        for sgn in (-1.0, 1.0):
            todo = todo[~found[todo]]
            if not len(todo):
                break
            tau = sgn * k * step
            Y, ok = propagate(flow, T[todo], np.full(len(todo), tau))
            hit = ok & np.asarray(region(Y), dtype=bool)
            idx = todo[hit]
            found[idx] = True
            entry[idx] = tau
            hit_pts[idx] = Y[hit]
        k += 1
    if not found.all():
        i = int(np.nonzero(~found)[0][0])
        raise NotInSaturation(f"orbit of {T[i].tolist()} does not meet the field's "
                              f"region within |t| <= {horizon:g}")
    theta = mu_values(field_, hit_pts)
    residual = period_residuals(flow, T, theta)
    return ExtensionResult(T, theta, entry, residual)


# -- divisibility ----------------------------------------------------------

@dataclass
class ZpActionReport:
    p: int
    max_pth_iterate_displacement: float
    max_displacement: float
    identity_on_test_set: bool
    divisible: bool
    n_samples: int

    def to_dict(self):
        return {"p": self.p,
                "max_pth_iterate_displacement": self.max_pth_iterate_displacement,
                "max_displacement": self.max_displacement,
                "identity_on_test_set": self.identity_on_test_set,
                "divisible": self.divisible, "n_samples": self.n_samples}


def iterate_d(flow, X, mu_vals, alpha, times):
    """Apply ``d(x) = Phi(x, alpha mu(x))`` repeatedly; ``mu`` is carried
    along the orbit (it is constant there for regular period functions)."""
    Y = np.array(X, dtype=float)
    out = []
    for _ in range(times):
        Y, _ = propagate(flow, Y, alpha * mu_vals)
        out.append(Y)
    return out


def zp_divisibility_test(flow, mu, p, samples, verify_tol=1e-6):
    """Build ``d(x) = Phi(x, mu(x)/p)`` and test ``d^p = id`` and ``d = id``."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    mv = mu_values(mu, X)
    its = iterate_d(flow, X, mv, 1.0 / p, p)
    dom = flow.domain
    disp1 = float(np.max(dom.distance(its[0], X)))
    dispp = float(np.max(dom.distance(its[-1], X)))
    ident = disp1 < verify_tol
    return ZpActionReport(int(p), dispp, disp1, ident, ident, len(X))


@dataclass
class GeneratorResult:
    generator: object
    group: str
    divisions: list
    reports: list


def detect_generator(flow, field_, primes=DEFAULT_PRIMES, samples=None,
                     verify_tol=None):
    """Divide ``theta`` by every tested prime for which ``theta/p`` is again a
    period function, until none divides. The tested primes are a finite
    range; irreducibility beyond them is not claimed."""
    if isinstance(primes, int):
        primes = tuple(p for p in DEFAULT_PRIMES + (11, 13, 17, 19, 23, 29, 31)
                       if p <= primes)
    if field_.trivial or np.all(field_.theta == 0):
        return GeneratorResult(field_, "trivial", [], [])
    tol = verify_tol if verify_tol is not None else field_.config.verify_tol
    pts = field_.points if samples is None else np.atleast_2d(samples)
    current = field_
    divisions, reports = [], []
    changed = True
    while changed:
        changed = False
        for p in primes:
            mu = current.theta if samples is None else current.theta_at(pts)
            rep = zp_divisibility_test(flow, mu, p, pts, tol)
            reports.append(rep)
            if rep.divisible:
                current = current.scaled(1.0 / p)
                divisions.append(p)
                changed = True
    return GeneratorResult(current, "n*theta", divisions, reports)


# -- circle action ---------------------------------------------------------

def circle_action(flow, field_):
    """Closed-form flow ``B(x, t) = Phi(x, t theta(x))``; ``B(., 1) = id``."""
    if field_.trivial:
        raise FieldVanishesOffFix("the field is identically zero")
    off = ~field_.fixed & (field_.theta <= 0)
    if off.any():
        i = int(np.nonzero(off)[0][0])
        raise FieldVanishesOffFix(f"theta vanishes at non-fixed point "
                                  f"{field_.points[i].tolist()}")
    cache = {}

    def theta_of(X):
        flat = X.reshape(-1, X.shape[-1])
        keys = [row.tobytes() for row in flat]
        miss = [k for k in dict.fromkeys(keys) if k not in cache]
        if miss:
            M = np.array([np.frombuffer(k) for k in miss])
            vals = field_.theta_at(M)
            cache.update(zip(miss, vals))
        return np.array([cache[k] for k in keys]).reshape(X.shape[:-1])

    def closed(X, t):
        X = np.asarray(X, dtype=float)
        th = theta_of(X)
        tt = np.broadcast_to(np.asarray(t, dtype=float), th.shape) * th
        flat = X.reshape(-1, X.shape[-1])
        Y, _ = propagate(flow, flat, tt.ravel())
        return Y.reshape(X.shape)

    return FlowSpec(flow.domain, "closed_form", closed_form=closed,
                    smoothness="C0", integrator=flow.integrator,
                    name=f"circle_action({flow.name})")


def _orbit_distance(flow, Y, x, t_lo, t_hi, n):
    """One-sided distance from points ``Y`` to the arc ``Phi(x, [t_lo, t_hi])``:
    nearest of ``n`` samples, refined by golden-section search."""
    from .detect import _golden

    ts = np.linspace(t_lo, t_hi, n + 1)
    S, _ = propagate(flow, np.repeat(x[None], len(ts), axis=0), ts)
    D = flow.domain.distance(Y[:, None, :], S[None, :, :])
    j = np.argmin(D, axis=1)
    a = ts[np.maximum(j - 1, 0)]
    b = ts[np.minimum(j + 1, n)]
    Xr = np.repeat(x[None], len(Y), axis=0)

    def h(t):
        Z, _ = propagate(flow, Xr, t)
        return flow.domain.distance(Z, Y)

    _, g = _golden(h, a, b, 1e-13, 120)
    return np.minimum(g, D.min(axis=1))


def orbit_hausdorff(flow, action, x, period, theta, n=257):
    """Hausdorff distance between the orbit of ``x`` under ``flow`` (over one
    minimal period) and under the circle action (over one unit of time)."""
    x = np.asarray(x, dtype=float)
    tb = np.arange(n) / n
    B = action.closed_form(np.repeat(x[None], n, axis=0), tb)
    m = n + 6  # different sample count so the two samplings do not coincide
    tp = np.arange(m) * period / m
    P, _ = propagate(flow, np.repeat(x[None], m, axis=0), tp)
    d1 = _orbit_distance(flow, B, x, 0.0, period, 4 * n)
    d2 = _orbit_distance(action, P, x, 0.0, 1.0, 4 * n) if theta > 0 else np.zeros(m)
    return float(max(d1.max(), d2.max()))


# -- conditions near fixed points -------------------------------------------

@dataclass
class ConditionReport:
    condA: dict
    condB: list
    condC_alpha: list
    condD_alpha: dict
    condE: list
    alpha: tuple
    seed: Optional[int] = None

    def to_dict(self):
        return {"alpha": list(self.alpha), "seed": self.seed, "condA": self.condA,
                "condB": self.condB, "condC_alpha": self.condC_alpha,
                "condD_alpha": self.condD_alpha, "condE": self.condE}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def d_alpha(flow, mu, X, alpha):
    """``d_alpha(x) = Phi(x, alpha mu(x))``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y, _ = propagate(flow, X, alpha * mu_values(mu, X))
    return Y


def probe_conditions(flow, field_, fixed_points, alpha=(1, 2), radii=None, n_dirs=8,
                     seed=0, e_constant=4.0):
    """Sample the behaviour of ``mu`` and ``d_alpha`` near fixed points.

    (A) periods on the grid and on shrinking spheres around the fixed
    points stay below a common bound; (B) ``mu`` is orbit-constant on a
    small punctured ball; (C) the displacement ``d_alpha(x) - z`` shrinks
    with ``|x - z|``; (D) ``d_alpha^p = id``; (E) the ratio of ``d(z, x)``
    to the diameter of the orbit piece inside a ball stays below the
    constant.
    """
    q, p = alpha
    a = q / p
    dom = flow.domain
    det = field_.detector
    h = float(np.min(field_.grid.spacing))
    if radii is None:
        radii = h * 2.0 ** -np.arange(0, 6)
    radii = np.asarray(radii, dtype=float)
    dirs = sphere_directions(dom.dim, n_dirs, seed)
    grid_per = field_.per[field_.periodic & (field_.theta != 0)]
    grid_sup = float(np.max(grid_per)) if len(grid_per) else 0.0

    probe_sup = 0.0
    non_periodic_near = False
    condB, condC, condE = [], [], []
    d_fail = []
    for z in np.atleast_2d(np.asarray(fixed_points, dtype=float)):
        P = dom.wrap(z[None, None, :] + radii[:, None, None] * dirs[None, :, :])
        flat = P.reshape(-1, dom.dim)
        batch = classify_batch(flow, flat, det)
        per = batch.period.reshape(len(radii), len(dirs))
        if not batch.periodic.all():
            non_periodic_near = True
        if np.isfinite(per).any():
            probe_sup = max(probe_sup, float(np.nanmax(per)))
        ball = flat[batch.periodic]
        reg = check_regularity(flow, field_, ball) if len(ball) else None
        condB.append({"fixed_point": z.tolist(),
                      "regular": bool(reg.regular) if reg else True,
                      "max_difference": reg.max_difference if reg else 0.0})
        mu_flat = mu_values(field_, flat)
        D1 = d_alpha(flow, mu_flat, flat, a)
        disp = dom.distance(D1, z).reshape(len(radii), len(dirs)).max(axis=1)
        condC.append({"fixed_point": z.tolist(), "radii": radii.tolist(),
                      "modulus": disp.tolist(),
                      "continuous": bool(disp[-1] <= 0.5 * disp[0] or disp[-1] < 1e-9)})
        its = iterate_d(flow, flat, mu_flat, a, p)
        d_fail.append(float(np.max(dom.distance(its[-1], flat))))
        wit = []
        ball_r = 2.0 * radii[0]
        for x in P[:, 0, :]:
            orbit = _orbit_in_ball(flow, x, field_, z, ball_r, det)
            if orbit is None:
                continue
            diam = _diameter(dom, orbit)
            dz = float(dom.distance(x, z))
            wit.append({"x": x.tolist(), "distance": dz, "diameter": diam,
                        "ratio": dz / diam if diam > 0 else float("inf")})
        ratios = [w["ratio"] for w in wit]
        condE.append({"fixed_point": z.tolist(), "constant": e_constant,
                      "holds": bool(ratios) and max(ratios) <= e_constant,
                      "witnesses": wit})
    bound_ok = not non_periodic_near and probe_sup <= 2.0 * max(grid_sup, 1e-300)
    condA = {"holds": bool(bound_ok), "bound": max(grid_sup, probe_sup),
             "grid_sup": grid_sup, "probe_sup": probe_sup}
    condD = {"pth_power_identity": bool(max(d_fail, default=0.0) < 10 * field_.config.verify_tol),
             "max_displacement": max(d_fail, default=0.0), "p": p}
    return ConditionReport(condA, condB, condC, condD, condE, (q, p), seed)


def _orbit_in_ball(flow, x, field_, z, radius, det, n=256):
    b = classify_batch(flow, x[None], det)
    if not b.periodic[0]:
        return None
    ts = np.arange(n) * b.period[0] / n
    S, _ = propagate(flow, np.repeat(x[None], n, axis=0), ts)
    S = S[flow.domain.distance(S, z) <= radius]
    return S if len(S) else None


def _diameter(dom, S):
    D = dom.distance(S[:, None, :], S[None, :, :])
    return float(D.max())
