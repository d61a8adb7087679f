"""Minimal-period detection.

A point is scanned along ``g(t) = dist(Phi(x, t), x)`` on a uniform time
grid. Local minima of ``g`` that could hide a zero are refined by a
golden-section search; the first refined minimum below ``return_tol`` is the
candidate period, which is then checked against its fractions ``T/m``.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .flow import Scanner, field_batch, propagate
from .errors import NotDifferentiable

FIXED = "Fixed"
PERIODIC = "Periodic"
NON_PERIODIC = "NonPeriodicEvidence"
UNKNOWN = "Unknown"
STATUS_NAMES = (FIXED, PERIODIC, NON_PERIODIC, UNKNOWN)
_FIX, _PER, _NONPER, _UNK = range(4)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DetectorConfig:
    horizon: float = 100.0
    return_tol: float = 1e-6
    fixed_tol: float = 1e-9
    t_floor: Optional[float] = None
    m_max: int = 7
    refine_tol: float = 1e-12
    refine_iters: int = 200
    scan_step: Optional[float] = None
    batch_size: int = 4096
    time_chunk: int = 64

    def __post_init__(self):
        if self.horizon <= 0 or self.return_tol <= 0 or self.fixed_tol <= 0:
            raise ValueError("horizon and tolerances must be positive")
        if self.t_floor is not None and not 0 <= self.t_floor < self.horizon:
            raise ValueError("t_floor must lie in [0, horizon)")
        if self.m_max < 1:
            raise ValueError("m_max must be >= 1")

    @property
    def step(self):
        return self.scan_step if self.scan_step else self.horizon / 20000.0

    def scaled(self, factor):
        """Copy with every tolerance multiplied by ``factor``."""
        return replace(self, return_tol=self.return_tol * factor,
                       fixed_tol=self.fixed_tol * factor)


@dataclass(frozen=True)
class PeriodResult:
    status: str
    minimal_period: float = math.nan
    return_residual: float = math.nan
    evidence: float = math.nan
    horizon: float = math.nan

    @property
    def is_periodic(self):
        return self.status == PERIODIC


@dataclass
class BatchClassification:
    """Column-wise classification of many points."""

    points: np.ndarray
    code: np.ndarray
    period: np.ndarray
    residual: np.ndarray
    evidence: np.ndarray
    horizon: float

    @property
    def status(self):
        return np.array(STATUS_NAMES, dtype=object)[self.code]

    @property
    def periodic(self):
        return self.code == _PER

    @property
    def fixed(self):
        return self.code == _FIX

    @property
    def non_periodic(self):
        return self.code == _NONPER

    @property
    def unknown(self):
        return self.code == _UNK

    def __len__(self):
        return len(self.code)

    def result(self, i):
        return PeriodResult(STATUS_NAMES[self.code[i]], float(self.period[i]),
                            float(self.residual[i]), float(self.evidence[i]),
                            self.horizon)

    def results(self):
        return [self.result(i) for i in range(len(self))]


def _speeds(flow, X, cfg):
    try:
        return np.linalg.norm(field_batch(flow, X), axis=-1)
    except NotDifferentiable:
        # no usable generator: fall back to the sup of g on a coarse grid
        times = np.linspace(0.0, cfg.horizon, 65)[1:]
        sup = np.zeros(len(X))
        for t in times:
            Y, _ = propagate(flow, X, np.full(len(X), t))
            sup = np.maximum(sup, flow.domain.distance(Y, X))
        return np.where(sup < cfg.fixed_tol, 0.0, np.inf)


def _golden(h, a, b, tol, max_iter=200):
    """Vectorised golden-section minimisation of ``h`` over ``[a, b]``."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = h(c)
    fd = h(d)
    for _ in range(max_iter):
        if np.all(b - a < tol * np.maximum(1.0, np.abs(b))):
            break
        left = fc <= fd
        # left: minimum in [a, d], old c becomes the new d
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = np.where(left, b - GOLDEN * (b - a), d)
        d_new = np.where(left, c, a + GOLDEN * (b - a))
        probe = np.where(left, c_new, d_new)
        fp = h(probe)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = c_new, d_new
    t_best = np.where(fc <= fd, c, d)
    return t_best, np.minimum(fc, fd)


def _scan(flow, X0, speed, cfg):
    n = len(X0)
    dom = flow.domain
    dt = cfg.step
    n_total = int(math.ceil(cfg.horizon / dt - 1e-9))
    code = np.full(n, _NONPER)
    period = np.full(n, np.nan)
    resid = np.full(n, np.nan)
    evid = np.full(n, np.inf)
    if cfg.t_floor is not None:
        t_floor = np.full(n, cfg.t_floor)
    else:
        t_floor = 10.0 * cfg.fixed_tol / np.maximum(speed, 1e-12)

    rows = np.arange(n)  # global index of each active row
    x0 = X0.copy()
    scanner = Scanner(flow, X0, dt)
    hist_g = np.tile([np.inf, 0.0], (n, 1))
    hist_s = np.repeat(X0[:, None, :], 2, axis=1)
    hist_t = np.array([-dt, 0.0])
    dmax = np.zeros(n)
    closed = flow.kind == "closed_form"
    done = 0
    while len(rows) and done < n_total:
        m = min(cfg.time_chunk, n_total - done)
        S, times = scanner.next_chunk(m)
        inside = dom.contains(S)
        g = dom.distance(S, x0[:, None, :])
        g = np.where(inside, g, np.nan)
        G = np.concatenate([hist_g, g], axis=1)
        SS = np.concatenate([hist_s, S], axis=1)
        TT = np.concatenate([hist_t, times])
        step_disp = dom.distance(SS[:, 1:], SS[:, :-1])
        with np.errstate(invalid="ignore"):
            dmax = np.maximum(dmax, np.nanmax(np.where(np.isfinite(step_disp),
                                                       step_disp, 0.0), axis=1))
            mid = G[:, 1:-1]
            loc = (mid <= G[:, :-2]) & (mid <= G[:, 2:])
        loc &= TT[None, 1:-1] > t_floor[rows, None]
        loc &= np.isfinite(mid)
        evid[rows] = np.minimum(evid[rows], np.where(loc, mid, np.inf).min(axis=1))
        thr = 2.0 * dmax + cfg.return_tol
        cand = loc & (mid <= thr[:, None])
        resolved = np.zeros(len(rows), dtype=bool)
        while True:
            has = cand.any(axis=1) & ~resolved
            if not has.any():
                break
            r = np.nonzero(has)[0]
            k = np.argmax(cand[r], axis=1) + 1  # index into G / TT
            a = TT[k - 1]
            b = TT[k + 1]
            xa = SS[r, k - 1]
            ta = TT[k - 1]
            xr = x0[r]

            if closed:
                def h(t, xr=xr):
                    Y, _ = propagate(flow, xr, t)
                    return dom.distance(Y, xr)
            else:
                def h(t, xr=xr, xa=xa, ta=ta):
                    Y, _ = propagate(flow, xa, t - ta)
                    return dom.distance(Y, xr)

            t_best, g_best = _golden(h, a, b, cfg.refine_tol, cfg.refine_iters)
            ok = g_best < cfg.return_tol
            acc = r[ok]
            resolved[acc] = True
            code[rows[acc]] = _PER
            period[rows[acc]] = t_best[ok]
            resid[rows[acc]] = g_best[ok]
            cand[r, k - 1] = False
        escaped = ~np.all(inside, axis=1) & ~resolved
        code[rows[escaped]] = _UNK
        keep = ~resolved & ~escaped
        done += m
        hist_g = G[:, -2:][keep]
        hist_s = SS[:, -2:][keep]
        hist_t = TT[-2:]
        dmax = dmax[keep]
        x0 = x0[keep]
        scanner.keep(keep)
        if done >= n_total and keep.any():
            last = G[keep, -1]
            evid[rows[keep]] = np.minimum(evid[rows[keep]], last)
        rows = rows[keep]
    evid[code != _NONPER] = np.nan
    _certify_minimal(flow, X0, code, period, resid, cfg)
    return code, period, resid, evid


def _certify_minimal(flow, X0, code, period, resid, cfg):
    idx = np.nonzero(code == _PER)[0]
    if not len(idx) or cfg.m_max < 2:
        return
    dom = flow.domain
    for m in range(cfg.m_max, 1, -1):
        T = period[idx] / m
        Y, ok = propagate(flow, X0[idx], T)
        res = dom.distance(Y, X0[idx])
        hit = ok & (res < cfg.return_tol)
        # the largest returning divisor wins; it is reached first in this loop
        fresh = hit
        if fresh.any():
            sel = idx[fresh]
            period[sel] = T[fresh]
            resid[sel] = res[fresh]
            idx = idx[~fresh]
            if not len(idx):
                return


def classify_batch(flow, X, cfg=None, threads=1):
    """Classify many points at once; returns a :class:`BatchClassification`."""
    cfg = cfg or DetectorConfig()
    if cfg.horizon > flow.integrator.max_horizon:
        raise ValueError("detector horizon exceeds the flow's max horizon")
    X = flow.domain.wrap(np.atleast_2d(np.asarray(X, dtype=float)))
    n = len(X)
    code = np.full(n, _UNK)
    period = np.full(n, np.nan)
    resid = np.full(n, np.nan)
    evid = np.full(n, np.nan)
    if n == 0:
        return BatchClassification(X, code, period, resid, evid, cfg.horizon)
    speed = _speeds(flow, X, cfg)
    inside = flow.domain.contains(X)
    fixed = inside & (speed < cfg.fixed_tol)
    code[fixed] = _FIX
    period[fixed] = np.nan
    todo = np.nonzero(inside & ~fixed)[0]
    chunks = [todo[i:i + cfg.batch_size] for i in range(0, len(todo), cfg.batch_size)]

    def work(ix):
        return ix, _scan(flow, X[ix], speed[ix], cfg)

    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(work, chunks))
    else:
        outs = [work(c) for c in chunks]
    for ix, (c, p, r, e) in outs:
        code[ix], period[ix], resid[ix], evid[ix] = c, p, r, e
    return BatchClassification(X, code, period, resid, evid, cfg.horizon)


def classify_point(flow, x, cfg=None):
    """Classify one point as fixed, periodic (with minimal period),
    non-periodic within the horizon, or unknown (left the domain)."""
    return classify_batch(flow, np.asarray(x, dtype=float)[None, :], cfg).result(0)


def sphere_directions(dim, n, seed=0):
    """``n`` unit vectors; evenly spaced angles in the plane, seeded
    Gaussian samples in higher dimensions."""
    if dim == 1:
        return np.array([[1.0], [-1.0]] * ((n + 1) // 2))[:n]
    if dim == 2:
        ang = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass
class LowerBoundProbe:
    points: np.ndarray
    results: list
    radii: np.ndarray

    @property
    def infimum(self):
        per = [r.minimal_period for r in self.results if r.is_periodic]
        return min(per) if per else math.nan


def period_lower_bound_probe(flow, z, radius_sequence, cfg=None, n_dirs=8,
                             seed=0, directions=None):
    """Classify points at the given distances from ``z``.

    If ``z`` is not fixed, periods of nearby periodic points stay bounded
    away from zero; the probe reports their infimum.
    """
    z = np.asarray(z, dtype=float)
    if directions is None:
        directions = sphere_directions(flow.dim, n_dirs, seed)
    directions = np.atleast_2d(directions)
    radii = np.repeat(np.asarray(radius_sequence, dtype=float), len(directions))
    dirs = np.tile(directions, (len(radius_sequence), 1))
    pts = flow.domain.wrap(z[None, :] + radii[:, None] * dirs)
    batch = classify_batch(flow, pts, cfg)
    return LowerBoundProbe(batch.points, batch.results(), radii)


CSV_COLUMNS = ("status", "minimal_period", "return_residual", "evidence")


def write_csv(stream, batch, header_comment=None):
    """Write one row per point: coords..., status, minimal_period,
    return_residual, evidence."""
    if header_comment:
        stream.write(f"# {header_comment}\n")
    writer = csv.writer(stream, lineterminator="\n")
    dim = batch.points.shape[1]
    writer.writerow([f"x{i + 1}" for i in range(dim)] + list(CSV_COLUMNS))
    status = batch.status
    for i in range(len(batch)):
        writer.writerow([repr(float(v)) for v in batch.points[i]]
                        + [status[i]] + [repr(float(v)) for v in
                                         (batch.period[i], batch.residual[i],
                                          batch.evidence[i])])
