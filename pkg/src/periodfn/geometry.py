"""Orbit length and diameter, and diameter bounds for finite cyclic actions.

For a periodic orbit the arc length ``l = int_0^Per |F(Phi(x, t))| dt``
satisfies ``2 diam <= l <= Per * sup |F|``. For a nontrivial Z_p action on
a region U, the inradius-type quantity D(U) stays below the largest
boundary displacement C(U), and near a fixed point some point on a small
sphere is moved by at least a fixed fraction of its distance to the fixed
point.
"""

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.distance import pdist

from .detect import DetectorConfig, classify_batch
from .dopri import BatchDopri5
from .errors import QuadratureNonConverged, TrivialAction
from .flow import field_batch


@dataclass(frozen=True)
class OrbitGeometry:
    period: float
    length: float
    diameter: float
    sup_speed: float
    quad_n: int
    length_change: float  # relative change of the length when quad_n doubles

    @property
    def slack_diameter(self):
        """``l - 2 diam`` (non-negative when the bound holds)."""
        return self.length - 2.0 * self.diameter

    @property
    def slack_speed(self):
        """``Per * sup|F| - l``."""
        return self.period * self.sup_speed - self.length

    def holds(self, tol=1e-7):
        return self.slack_diameter >= -tol and self.slack_speed >= -tol


def sample_orbits(flow, X, periods, m):
    """States at ``t = Per_i * j / m`` for ``j = 0..m``; shape ``(N, m+1, n)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    periods = np.asarray(periods, dtype=float)
    frac = np.arange(m + 1) / m
    if flow.kind == "closed_form":
        with np.errstate(all="ignore"):
            S = flow.closed_form(X[:, None, :], periods[:, None] * frac[None, :])
    else:
        cfg = flow.integrator
        st = BatchDopri5(flow.field, X, periods, cfg.abs_tol, cfg.rel_tol, cfg.max_step)
        S = np.empty((len(X), m + 1, X.shape[1]))
        S[:, 0] = X
        for j in range(1, m + 1):
            S[:, j] = st.advance_to(frac[j])
    return flow.domain.wrap(S)


def sampled_diameter(domain, P):
    """Largest pairwise distance of the points ``P``."""
    P = np.asarray(P, dtype=float)
    if len(P) < 2:
        return 0.0
    per = domain.periodic_mask
    if not per.any():
        try:
            if P.shape[1] >= 2 and len(P) > P.shape[1] + 1:
                P = P[ConvexHull(P, qhull_options="QJ").vertices]
        except Exception:
            pass  # degenerate hull: fall back to all pairs
        return float(pdist(P).max()) if P.shape[1] > 1 else float(np.ptp(P))
    sq = 0.0
    for d in range(P.shape[1]):
        diff = pdist(P[:, d:d + 1], "cityblock")
        if per[d]:
            diff = np.minimum(diff, 1.0 - diff)
        sq = sq + diff * diff
    return float(np.sqrt(sq.max()))


def orbit_geometry_batch(flow, X, periods, quad_n=4096, quad_tol=1e-7):
    """Length, diameter and speed bound for several periodic orbits."""
    if quad_n % 2:
        raise ValueError("quad_n must be even for Simpson's rule")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    periods = np.asarray(periods, dtype=float)
    if np.any(~np.isfinite(periods) | (periods <= 0)):
        raise ValueError("every orbit needs a positive finite period")
    m = 2 * quad_n
    S = sample_orbits(flow, X, periods, m)
    speed = np.linalg.norm(field_batch(flow, S.reshape(-1, X.shape[1])), axis=1)
    speed = speed.reshape(len(X), m + 1)
    out = []
    for i in range(len(X)):
        fine = integrate.simpson(speed[i], dx=periods[i] / m)
        coarse = integrate.simpson(speed[i, ::2], dx=periods[i] / quad_n)
        change = abs(fine - coarse) / max(abs(fine), 1e-300)
        if change > quad_tol:
            raise QuadratureNonConverged(
                f"orbit {i}: length changes by {change:.3g} (relative) when "
                f"doubling quad_n={quad_n}")
        diam = sampled_diameter(flow.domain, S[i, :-1:2])
        out.append(OrbitGeometry(float(periods[i]), float(fine), diam,
                                 float(speed[i].max()), quad_n, float(change)))
    return out


def orbit_geometry(flow, x, quad_n=4096, quad_tol=1e-7, period=None, detector=None):
    """Geometry of the periodic orbit through ``x``."""
    x = np.asarray(x, dtype=float)
    if period is None:
        res = classify_batch(flow, x[None], detector or DetectorConfig())
        if not res.periodic[0]:
            raise ValueError(f"{x.tolist()} is not periodic ({res.status[0]})")
        period = res.period[0]
    return orbit_geometry_batch(flow, x[None], [period], quad_n, quad_tol)[0]


def write_geometry_csv(stream, geoms, header_comment=None):
    if header_comment:
        stream.write(f"# {header_comment}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["orbit_id", "period", "length", "diameter", "sup_speed",
                "slack1", "slack2"])
    for i, g in enumerate(geoms):
        w.writerow([i] + [repr(float(v)) for v in (g.period, g.length, g.diameter,
                                                   g.sup_speed, g.slack_diameter,
                                                   g.slack_speed)])


# -- cyclic actions --------------------------------------------------------

@dataclass(eq=False)
class CyclicActionSample:
    """A map of order p sampled on a region, with the sampled boundary."""

    generator: Callable
    p: int
    sample_set: np.ndarray
    boundary_subset: np.ndarray  # boolean mask into sample_set
    spacing: float = 0.0
    verify_tol: float = 1e-6

    def power(self, X, a):
        Y = np.array(X, dtype=float)
        for _ in range(a):
            Y = self.generator(Y)
        return Y

    def order_defect(self):
        """Largest displacement of ``generator^p`` on the sample set."""
        return float(np.max(np.linalg.norm(self.power(self.sample_set, self.p)
                                           - self.sample_set, axis=1)))

    @classmethod
    def from_grid(cls, grid, generator, p, verify_tol=1e-6):
        return cls(generator, int(p), grid.points.copy(), grid.boundary_mask.copy(),
                   float(np.max(grid.spacing)), verify_tol)


def rotation_generator(p, q=1, axes=(0, 1)):
    """Rotation by ``2 pi q / p`` in the plane of the two given coordinates."""
    ang = 2 * np.pi * q / p
    c, s = np.cos(ang), np.sin(ang)
    i, j = axes

    def gen(X):
        X = np.array(X, dtype=float)
        xi, xj = X[..., i].copy(), X[..., j].copy()
        X[..., i] = c * xi - s * xj
        X[..., j] = s * xi + c * xj
        return X

    return gen


def _check_nontrivial(action, X):
    disp = max(float(np.max(np.linalg.norm(action.power(X, a) - X, axis=-1)))
               for a in range(1, action.p))
    if disp <= action.verify_tol:
        raise TrivialAction("the action moves no sample point")


@dataclass(frozen=True)
class DressResult:
    D: float
    C: float
    holds: bool
    sample_tol: float


def dress_bound_check(action, samples=None, boundary=None, sample_tol=None):
    """Compare ``D`` (largest distance from an interior sample to the
    sampled boundary) with ``C`` (largest displacement of a boundary sample
    under the powers of the generator)."""
    X = action.sample_set if samples is None else np.atleast_2d(samples)
    bmask = action.boundary_subset if boundary is None else np.asarray(boundary, bool)
    if action.p < 2:
        raise TrivialAction("order 1 action")
    _check_nontrivial(action, X)
    B = X[bmask]
    I = X[~bmask]
    if not len(B):
        raise ValueError("no boundary samples")
    D = float(cKDTree(B).query(I)[0].max()) if len(I) else 0.0
    C = max(float(np.max(np.linalg.norm(action.power(B, a) - B, axis=1)))
            for a in range(1, action.p))
    tol = 2.0 * action.spacing if sample_tol is None else sample_tol
    return DressResult(D, C, bool(D < C + tol), tol)


@dataclass(frozen=True)
class HoffmanMannResult:
    x_star: tuple
    a_star: int
    ratio: float
    holds: bool
    constant: float
    face: str


def sphere_points(dim, n):
    """Roughly uniform points on the unit sphere (circle, Fibonacci sphere,
    or seeded Gaussian samples)."""
    if dim == 2:
        ang = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if dim == 3:
        i = np.arange(n) + 0.5
        phi = np.arccos(1 - 2 * i / n)
        th = np.pi * (1 + 5 ** 0.5) * i
        return np.column_stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi),
                                np.cos(phi)])
    v = np.random.default_rng(0).standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def hoffman_mann_check(action, z, r, interior=True, boundary_coord=None, n_samples=720):
    """Look for ``x`` and ``a`` with ``d(z, x) <= K d(x, g^a x)``.

    Interior case: ``x`` on the sphere of radius ``r/2`` about ``z``, K = 2.
    Boundary case: ``x`` on the boundary of the half-ball of radius
    ``2r/3`` in ``{x_b >= z_b}`` (curved part and flat face), K = 4.
    """
    z = np.asarray(z, dtype=float)
    dim = len(z)
    if np.linalg.norm(action.generator(z[None])[0] - z) > action.verify_tol:
        raise ValueError("z is not fixed by the action")
    if interior:
        K = 2.0
        P = z + 0.5 * r * sphere_points(dim, n_samples)
        faces = np.array(["sphere"] * len(P))
    else:
        K = 4.0
        b = dim - 1 if boundary_coord is None else boundary_coord
        rad = 2.0 * r / 3.0
        S = sphere_points(dim, 2 * n_samples)
        curved = z + rad * S[S[:, b] >= 0]
        # flat face: disk of radius rad in the hyperplane x_b = z_b
        k = int(np.sqrt(n_samples)) + 1
        other = [d for d in range(dim) if d != b]
        mesh = np.meshgrid(*[np.linspace(-rad, rad, 2 * k + 1)] * len(other), indexing="ij")
        F = np.zeros((mesh[0].size, dim))
        for m, d in zip(mesh, other):
            F[:, d] = m.ravel()
        F = F[(np.linalg.norm(F, axis=1) <= rad) & (np.linalg.norm(F, axis=1) > 0)] + z
        P = np.vstack([curved, F])
        faces = np.array(["curved"] * len(curved) + ["flat"] * len(F))
    _check_nontrivial(action, P)
    dz = np.linalg.norm(P - z, axis=1)
    best = (np.inf, None, None)
    for a in range(1, action.p):
        disp = np.linalg.norm(action.power(P, a) - P, axis=1)
        with np.errstate(divide="ignore"):
            ratio = np.where(disp > 0, dz / disp, np.inf)
        i = int(np.argmin(ratio))
        if ratio[i] < best[0]:
            best = (float(ratio[i]), a, i)
    ratio, a, i = best
    return HoffmanMannResult(tuple(P[i].tolist()), int(a), ratio, bool(ratio <= K), K,
                             str(faces[i]))
