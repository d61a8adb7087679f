"""Regular lattices over a domain, restricted to a region."""

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class Grid:
    """Lattice points of ``axes`` that satisfy the region predicate.

    ``index[i]`` is the multi-index of ``points[i]``; ``neighbors[i]`` lists
    the 2n axis neighbours (``-1`` where missing); periodic axes wrap.
    """

    domain: object
    axes: tuple
    points: np.ndarray
    index: np.ndarray
    neighbors: np.ndarray
    lookup: np.ndarray  # lattice shape -> point id or -1

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    @property
    def spacing(self):
        return np.array([a[1] - a[0] if len(a) > 1 else 1.0 for a in self.axes])

    def __len__(self):
        return len(self.points)

    @property
    def boundary_mask(self):
        """Points with a missing lattice neighbour (sampled closure boundary)."""
        return np.any(self.neighbors < 0, axis=1)

    def ring(self, i, depth):
        """Grid ids within ``depth`` lattice steps (Chebyshev) of point ``i``."""
        offs = np.stack(np.meshgrid(*[np.arange(-depth, depth + 1)] * len(self.axes),
                                    indexing="ij"), axis=-1).reshape(-1, len(self.axes))
        offs = offs[np.any(offs != 0, axis=1)]
        idx = self.index[i] + offs
        shape = np.array(self.shape)
        per = self.domain.periodic_mask
        idx[:, per] %= shape[per]
        ok = np.all((idx >= 0) & (idx < shape), axis=1)
        ids = self.lookup[tuple(idx[ok].T)]
        return ids[ids >= 0]


def lattice_axes(domain, resolution, bounds=None):
    """Default axes: ``resolution`` evenly spaced values on each real
    coordinate (closed interval) and ``j / resolution`` on circle factors."""
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (domain.dim,))
    axes = []
    for i in range(domain.dim):
        if domain.periodic[i]:
            axes.append(np.arange(res[i]) / res[i])
            continue
        lo, hi = (bounds[i] if bounds is not None else (domain.lo[i], domain.hi[i]))
        if not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError(f"coordinate {i} is unbounded; pass explicit bounds")
        axes.append(np.linspace(lo, hi, res[i]))
    return tuple(axes)


def make_grid(domain, resolution=None, region=None, axes=None, bounds=None):
    """Build a :class:`Grid`; ``region(X) -> bool`` filters lattice points."""
    if axes is None:
        axes = lattice_axes(domain, resolution, bounds)
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    if len(axes) != domain.dim:
        raise ValueError("one axis per coordinate required")
    shape = tuple(len(a) for a in axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([m.ravel() for m in mesh], axis=-1)
    keep = domain.contains(P)
    if region is not None:
        keep &= np.asarray(region(P), dtype=bool)
    flat_ids = np.nonzero(keep)[0]
    lookup = np.full(int(np.prod(shape)), -1)
    lookup[flat_ids] = np.arange(len(flat_ids))
    lookup = lookup.reshape(shape)
    index = np.stack(np.unravel_index(flat_ids, shape), axis=-1)

    nb = np.full((len(flat_ids), 2 * domain.dim), -1)
    for d in range(domain.dim):
        for s, col in ((-1, 2 * d), (1, 2 * d + 1)):
            idx = index.copy()
            idx[:, d] += s
            if domain.periodic[d]:
                idx[:, d] %= shape[d]
                ok = np.ones(len(idx), dtype=bool)
            else:
                ok = (idx[:, d] >= 0) & (idx[:, d] < shape[d])
            nb[ok, col] = lookup[tuple(idx[ok].T)]
    return Grid(domain, axes, P[flat_ids], index, nb, lookup)


def disk_region(r_max, r_min=0.0, dims=(0, 1), slack=1e-12):
    """Predicate for ``r_min <= |(x_i, x_j)| <= r_max``."""

    def region(X):
        r = np.hypot(X[..., dims[0]], X[..., dims[1]])
        return (r <= r_max + slack) & (r >= r_min - slack)

    return region


def sector_region(r_min, r_max, angle_lo, angle_hi, dims=(0, 1)):
    """Annular sector; angles in radians measured in ``[0, 2 pi)``."""

    def region(X):
        r = np.hypot(X[..., dims[0]], X[..., dims[1]])
        ang = np.mod(np.arctan2(X[..., dims[1]], X[..., dims[0]]), 2 * np.pi)
        return ((r >= r_min - 1e-12) & (r <= r_max + 1e-12)
                & (ang >= angle_lo) & (ang <= angle_hi))

    return region


def box_region(lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def region(X):
        return np.all((X >= lo - 1e-12) & (X <= hi + 1e-12), axis=-1)

    return region


def intersect(*regions):
    def region(X):
        out = np.ones(X.shape[:-1], dtype=bool)
        for r in regions:
            out &= r(X)
        return out

    return region


def interpolate(grid, values, X, valid=None):
    """Multilinear interpolation of per-point ``values`` at ``X``.

    Corners that are missing from the grid (or not ``valid``) are dropped and
    the remaining weights renormalised. Rows with no usable corner fall back
    to the nearest valid grid point.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    values = np.asarray(values, dtype=float)
    if valid is None:
        valid = np.isfinite(values)
    dom = grid.domain
    n = dom.dim
    base = np.empty((len(X), n), dtype=int)
    frac = np.empty((len(X), n))
    for d, ax in enumerate(grid.axes):
        m = len(ax)
        if dom.periodic[d]:
            u = np.mod(X[:, d], 1.0) * m
            b = np.floor(u).astype(int)
            frac[:, d] = u - b
            base[:, d] = b % m
        else:
            b = np.clip(np.searchsorted(ax, X[:, d], side="right") - 1, 0, max(m - 2, 0))
            h = ax[b + 1] - ax[b] if m > 1 else np.ones(len(X))
            frac[:, d] = np.clip((X[:, d] - ax[b]) / h, 0.0, 1.0) if m > 1 else 0.0
            base[:, d] = b
    shape = np.array(grid.shape)
    num = np.zeros(len(X))
    den = np.zeros(len(X))
    for corner in range(2 ** n):
        bits = np.array([(corner >> d) & 1 for d in range(n)])
        idx = base + bits
        per = dom.periodic_mask
        idx[:, per] %= shape[per]
        ok = np.all(idx < shape, axis=1)
        ids = np.full(len(X), -1)
        ids[ok] = grid.lookup[tuple(idx[ok].T)]
        w = np.prod(np.where(bits, frac, 1.0 - frac), axis=1)
        use = ids >= 0
        use[use] &= valid[ids[use]]
        num[use] += w[use] * values[ids[use]]
        den[use] += w[use]
    out = np.full(len(X), np.nan)
    good = den > 1e-12
    out[good] = num[good] / den[good]
    if (~good).any():
        cand = np.nonzero(valid)[0]
        if len(cand):
            for i in np.nonzero(~good)[0]:
                dist = dom.distance(grid.points[cand], X[i])
                out[i] = values[cand[np.argmin(dist)]]
    return out
