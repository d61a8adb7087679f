"""Flows, domains and their evaluation.

Points are arrays of chart coordinates. Periodic (circle) coordinates are
stored in turns, i.e. in ``[0, 1)``, and the distance on a domain is the
product of the Euclidean metric on real coordinates with the shortest-arc
metric on circle factors.
"""

from dataclasses import dataclass, field as dc_field
from typing import Callable, Optional

import numpy as np

from .dopri import BatchDopri5, integrate_scaled
from .errors import NotDifferentiable, TrajectoryLeftDomain

SMOOTHNESS = ("C0", "C1", "C2", "Cinf")


@dataclass(frozen=True)
class Domain:
    """A box in R^n, optionally with circle factors and a half-space face.

    ``lo``/``hi`` may be infinite for unbounded coordinates. Periodic
    coordinates must have the box ``[0, 1)``.
    """

    lo: tuple
    hi: tuple
    periodic: tuple = None
    boundary_coord: Optional[int] = None

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("lo and hi must be non-empty and of equal length")
        periodic = self.periodic
        if periodic is None:
            periodic = (False,) * len(lo)
        periodic = tuple(bool(p) for p in periodic)
        if len(periodic) != len(lo):
            raise ValueError("periodic mask has wrong length")
        for i, p in enumerate(periodic):
            if p and (lo[i], hi[i]) != (0.0, 1.0):
                raise ValueError(f"periodic coordinate {i} must span [0, 1)")
            if not p and not lo[i] < hi[i]:
                raise ValueError(f"empty interval on coordinate {i}")
        if self.boundary_coord is not None:
            b = self.boundary_coord
            if periodic[b] or lo[b] != 0.0:
                raise ValueError("boundary coordinate must be real and start at 0")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "periodic", periodic)

    @classmethod
    def euclidean(cls, dim, bound=np.inf):
        return cls((-bound,) * dim, (bound,) * dim)

    @property
    def dim(self):
        return len(self.lo)

    @property
    def periodic_mask(self):
        return np.array(self.periodic, dtype=bool)

    def wrap(self, X):
        X = np.array(X, dtype=float, copy=True)
        mask = self.periodic_mask
        if mask.any():
            X[..., mask] = np.mod(X[..., mask], 1.0)
            # mod can return exactly 1.0 for tiny negative inputs
            X[..., mask] = np.where(X[..., mask] >= 1.0, 0.0, X[..., mask])
        return X

    def contains(self, X, slack=1e-9):
        X = np.asarray(X, dtype=float)
        real = ~self.periodic_mask
        lo = np.array(self.lo)[real]
        hi = np.array(self.hi)[real]
        span = np.where(np.isfinite(hi - lo), hi - lo, 1.0)
        tol = slack * np.maximum(1.0, span)
        Xr = X[..., real]
        inside = np.all((Xr >= lo - tol) & (Xr <= hi + tol), axis=-1)
        return inside & np.all(np.isfinite(X), axis=-1)

    def displacement(self, A, B):
        """Per-coordinate signed difference ``B - A`` (shortest arc on circles)."""
        D = np.asarray(B, dtype=float) - np.asarray(A, dtype=float)
        mask = self.periodic_mask
        if mask.any():
            D[..., mask] = (D[..., mask] + 0.5) % 1.0 - 0.5
        return D

    def distance(self, A, B):
        D = self.displacement(A, B)
        return np.sqrt(np.sum(D * D, axis=-1))


@dataclass(frozen=True)
class IntegratorConfig:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_step: float = np.inf
    max_horizon: float = 1e4


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """A flow given in closed form or by its generating vector field.

    ``closed_form(X, t)`` and ``field(X)`` are vectorised over leading axes
    of ``X``; ``t`` broadcasts against ``X.shape[:-1]``. ``jacobian(x)`` is
    an optional analytic Jacobi matrix of the field at a single point.
    """

    domain: Domain
    kind: str
    closed_form: Optional[Callable] = None
    field: Optional[Callable] = None
    jacobian: Optional[Callable] = None
    smoothness: str = "Cinf"
    integrator: IntegratorConfig = dc_field(default_factory=IntegratorConfig)
    name: str = ""
    # polynomial fields keep their expression trees for symbolic work
    expressions: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("closed_form", "vector_field"):
            raise ValueError(f"unknown flow kind {self.kind!r}")
        if self.smoothness not in SMOOTHNESS:
            raise ValueError(f"unknown smoothness class {self.smoothness!r}")
        if self.kind == "closed_form" and self.closed_form is None:
            raise ValueError("closed_form flow needs a closed_form map")
        if self.kind == "vector_field":
            if self.field is None:
                raise ValueError("vector_field flow needs a field")
            if self.smoothness == "C0":
                raise ValueError("C0 flows can only be given in closed form")

    @property
    def dim(self):
        return self.domain.dim

    @property
    def is_c1(self):
        return self.smoothness != "C0"


def _as_batch(flow, X):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[-1] != flow.dim:
        raise ValueError(f"expected points of dimension {flow.dim}")
    return X, single


def propagate(flow, X, T):
    """Evaluate ``Phi(X[i], T[i])`` for a batch.

    Returns ``(Y, ok)`` where ``ok`` flags rows whose end point is finite and
    inside the domain box. Periodic coordinates of ``Y`` are wrapped.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    T = np.broadcast_to(np.asarray(T, dtype=float), X.shape[:1])
    dom = flow.domain
    if np.any(np.abs(T) > flow.integrator.max_horizon):
        raise ValueError("time exceeds the configured max horizon")
    if flow.kind == "closed_form":
        with np.errstate(all="ignore"):
            Y = flow.closed_form(X, T)
        ok = np.ones(len(X), dtype=bool)
    else:
        cfg = flow.integrator
        Y, ok = integrate_scaled(flow.field, X, T, cfg.abs_tol, cfg.rel_tol,
                                 cfg.max_step)
    Y = dom.wrap(Y)
    ok &= dom.contains(Y)
    return Y, ok


def evaluate_flow(flow, x, t):
    """Return ``Phi(x, t)``; raises TrajectoryLeftDomain if the end point
    leaves the domain."""
    X, single = _as_batch(flow, x)
    Y, ok = propagate(flow, X, np.full(len(X), float(t)))
    if not ok.all():
        raise TrajectoryLeftDomain(f"orbit leaves the domain before t={t}")
    return Y[0] if single else Y


def field_batch(flow, X):
    """Vector field at a batch of points."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if flow.field is not None:
        with np.errstate(all="ignore"):
            return np.asarray(flow.field(X), dtype=float)
    return _fd_field(flow, X)


def _fd_field(flow, X):
    eps = np.finfo(float).eps
    h = eps ** (1 / 3) * np.maximum(1.0, np.linalg.norm(X, axis=-1))
    dom = flow.domain

    def central(hh):
        with np.errstate(all="ignore"):
            fwd = flow.closed_form(X, hh)
            bwd = flow.closed_form(X, -hh)
        return dom.displacement(bwd, fwd) / (2 * hh[:, None])

    d1 = central(h)
    if flow.smoothness == "C0":
        d2 = central(h / 2)
        scale = np.maximum(1.0, np.linalg.norm(d1, axis=-1))
        if np.any(np.linalg.norm(d1 - d2, axis=-1) > 1e-4 * scale):
            raise NotDifferentiable("finite differences disagree at two step sizes")
    return d1


def evaluate_field(flow, x):
    """Generator ``F(x) = dPhi/dt`` at ``t = 0``."""
    X, single = _as_batch(flow, x)
    F = field_batch(flow, X)
    return F[0] if single else F


class Scanner:
    """Walks a batch of orbits over a uniform time grid ``t_j = j * dt``."""

    def __init__(self, flow, X0, dt):
        self.flow = flow
        self.x0 = np.array(X0, dtype=float)
        self.dt = float(dt)
        self.j = 0
        self._stepper = None
        if flow.kind == "vector_field":
            cfg = flow.integrator
            self._stepper = BatchDopri5(flow.field, self.x0, None, cfg.abs_tol,
                                        cfg.rel_tol, cfg.max_step)

    def keep(self, mask):
        self.x0 = self.x0[mask]
        if self._stepper is not None:
            self._stepper.keep(mask)

    def next_chunk(self, m):
        """States at the next ``m`` grid times, shape ``(N, m, n)``, and the
        times themselves."""
        idx = np.arange(self.j + 1, self.j + m + 1)
        times = idx * self.dt
        self.j += m
        dom = self.flow.domain
        if self._stepper is None:
            T = np.broadcast_to(times, (len(self.x0), m))
            with np.errstate(all="ignore"):
                S = self.flow.closed_form(self.x0[:, None, :], T)
        else:
            S = np.empty((len(self.x0), m, self.flow.dim))
            for c, t in enumerate(times):
                S[:, c, :] = self._stepper.advance_to(t)
            S[self._stepper.bad] = np.nan
        return dom.wrap(S), times
