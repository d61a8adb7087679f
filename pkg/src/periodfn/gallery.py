"""Built-in example flows with analytic ground truth.

Each entry bundles the flow, a detector configuration suited to its time
scales, and whatever is known in closed form: minimal periods, the
generator of the period group, the Jacobian at the origin and the expected
fixed-point verdict.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .detect import DetectorConfig
from .errors import InvalidParam, UnknownName
from .expr import PolynomialField
from .flow import Domain, FlowSpec

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Truth:
    period: Optional[Callable] = None
    theta: Optional[Callable] = None
    jacobian_at_fixed: Optional[np.ndarray] = None
    expected_class: Optional[str] = None


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    name: str
    params: dict
    flow: FlowSpec
    truth: Truth
    detector: DetectorConfig
    fixed_points: tuple = ()
    notes: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def domain(self):
        return self.flow.domain


def _rotate(X, angle):
    c, s = np.cos(angle), np.sin(angle)
    x, y = X[..., 0], X[..., 1]
    return c * x - s * y, s * x + c * y


def _r2(X):
    return X[..., 0] ** 2 + X[..., 1] ** 2


def seifert(k=3):
    """Solid torus D^2 x S^1 with coordinates (x, y, tau), tau in turns.

    The disk turns by 1/k of a revolution per unit time while tau turns
    once, so the central circle has period 1 and every other orbit period k.
    """
    if int(k) != k or k < 2:
        raise InvalidParam("seifert needs an integer k >= 2")
    k = int(k)
    dom = Domain((-1.0, -1.0, 0.0), (1.0, 1.0, 1.0), (False, False, True))
    omega = TWO_PI / k

    def closed(X, t):
        X = np.asarray(X, dtype=float)
        t = np.asarray(t, dtype=float)
        x, y = _rotate(X, omega * t)
        return np.stack([x, y, X[..., 2] + t], axis=-1)

    def vf(X):
        X = np.asarray(X, dtype=float)
        return np.stack([-omega * X[..., 1], omega * X[..., 0],
                         np.ones(X.shape[:-1])], axis=-1)

    jac = np.array([[0.0, -omega, 0.0], [omega, 0.0, 0.0], [0.0, 0.0, 0.0]])
    flow = FlowSpec(dom, "closed_form", closed_form=closed, field=vf,
                    jacobian=lambda x: jac.copy(), name=f"seifert(k={k})")

    def period(X):
        X = np.atleast_2d(X)
        return np.where(_r2(X) > 0, float(k), 1.0)

    truth = Truth(period=period, theta=lambda X: np.full(len(np.atleast_2d(X)), float(k)))
    cfg = DetectorConfig(horizon=k + 1.0, scan_step=0.01)
    return GalleryEntry("seifert", {"k": k}, flow, truth, cfg)


def c_inf_disk():
    """Smooth flow z -> exp(2 pi i t |z|^2) z on the plane."""
    dom = Domain.euclidean(2, 2.0)

    def closed(X, t):
        X = np.asarray(X, dtype=float)
        x, y = _rotate(X, TWO_PI * np.asarray(t, dtype=float) * _r2(X))
        return np.stack([x, y], axis=-1)

    w = repr(TWO_PI)
    vf = PolynomialField([f"-{w}*(x^2 + y^2)*y", f"{w}*(x^2 + y^2)*x"], 2)
    flow = FlowSpec(dom, "closed_form", closed_form=closed, field=vf,
                    jacobian=vf.jacobian, expressions=vf.components,
                    name="c_inf_disk")

    def period(X):
        r2 = _r2(np.atleast_2d(X))
        with np.errstate(divide="ignore"):
            return np.where(r2 > 0, 1.0 / r2, np.nan)

    truth = Truth(period=period, theta=period, jacobian_at_fixed=np.zeros((2, 2)),
                  expected_class="ZeroLinearPart")
    cfg = DetectorConfig(horizon=2000.0, scan_step=0.05)
    return GalleryEntry("c_inf_disk", {}, flow, truth, cfg, fixed_points=((0.0, 0.0),),
                        notes="periods diverge at the origin")


def c0_disk():
    """Continuous flow z -> exp(2 pi i t / |z|^2) z, fixing the origin."""
    dom = Domain.euclidean(2, 2.0)

    def closed(X, t):
        X = np.asarray(X, dtype=float)
        r2 = _r2(X)
        safe = np.where(r2 > 0, r2, 1.0)
        x, y = _rotate(X, TWO_PI * np.asarray(t, dtype=float) / safe)
        return np.stack([np.where(r2 > 0, x, 0.0), np.where(r2 > 0, y, 0.0)], axis=-1)

    def vf(X):
        X = np.asarray(X, dtype=float)
        r2 = _r2(X)
        scale = np.where(r2 > 0, TWO_PI / np.where(r2 > 0, r2, 1.0), 0.0)
        return np.stack([-scale * X[..., 1], scale * X[..., 0]], axis=-1)

    flow = FlowSpec(dom, "closed_form", closed_form=closed, field=vf,
                    smoothness="C0", name="c0_disk")

    def period(X):
        r2 = _r2(np.atleast_2d(X))
        return np.where(r2 > 0, r2, np.nan)

    truth = Truth(period=period, theta=lambda X: _r2(np.atleast_2d(X)))
    cfg = DetectorConfig(horizon=1.5, scan_step=1e-4)
    return GalleryEntry("c0_disk", {}, flow, truth, cfg, fixed_points=((0.0, 0.0),))


@lru_cache(maxsize=None)
def half_period_integral(b):
    """``I_b = int_0^1 du / sqrt(1 - u^(2b))`` by adaptive quadrature with
    the inverse square-root endpoint singularity factored out."""

    def regular(u):
        # (1 - u^(2b)) / (1 - u) = sum_{j<2b} u^j
        return 1.0 / math.sqrt(sum(u ** j for j in range(2 * b)))

    val, _ = integrate.quad(regular, 0.0, 1.0, weight="alg", wvar=(0.0, -0.5),
                            epsabs=1e-14, epsrel=1e-14)
    return val


def hamiltonian_period(X, b):
    """Minimal period of the level set ``x^(2b) + y^2 = c`` through ``X``:
    ``Per = 2 I_b c^(1/(2b) - 1/2)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    c = X[..., 0] ** (2 * b) + X[..., 1] ** 2
    with np.errstate(divide="ignore"):
        return np.where(c > 0, 2.0 * half_period_integral(b)
                        * c ** (1.0 / (2 * b) - 0.5), np.nan)


def hamiltonian_even(b=2):
    """Hamiltonian field of ``f = x^(2b) + y^2``: ``(-2y, 2b x^(2b-1))``."""
    if int(b) != b or b < 2:
        raise InvalidParam("hamiltonian_even needs an integer b >= 2")
    b = int(b)
    dom = Domain.euclidean(2, 4.0)
    vf = PolynomialField(["-2*y", f"{2 * b}*x^{2 * b - 1}"], 2)
    flow = FlowSpec(dom, "vector_field", field=vf, jacobian=vf.jacobian,
                    expressions=vf.components, name=f"hamiltonian_even(b={b})")
    truth = Truth(period=lambda X: hamiltonian_period(X, b),
                  jacobian_at_fixed=np.array([[0.0, -2.0], [0.0, 0.0]]),
                  expected_class="DegenerateBlock")
    cfg = DetectorConfig(horizon=100.0, scan_step=0.02)
    return GalleryEntry("hamiltonian_even", {"b": b}, flow, truth, cfg,
                        fixed_points=((0.0, 0.0),))


def block_matrix(blocks):
    """Block-diagonal real matrix from a list of block descriptions.

    ``("real", lam, q)`` is the Jordan block J_q(lam); ``("complex", a, b, q)``
    the real Jordan block of a +- ib with q copies of R(a, b) on the diagonal
    and identities above it.
    """
    mats = []
    for blk in blocks:
        kind = blk[0]
        if kind == "real":
            lam, q = float(blk[1]), int(blk[2]) if len(blk) > 2 else 1
            M = lam * np.eye(q) + np.eye(q, k=1)
        elif kind == "complex":
            a, bb = float(blk[1]), float(blk[2])
            q = int(blk[3]) if len(blk) > 3 else 1
            R = np.array([[a, -bb], [bb, a]])
            M = np.kron(np.eye(q), R) + np.kron(np.eye(q, k=1), np.eye(2))
        else:
            raise InvalidParam(f"unknown block kind {kind!r}")
        if M.shape[0] < 1:
            raise InvalidParam("blocks must have size >= 1")
        mats.append(M)
    if not mats:
        raise InvalidParam("need at least one block")
    n = sum(m.shape[0] for m in mats)
    A = np.zeros((n, n))
    i = 0
    for m in mats:
        q = m.shape[0]
        A[i:i + q, i:i + q] = m
        i += q
    return A


def _linear_components(A):
    n = A.shape[0]
    comps = []
    for i in range(n):
        terms = [f"{repr(float(A[i, j]))}*x{j + 1}" for j in range(n) if A[i, j] != 0]
        comps.append(" + ".join(terms).replace("+ -", "- ") if terms else "0")
    return comps


def _linear_flow(A, name, bound):
    n = A.shape[0]
    vf = PolynomialField(_linear_components(A), n)
    return FlowSpec(Domain.euclidean(n, bound), "vector_field", field=vf,
                    jacobian=lambda x: A.copy(), expressions=vf.components,
                    name=name)


def linear(blocks=(("complex", 0.0, 1.0),)):
    """Linear field x' = A x with A assembled from real Jordan blocks."""
    blocks = tuple(tuple(b) for b in blocks)
    A = block_matrix(blocks)
    flow = _linear_flow(A, "linear", 1e6)
    rot = [TWO_PI / abs(float(b[2])) for b in blocks
           if b[0] == "complex" and float(b[1]) == 0 and float(b[2]) != 0]
    truth = Truth(jacobian_at_fixed=A)
    return GalleryEntry("linear", {"blocks": blocks}, flow, truth,
                        DetectorConfig(horizon=100.0),
                        fixed_points=(tuple(np.zeros(A.shape[0])),),
                        extra={"rotation_periods": rot})


def saddle():
    """Hyperbolic saddle (x, -y); orbits are hyperbolas."""
    vf = PolynomialField(["x", "-y"], 2)

    def closed(X, t):
        X = np.asarray(X, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.stack([X[..., 0] * np.exp(t), X[..., 1] * np.exp(-t)], axis=-1)

    flow = FlowSpec(Domain.euclidean(2), "closed_form", closed_form=closed,
                    field=vf, jacobian=vf.jacobian, expressions=vf.components,
                    name="saddle")
    truth = Truth(period=lambda X: np.full(len(np.atleast_2d(X)), np.nan),
                  jacobian_at_fixed=np.diag([1.0, -1.0]),
                  expected_class="HyperbolicPart")
    return GalleryEntry("saddle", {}, flow, truth, DetectorConfig(horizon=30.0),
                        fixed_points=((0.0, 0.0),))


def rotation(beta=TWO_PI):
    """Rigid rotation (-beta y, beta x) with period 2 pi / beta."""
    beta = float(beta)
    if beta == 0 or not math.isfinite(beta):
        raise InvalidParam("rotation needs a finite nonzero beta")
    b = repr(beta)
    vf = PolynomialField([f"-{b}*y", f"{b}*x"], 2)

    def closed(X, t):
        x, y = _rotate(np.asarray(X, dtype=float), beta * np.asarray(t, dtype=float))
        return np.stack([x, y], axis=-1)

    flow = FlowSpec(Domain.euclidean(2, 4.0), "closed_form", closed_form=closed,
                    field=vf, jacobian=vf.jacobian, expressions=vf.components,
                    name=f"rotation(beta={beta:g})")
    per = TWO_PI / abs(beta)

    def period(X):
        return np.where(_r2(np.atleast_2d(X)) > 0, per, np.nan)

    truth = Truth(period=period,
                  theta=lambda X: np.full(len(np.atleast_2d(X)), per),
                  jacobian_at_fixed=np.array([[0.0, -beta], [beta, 0.0]]),
                  expected_class="PeriodicType")
    cfg = DetectorConfig(horizon=max(1.5 * per, 1.0), scan_step=per / 2000)
    return GalleryEntry("rotation", {"beta": beta}, flow, truth, cfg,
                        fixed_points=((0.0, 0.0),))


FLAT_CIRCLE = np.array([[0.0, 0.0, 0.0, 0.0],
                        [1.0, 0.0, 0.0, 0.0],
                        [0.0, 0.0, 0.0, -1.0],
                        [0.0, 0.0, 1.0, 0.0]])


def flat_circle():
    """Linear field on R^4 with a nilpotent 2-block and a unit rotation.

    Points with x1 = x2 = 0 and (x3, x4) != 0 have period 2 pi; x1 != 0
    drifts along x2 and never returns.
    """
    flow = _linear_flow(FLAT_CIRCLE, "flat_circle", 1e6)

    def period(X):
        X = np.atleast_2d(X)
        on_plane = (X[..., 0] == 0) & (X[..., 2] ** 2 + X[..., 3] ** 2 > 0)
        return np.where(on_plane, TWO_PI, np.nan)

    truth = Truth(period=period, jacobian_at_fixed=FLAT_CIRCLE.copy(),
                  expected_class="DegenerateBlock")
    return GalleryEntry("flat_circle", {}, flow, truth,
                        DetectorConfig(horizon=10.0, scan_step=0.005),
                        fixed_points=((0.0, 0.0, 0.0, 0.0),))


_BUILDERS = {
    "seifert": seifert,
    "c_inf_disk": c_inf_disk,
    "c0_disk": c0_disk,
    "hamiltonian_even": hamiltonian_even,
    "linear": linear,
    "saddle": saddle,
    "rotation": rotation,
    "flat_circle": flat_circle,
}

NAMES = tuple(_BUILDERS)


def gallery_get(name, params=None, **kwargs):
    """Build the named entry; parameters come from ``params`` and/or keywords."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownName(f"no gallery flow named {name!r}") from None
    args = dict(params or {})
    args.update(kwargs)
    try:
        return builder(**args)
    except TypeError as exc:
        raise InvalidParam(f"bad parameters for {name}: {exc}") from None
