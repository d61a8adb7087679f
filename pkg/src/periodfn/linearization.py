"""Linear parts at fixed points and what they imply for nearby periods.

The Jacobian is classified by its real Jordan structure: a hyperbolic
eigenvalue, a nontrivial Jordan block at a zero or purely imaginary
eigenvalue, or a vanishing linear part each force periods to blow up near
the fixed point; otherwise the linear part is semisimple with purely
imaginary spectrum (the periodic type).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from .detect import DetectorConfig, classify_batch
from .errors import FDNonConvergent, IllConditioned, NotC1
from .flow import field_batch, propagate

HYPERBOLIC = "HyperbolicPart"
DEGENERATE = "DegenerateBlock"
ZERO_LINEAR = "ZeroLinearPart"
PERIODIC_TYPE = "PeriodicType"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class JordanBlock:
    kind: str  # "real" or "complex"
    re: float
    im: float
    size: int

    @property
    def dim(self):
        return self.size * (2 if self.kind == "complex" else 1)

    def label(self):
        if self.kind == "real":
            return f"J{self.size}({self.re:.6g})"
        return f"J{self.size}({self.re:.6g}±{abs(self.im):.6g}i)"

    def to_dict(self):
        return {"kind": self.kind, "re": self.re, "im": self.im, "size": self.size}


@dataclass
class LinearPart:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    blocks: list
    scale: float
    cluster_tol: float
    rank_cutoff: float

    def reconstruct(self):
        """Block-diagonal real Jordan form with the detected blocks."""
        mats = []
        for b in self.blocks:
            if b.kind == "real":
                mats.append(b.re * np.eye(b.size) + np.eye(b.size, k=1))
            else:
                R = np.array([[b.re, -b.im], [b.im, b.re]])
                mats.append(np.kron(np.eye(b.size), R)
                            + np.kron(np.eye(b.size, k=1), np.eye(2)))
        n = sum(m.shape[0] for m in mats)
        J = np.zeros((n, n))
        i = 0
        for m in mats:
            J[i:i + len(m), i:i + len(m)] = m
            i += len(m)
        return J


@dataclass
class FixedPointClass:
    verdict: str
    details: str
    linear_part: Optional[LinearPart] = None

    def to_dict(self):
        lp = self.linear_part
        out = {"verdict": self.verdict, "details": self.details}
        if lp is not None:
            out["matrix"] = lp.matrix.tolist()
            out["eigenvalues"] = [[float(e.real), float(e.imag)] for e in lp.eigenvalues]
            out["blocks"] = [b.to_dict() for b in lp.blocks]
        return out


def _fd_jacobian(flow, z, h):
    n = len(z)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        F = field_batch(flow, np.stack([z + e, z - e]))
        J[:, j] = (F[0] - F[1]) / (2 * h)
    return J


def jacobian_at(flow, z, fd_step=None, eig_tol=1e-7, return_error=False):
    """Jacobi matrix of the field at ``z``.

    Uses the analytic Jacobian when available (polynomial fields are
    differentiated symbolically); otherwise central differences at three
    step sizes combined by Richardson extrapolation.
    """
    if not flow.is_c1:
        raise NotC1(f"{flow.name or 'flow'} is only declared C0")
    z = np.asarray(z, dtype=float)
    if flow.jacobian is not None:
        J = np.asarray(flow.jacobian(z), dtype=float)
        return (J, 0.0) if return_error else J
    h = fd_step or 1e-3 * max(1.0, float(np.linalg.norm(z)))
    D1, D2, D4 = (_fd_jacobian(flow, z, h / s) for s in (1, 2, 4))
    R1 = (4 * D2 - D1) / 3
    R2 = (4 * D4 - D2) / 3
    err = float(np.linalg.norm(R1 - R2, 2))
    if err > 10 * eig_tol * max(1.0, float(np.linalg.norm(R2, 2))):
        raise FDNonConvergent(f"Richardson estimates differ by {err:.3g}")
    return (R2, err) if return_error else R2


def _clusters(eigs, tol):
    """Single-linkage clusters of eigenvalues within ``tol``."""
    n = len(eigs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(eigs[i] - eigs[j]) <= tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def _rank(M, cutoff):
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > cutoff))


def _cluster_nilpotent(An, lam, radius, mult):
    """``T11 - lam I`` where ``T11`` is the Schur block of the eigenvalues
    within ``radius`` of ``lam``; the other eigenvalues drop out."""
    T, _, sdim = linalg.schur(An.astype(complex), output="complex",
                              sort=lambda x: abs(x - lam) <= radius)
    if sdim != mult:
        raise IllConditioned(f"cluster at {lam:.6g} has {sdim} Schur eigenvalues, "
                             f"expected {mult}")
    return T[:mult, :mult] - lam * np.eye(mult)


def real_jordan_classify(matrix, eig_tol=1e-7):
    """Real Jordan block structure of ``matrix``.

    The matrix is normalised by its spectral norm. Eigenvalues closer than
    ``sqrt(eig_tol)`` are clustered (a Jordan block of size q splits its
    eigenvalue by about eps^(1/q) under rounding), and the block sizes at
    each cluster follow from the ranks of the powers of ``A - lam I``
    restricted to the cluster's invariant subspace, with singular values
    below ``eig_tol`` counted as zero.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix must be square")
    n = A.shape[0]
    s = float(np.linalg.norm(A, 2))
    ctol = float(np.sqrt(eig_tol))
    if s == 0.0:
        return LinearPart(A.copy(), np.zeros(n, dtype=complex),
                          [JordanBlock("real", 0.0, 0.0, 1) for _ in range(n)],
                          0.0, ctol, eig_tol)
    An = A / s
    eigs = np.linalg.eigvals(An)
    groups = _clusters(eigs, ctol)
    centers = np.array([eigs[g].mean() for g in groups])
    if len(centers) > 1:
        gaps = np.abs(centers[:, None] - centers[None, :])
        gaps[np.diag_indices(len(centers))] = np.inf
        if gaps.min() < 10 * ctol:
            raise IllConditioned(f"eigenvalue clusters separated by only {gaps.min():.3g}")
    blocks = []
    for g, lam in zip(groups, centers):
        mult = len(g)
        if abs(lam.imag) <= ctol:
            lam = complex(lam.real, 0.0)
        elif lam.imag < 0:
            continue  # the conjugate cluster carries the block
        N = _cluster_nilpotent(An, lam, float(np.max(np.abs(eigs[g] - lam))) + ctol, mult)
        ranks = [mult]
        P = np.eye(mult, dtype=N.dtype)
        for _ in range(mult):
            P = P @ N
            ranks.append(_rank(P, eig_tol))
        # number of blocks of size >= j is ranks[j-1] - ranks[j]
        at_least = [ranks[j - 1] - ranks[j] for j in range(1, mult + 1)] + [0]
        sizes = []
        for j in range(1, mult + 1):
            sizes += [j] * (at_least[j - 1] - at_least[j])
        if sum(sizes) != mult:
            raise IllConditioned(f"rank sequence {ranks} inconsistent with "
                                 f"multiplicity {mult} at {lam * s:.6g}")
        kind = "real" if lam.imag == 0 else "complex"
        for q in sorted(sizes, reverse=True):
            blocks.append(JordanBlock(kind, float(lam.real * s), float(lam.imag * s), q))
    if sum(b.dim for b in blocks) != n:
        raise IllConditioned("complex eigenvalues without conjugate partners")
    blocks.sort(key=lambda b: (b.kind, b.re, b.im, -b.size))
    return LinearPart(A.copy(), np.sort_complex(eigs * s), blocks, s, ctol, eig_tol)


def classify_matrix(A, eig_tol=1e-7):
    A = np.asarray(A, dtype=float)
    s = float(np.linalg.norm(A, 2))
    if s < eig_tol:
        lp = real_jordan_classify(np.zeros_like(A), eig_tol)
        return FixedPointClass(ZERO_LINEAR, f"|A| = {s:.3g}", lp)
    try:
        lp = real_jordan_classify(A, eig_tol)
    except IllConditioned as exc:
        return FixedPointClass(INDETERMINATE, str(exc))
    hyp = [e for e in lp.eigenvalues if abs(e.real) > eig_tol * s]
    if hyp:
        return FixedPointClass(HYPERBOLIC, "eigenvalues with nonzero real part: "
                               + ", ".join(f"{e:.6g}" for e in hyp), lp)
    deg = [b for b in lp.blocks if b.size >= 2]
    if deg:
        return FixedPointClass(DEGENERATE, "blocks " + ", ".join(b.label() for b in deg), lp)
    return FixedPointClass(PERIODIC_TYPE, "semisimple, spectrum "
                           + ", ".join(b.label() for b in lp.blocks), lp)


def classify_fixed_point(flow, z, eig_tol=1e-7, fixed_tol=1e-9):
    """Classify a fixed point by the real Jordan structure of its linear part."""
    z = np.asarray(z, dtype=float)
    speed = float(np.linalg.norm(field_batch(flow, z[None])[0]))
    if speed >= fixed_tol:
        raise ValueError(f"{z.tolist()} is not a fixed point (|F| = {speed:.3g})")
    return classify_matrix(jacobian_at(flow, z, eig_tol=eig_tol), eig_tol)


@dataclass
class GammaReport:
    radii: np.ndarray
    gamma: np.ndarray
    quadratic_M: Optional[np.ndarray]
    quadratic_applicable: bool
    diagnostic: str = ""

    def to_dict(self):
        return {"radii": self.radii.tolist(), "gamma": self.gamma.tolist(),
                "quadratic_M": None if self.quadratic_M is None else self.quadratic_M.tolist(),
                "quadratic_applicable": self.quadratic_applicable,
                "diagnostic": self.diagnostic}


def gamma_estimate(flow, z, T, radii, n_dirs=16, n_times=65, eig_tol=1e-7, seed=0):
    """Empirical ``gamma(r) = sup |F(Phi(x, t))| / |x - z|`` over sample points
    at distance r and ``t`` in ``[-T, T]``."""
    from .detect import sphere_directions

    z = np.asarray(z, dtype=float)
    radii = np.asarray(radii, dtype=float)
    dirs = sphere_directions(len(z), n_dirs, seed)
    ts = np.linspace(-T, T, n_times)
    dom = flow.domain
    gam = np.zeros(len(radii))
    quad = np.zeros(len(radii))
    for k, r in enumerate(radii):
        X = dom.wrap(z[None] + r * dirs)
        dist = dom.distance(X, z)
        XX = np.repeat(X, len(ts), axis=0)
        TT = np.tile(ts, len(X))
        Y, ok = propagate(flow, XX, TT)
        speed = np.linalg.norm(field_batch(flow, Y), axis=1)
        dd = np.repeat(dist, len(ts))
        speed = np.where(ok, speed, np.nan)
        gam[k] = np.nanmax(speed / dd)
        quad[k] = np.nanmax(speed / dd ** 2)
    applicable = False
    diag = ""
    if flow.smoothness in ("C2", "Cinf"):
        J = jacobian_at(flow, z, eig_tol=eig_tol)
        applicable = bool(np.linalg.norm(J, 2) < eig_tol)
        if not applicable:
            diag = "linear part is nonzero; quadratic bound not applicable"
    else:
        diag = "flow not declared C2"
    return GammaReport(radii, gam, quad if applicable else None, applicable, diag)


def cone_directions(dim, epsilon, n_dirs=32, axis=0, seed=0):
    """Unit vectors ``u`` with ``|u[axis]| >= epsilon``; the axis itself first.

    In the plane the admissible angles are split evenly between the two
    halves of the cone; in higher dimensions they are sampled by rejection.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    e = np.zeros(dim)
    e[axis] = 1.0
    if dim == 2:
        phi = np.arccos(epsilon)
        half = n_dirs // 2
        ang = np.linspace(-phi, phi, half)
        ang = np.concatenate([ang, ang + np.pi])
        if axis == 0:
            D = np.column_stack([np.cos(ang), np.sin(ang)])
        else:
            D = np.column_stack([np.sin(ang), np.cos(ang)])
    else:
        rng = np.random.default_rng(seed)
        out = []
        while len(out) < n_dirs - 1:
            v = rng.standard_normal(dim)
            v /= np.linalg.norm(v)
            if abs(v[axis]) >= epsilon:
                out.append(v)
        D = np.array(out)
    return np.vstack([e, D])


@dataclass
class BlowupReport:
    rows: list
    blow_up: bool
    threshold: float
    epsilon: float

    def min_periods(self):
        return np.array([r["min_period"] for r in self.rows])

    def axis_periods(self):
        return np.array([r["axis_period"] for r in self.rows])

    def to_dict(self):
        return {"epsilon": self.epsilon, "threshold": self.threshold,
                "blow_up": self.blow_up, "rows": self.rows}


def period_blowup_probe(flow, z, epsilon, radii, threshold_T, detector=None,
                        n_dirs=32, axis=0, directions=None, seed=0):
    """Minimal periods of points in the cone ``|x_axis| >= epsilon |x - z|``
    at each radius. Non-periodic evidence counts as a period beyond the
    horizon."""
    detector = detector or DetectorConfig()
    z = np.asarray(z, dtype=float)
    if directions is None:
        directions = cone_directions(len(z), epsilon, n_dirs, axis, seed)
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    directions = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    rows = []
    for r in radii:
        X = flow.domain.wrap(z[None] + r * directions)
        b = classify_batch(flow, X, detector)
        per = b.period[b.periodic]
        rows.append({
            "radius": float(r),
            "min_period": float(per.min()) if len(per) else float("inf"),
            "max_period": float(per.max()) if len(per) else float("nan"),
            "axis_period": float(b.period[0]) if b.periodic[0] else float("inf"),
            "n_periodic": int(b.periodic.sum()),
            "n_non_periodic": int(b.non_periodic.sum()),
            "n_unknown": int(b.unknown.sum()),
            "n_samples": len(X),
        })
    last = rows[-1]
    any_np = any(r["n_non_periodic"] for r in rows)
    blow = any_np or (last["n_periodic"] == last["n_samples"]
                      and last["min_period"] > threshold_T)
    return BlowupReport(rows, bool(blow), float(threshold_T), float(epsilon))
