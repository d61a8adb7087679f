"""Batched Dormand-Prince 5(4) integrator.

All rows of a batch share one adaptive step size. Each row ``i`` solves the
autonomous system ``dy/ds = scale[i] * f(y)``, which lets a single sweep over
``s in [0, 1]`` evaluate a flow at a different time per row.
"""

import numpy as np

from .errors import IntegratorStalled

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B = np.array(A[6] + [0.0])
# 5th minus embedded 4th order weights
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
              22 / 525, -1 / 40])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


class BatchDopri5:
    """Stateful integrator over a batch of initial conditions.

    Parameters
    ----------
    fun : callable
        Vectorised vector field, ``(N, n) -> (N, n)``.
    y0 : array_like, shape (N, n)
    scale : array_like, shape (N,), optional
        Per-row time scaling; defaults to ones.
    atol, rtol : float
    max_step : float
        Upper bound on the step in the integration variable.
    """

    def __init__(self, fun, y0, scale=None, atol=1e-9, rtol=1e-9,
                 max_step=np.inf):
        self.fun = fun
        self.y = np.array(y0, dtype=float, copy=True)
        if self.y.ndim != 2:
            raise ValueError("y0 must have shape (N, n)")
        n_rows = self.y.shape[0]
        if scale is None:
            scale = np.ones(n_rows)
        self.scale = np.asarray(scale, dtype=float).reshape(n_rows).copy()
        self.atol = float(atol)
        self.rtol = float(rtol)
        self.max_step = float(max_step)
        self.t = 0.0
        self.bad = np.zeros(n_rows, dtype=bool)
        self.n_steps = 0
        self._k1 = self._rhs(self.y) if n_rows else np.zeros_like(self.y)
        self.h = self._initial_step() if n_rows else 1e-3

    def _rhs(self, y):
        dy = self.fun(y) * self.scale[:, None]
        # non-finite rows are frozen rather than poisoning the step control
        dy[self.bad] = 0.0
        return dy

    def _initial_step(self):
        sc = self.atol + self.rtol * np.abs(self.y)
        d0 = np.sqrt(np.mean((self.y / sc) ** 2))
        d1 = np.sqrt(np.mean((self._k1 / sc) ** 2))
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        return float(min(h0, self.max_step, 0.1))

    def keep(self, mask):
        """Restrict the batch to rows where ``mask`` is true."""
        mask = np.asarray(mask, dtype=bool)
        self.y = self.y[mask]
        self.scale = self.scale[mask]
        self.bad = self.bad[mask]
        self._k1 = self._k1[mask]

    def _step(self, h):
        y = self.y
        ks = [self._k1]
        for i in range(1, 7):
            incr = sum(a * k for a, k in zip(A[i], ks) if a != 0.0)
            ks.append(self._rhs(y + h * incr))
        y_new = y + h * sum(b * k for b, k in zip(B, ks) if b != 0.0)
        err_vec = h * sum(e * k for e, k in zip(E, ks) if e != 0.0)
        sc = self.atol + self.rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore", over="ignore"):
            err_rows = np.sqrt(np.mean((err_vec / sc) ** 2, axis=1))
        finite = np.isfinite(y_new).all(axis=1) & np.isfinite(err_rows)
        err_rows = np.where(finite, err_rows, 0.0)
        return y_new, ks[6], err_rows, finite

    def advance_to(self, t_target):
        """Integrate all rows to ``t_target`` (>= current time) exactly."""
        t_target = float(t_target)
        if self.y.shape[0] == 0:
            self.t = t_target
            return self.y
        h_min_floor = 1e-13 * max(1.0, abs(t_target))
        while self.t < t_target:
            remaining = t_target - self.t
            h = min(self.h, self.max_step)
            landing = h >= remaining
            if landing:
                h = remaining
            y_new, k7, err_rows, finite = self._step(h)
            err = float(err_rows.max()) if err_rows.size else 0.0
            if err <= 1.0:
                newly_bad = ~finite & ~self.bad
                if newly_bad.any():
                    self.bad |= newly_bad
                    y_new[newly_bad] = self.y[newly_bad]
                    k7[newly_bad] = 0.0
                self.y = y_new
                self._k1 = k7
                self.t = t_target if landing else self.t + h
                self.n_steps += 1
                factor = MAX_FACTOR if err == 0.0 else min(
                    MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
                # a forced short landing step says nothing about the natural step
                if not landing or factor < 1.0:
                    self.h = h * factor
            else:
                self.h = h * max(MIN_FACTOR, SAFETY * err ** -0.2)
                if self.h < h_min_floor:
                    raise IntegratorStalled(
                        f"step size underflow at s={self.t:.6g}")
        return self.y


def integrate_scaled(fun, y0, scale, atol=1e-9, rtol=1e-9, max_step=np.inf):
    """Return ``y(1)`` for ``dy/ds = scale * f(y)``, plus a mask of rows
    that stayed finite."""
    y0 = np.asarray(y0, dtype=float)
    scale = np.asarray(scale, dtype=float)
    out = y0.copy()
    moving = scale != 0.0
    if not moving.any():
        return out, np.ones(len(y0), dtype=bool)
    smax = float(np.max(np.abs(scale[moving])))
    stepper = BatchDopri5(fun, y0[moving], scale[moving], atol, rtol,
                          max_step / smax if np.isfinite(max_step) else np.inf)
    out[moving] = stepper.advance_to(1.0)
    ok = np.ones(len(y0), dtype=bool)
    ok[moving] = ~stepper.bad
    return out, ok
