"""Adaptive Dormand-Prince 5(4) stepper with dense output.

The Butcher tableau, error weights and interpolation polynomial come from
:class:`scipy.integrate.RK45`. The stepping loop is our own because the
engines need to intervene between accepted steps: trajectories locate jump
times on the interpolant and mean-field runs refresh their expectation
values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
_ERR_EXP = -1.0 / 5.0


class StepSizeUnderflow(RuntimeError):
    pass


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0

    def as_dict(self) -> dict:
        return {"accepted": self.accepted, "rejected": self.rejected,
                "evaluations": self.evaluations}


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


class DormandPrince:
    """Integrates ``dy/dt = fun(t, y)`` one accepted step at a time.

    After :meth:`step` the interval ``[t_old, t]`` is covered by :meth:`dense`.
    :meth:`reset` restarts from a modified state (after a jump or a
    renormalisation) while keeping the current step size.
    """

    A = RK45.A
    B = RK45.B
    C = RK45.C
    E = RK45.E
    P = RK45.P
    n_stages = RK45.n_stages

    def __init__(self, fun, t0: float, y0: np.ndarray, *, rtol: float = 1e-8,
                 atol: float = 1e-10, first_step: float | None = None,
                 max_step: float = np.inf, min_step: float = 1e-14):
        self.fun = fun
        self.rtol = float(rtol)
        self.atol = float(atol)
        self.max_step = float(max_step)
        self.min_step = float(min_step)
        self.stats = StepStats()
        self.t = float(t0)
        self.y = np.array(y0, dtype=np.complex128)
        self.f = self._eval(self.t, self.y)
        self.h = first_step if first_step is not None else self._initial_step()
        self.t_old = self.t
        self.y_old = self.y.copy()
        self._K = np.zeros((self.n_stages + 1, self.y.size), dtype=np.complex128)

    def _eval(self, t, y):
        self.stats.evaluations += 1
        return self.fun(t, y)

    def _initial_step(self) -> float:
        scale = self.atol + np.abs(self.y) * self.rtol
        d0 = _rms(self.y / scale)
        d1 = _rms(self.f / scale)
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        return min(h0, self.max_step)

    def reset(self, t: float, y: np.ndarray) -> None:
        self.t = float(t)
        self.y = np.array(y, dtype=np.complex128)
        self.f = self._eval(self.t, self.y)

    def _attempt(self, h):
        K = self._K
        K[0] = self.f
        for s in range(1, self.n_stages):
            dy = (self.A[s, :s] @ K[:s]) * h
            K[s] = self._eval(self.t + self.C[s] * h, self.y + dy)
        y_new = self.y + h * (self.B @ K[: self.n_stages])
        f_new = self._eval(self.t + h, y_new)
        K[-1] = f_new
        err = h * (self.E @ K)
        scale = self.atol + np.maximum(np.abs(self.y), np.abs(y_new)) * self.rtol
        return y_new, f_new, _rms(err / scale)

    def step(self, t_max: float) -> float:
        """Take one accepted step, never past ``t_max``; returns the new time."""
        if t_max <= self.t:
            raise ValueError("t_max must lie ahead of the current time")
        h = min(self.h, self.max_step)
        while True:
            clipped = h >= t_max - self.t
            if clipped:
                h = t_max - self.t
            if h < self.min_step and not clipped:
                raise StepSizeUnderflow(f"step size {h:.3g} below {self.min_step:.3g} "
                                        f"at t = {self.t:.6g}")
            y_new, f_new, err = self._attempt(h)
            if err <= 1.0:
                factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err**_ERR_EXP)
                self.t_old, self.y_old = self.t, self.y
                self.t = t_max if clipped else self.t + h
                self.y, self.f = y_new, f_new
                self._h_last = h
                self._Q = self._K.T @ self.P
                # do not let a short clipped step shrink the next proposal
                self.h = max(self.h, h) if clipped else h * factor
                self.stats.accepted += 1
                return self.t
            self.stats.rejected += 1
            h *= max(MIN_FACTOR, SAFETY * err**_ERR_EXP)

    def dense(self, t: float) -> np.ndarray:
        """Fourth-order interpolant on the last accepted step."""
        x = (t - self.t_old) / self._h_last
        powers = np.cumprod(np.full(self.P.shape[1], x))
        return self.y_old + self._h_last * (self._Q @ powers)


def integrate_to(stepper: DormandPrince, t_end: float, on_step=None) -> None:
    """Advance to ``t_end``; ``on_step(stepper)`` runs after every accepted step."""
    while stepper.t < t_end:
        stepper.step(t_end)
        if on_step is not None:
            on_step(stepper)
