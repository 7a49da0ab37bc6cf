"""Explicit Runge-Kutta propagators for autonomous linear ODEs on arrays.

Both methods return the state exactly at each requested output time: the
adaptive stepper shortens the step that would overshoot the next output
instead of interpolating across it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


class IntegrationError(RuntimeError):
    def __init__(self, message: str, t: float = float("nan"), step: float = float("nan"), n_steps: int = 0):
        super().__init__(f"{message} (t={t:.6g}, h={step:.3g}, steps={n_steps})")
        self.t = t
        self.step = step
        self.n_steps = n_steps


@dataclass(frozen=True)
class IntegratorConfig:
    method: Literal["dopri5", "rk4"] = "dopri5"
    rtol: float = 1e-8
    atol: float = 1e-11
    dt: float = 0.01
    max_step: float = np.inf
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("dopri5", "rk4"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.dt > 0 or not self.max_step > 0:
            raise ValueError("dt and max_step must be positive")


@dataclass
class IntegrationStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0


def _check_times(t0: float, times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("need a non-empty 1-D array of output times")
    if times[0] < t0 or np.any(np.diff(times) <= 0):
        raise ValueError("output times must be strictly increasing and start at or after t0")
    return times


def propagate(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    times,
    config: IntegratorConfig = IntegratorConfig(),
    t0: float = 0.0,
    post_step: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    stats: Optional[IntegrationStats] = None,
) -> np.ndarray:
    """Integrate ``dy/dt = f(y)`` from ``(t0, y0)`` and return ``y`` at every entry of ``times``.

    ``post_step`` is applied to the state after each accepted step (used to
    re-symmetrize density matrices). The result has shape ``(len(times),) + y0.shape``.
    """
    times = _check_times(t0, times)
    stats = stats if stats is not None else IntegrationStats()
    if config.method == "rk4":
        return _rk4(f, np.array(y0), times, config, t0, post_step, stats)
    return _dopri5(f, np.array(y0), times, config, t0, post_step, stats)


def _error_norm(err, abs_y, y_new, config):
    scale = np.maximum(abs_y, np.abs(y_new))
    scale *= config.rtol
    scale += config.atol
    with np.errstate(invalid="ignore", over="ignore"):
        return float(np.max(np.abs(err) / scale))


def _initial_step(f, y, f0, config):
    # Hairer, Norsett & Wanner, algorithm II.4.14 with order 5
    scale = config.atol + config.rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(y + h0 * f0)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, config.max_step)


def _dopri5(f, y, times, config, t0, post_step, stats):
    shape = y.shape
    dtype = np.result_type(y, complex)
    out = np.empty((len(times),) + shape, dtype=dtype)
    y = y.astype(dtype).ravel()
    # stage derivatives stacked as rows, so each stage combination is one gemv
    K = np.empty((7, y.size), dtype=dtype)
    # real coefficients against the float view skip a complex promotion of each row
    K_flat = K.view(np.float64)
    rows = [np.array(r) for r in _A]
    incr = np.empty(K_flat.shape[1])

    def rhs(v):
        return f(v.reshape(shape)).ravel()

    def finish(v):
        return post_step(v.reshape(shape)).ravel() if post_step is not None else v

    t = t0
    K[0] = rhs(y)
    abs_y = np.abs(y)
    h = _initial_step(rhs, y, K[0], config)
    stats.evaluations += 2
    n_steps = 0
    for i, t_out in enumerate(times):
        while t < t_out:
            if n_steps >= config.max_steps:
                raise IntegrationError("maximum number of steps exceeded", t, h, n_steps)
            if h < 1e-14 * max(1.0, abs(t)):
                raise IntegrationError("step size underflow", t, h, n_steps)
            landing = t + h >= t_out
            h_try = t_out - t if landing else h
            for s in range(1, 7):
                np.dot(h_try * rows[s], K_flat[:s], out=incr)
                stage = y + incr.view(dtype)
                K[s] = rhs(stage)
            stats.evaluations += 6
            y_new = stage  # the last stage sits at the 5th-order solution (FSAL)
            err = ((h_try * _E) @ K_flat).view(dtype)
            norm = _error_norm(err, abs_y, y_new, config)
            n_steps += 1
            if not np.isfinite(norm):
                raise IntegrationError("non-finite error estimate", t, h_try, n_steps)
            if norm <= 1.0:
                t = t_out if landing else t + h_try
                y = finish(y_new)
                abs_y = np.abs(y)
                K[0] = K[6]
                stats.accepted += 1
                factor = _MAX_FACTOR if norm == 0 else min(_MAX_FACTOR, _SAFETY * norm ** -0.2)
                # a landing step is artificially short; do not let it shrink the next one
                h = min(max(h, h_try * factor) if landing else h_try * factor, config.max_step)
            else:
                stats.rejected += 1
                h = h_try * max(_MIN_FACTOR, _SAFETY * norm ** -0.2)
        out[i] = y.reshape(shape)
    return out


def _rk4(f, y, times, config, t0, post_step, stats):
    out = np.empty((len(times),) + y.shape, dtype=np.result_type(y, complex))
    t = t0
    for i, t_out in enumerate(times):
        span = t_out - t
        n = int(np.ceil(span / config.dt - 1e-9)) if span > 0 else 0
        if n > config.max_steps:
            raise IntegrationError("maximum number of steps exceeded", t, config.dt, n)
        h = span / n if n else 0.0
        for _ in range(n):
            k1 = f(y)
            k2 = f(y + 0.5 * h * k1)
            k3 = f(y + 0.5 * h * k2)
            k4 = f(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if post_step is not None:
                y = post_step(y)
            stats.evaluations += 4
            stats.accepted += 1
        t = t_out
        out[i] = y
    return out
