"""Complex-vector ODE integrators: fixed-step RK4 and adaptive Dormand-Prince 5(4).

Both integrators land exactly on the requested output grid (steps are clipped
to grid points, no dense interpolation), which keeps runs bit-reproducible.
An optional ``postprocess(i, t, y)`` hook runs at every output point and may
return a replacement state vector (used for trace renormalization).
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import EvolutionError

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(x) ** 2)))


def _initial_step(f, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 * span if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0 if h0 > 0 else 0.0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6 * span, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def integrate_adaptive(
    f: Callable[[float, np.ndarray], np.ndarray],
    times: np.ndarray,
    y0: np.ndarray,
    rtol: float,
    atol: float,
    postprocess: Callable[[int, float, np.ndarray], np.ndarray | None] | None = None,
    max_steps: int = 50_000_000,
) -> np.ndarray:
    """Integrate dy/dt = f(t, y) through every point of `times` (DP 5(4))."""
    times = np.asarray(times, dtype=float)
    y = np.array(y0, dtype=complex).reshape(-1)
    out = np.empty((times.size, y.size), dtype=complex)
    out[0] = y
    if postprocess is not None:
        replaced = postprocess(0, times[0], y)
        if replaced is not None:
            y = np.asarray(replaced, dtype=complex)
            out[0] = y

    span = float(times[-1] - times[0])
    t = float(times[0])
    k1 = f(t, y)
    h = _initial_step(f, t, y, k1, rtol, atol, span)
    h_floor = 1e-14 * max(abs(times[0]), abs(times[-1]), span)
    steps = 0
    k = [None] * 7

    for i in range(1, times.size):
        t_target = float(times[i])
        while t_target - t > h_floor:
            h_try = min(h, t_target - t)
            k[0] = k1
            for s in range(1, 7):
                acc = k[0] * _A[s][0]
                for j in range(1, s):
                    acc = acc + k[j] * _A[s][j]
                k[s] = f(t + _C[s] * h_try, y + h_try * acc)
            y_new = y + h_try * (
                k[0] * _B5[0] + k[2] * _B5[2] + k[3] * _B5[3]
                + k[4] * _B5[4] + k[5] * _B5[5]
            )
            err_vec = h_try * (
                k[0] * _E[0] + k[2] * _E[2] + k[3] * _E[3]
                + k[4] * _E[4] + k[5] * _E[5] + k[6] * _E[6]
            )
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms(err_vec / scale)

            steps += 1
            if steps > max_steps:
                raise EvolutionError(f"adaptive integrator exceeded {max_steps} steps")

            if err <= 1.0:
                t = t + h_try
                y = y_new
                k1 = k[6]  # FSAL
                if not np.all(np.isfinite(y.view(float))):
                    raise EvolutionError(f"non-finite state at t = {t:.6e}")
                factor = _MAX_FACTOR if err == 0 else min(
                    _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2)
                )
                h = h_try * factor
            else:
                factor = max(_MIN_FACTOR, _SAFETY * err ** -0.2)
                h = h_try * factor
                if h < h_floor:
                    raise EvolutionError(
                        f"step rejection floor reached at t = {t:.6e} (h = {h:.3e})"
                    )
        out[i] = y
        if postprocess is not None:
            replaced = postprocess(i, t_target, y)
            if replaced is not None:
                y = np.asarray(replaced, dtype=complex)
                out[i] = y
                k1 = f(t, y)
    return out


def integrate_fixed_rk4(
    f: Callable[[float, np.ndarray], np.ndarray],
    times: np.ndarray,
    y0: np.ndarray,
    postprocess: Callable[[int, float, np.ndarray], np.ndarray | None] | None = None,
) -> np.ndarray:
    """Classic RK4 with one step per grid interval."""
    times = np.asarray(times, dtype=float)
    y = np.array(y0, dtype=complex).reshape(-1)
    out = np.empty((times.size, y.size), dtype=complex)
    out[0] = y
    if postprocess is not None:
        replaced = postprocess(0, times[0], y)
        if replaced is not None:
            y = np.asarray(replaced, dtype=complex)
            out[0] = y

    for i in range(1, times.size):
        t0, t1 = float(times[i - 1]), float(times[i])
        h = t1 - t0
        k1 = f(t0, y)
        k2 = f(t0 + h / 2, y + (h / 2) * k1)
        k3 = f(t0 + h / 2, y + (h / 2) * k2)
        k4 = f(t1, y + h * k3)
        y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y.view(float))):
            raise EvolutionError(f"non-finite state at t = {t1:.6e}")
        out[i] = y
        if postprocess is not None:
            replaced = postprocess(i, t1, y)
            if replaced is not None:
                y = np.asarray(replaced, dtype=complex)
                out[i] = y
    return out
