"""Dense-output ODE integration and small-matrix exponentials.

Two standalone numerical kernels used by the dynamics engine:

* ``integrate_adaptive`` -- explicit embedded Dormand-Prince 5(4) pair with
  PI-free step control, stepping exactly onto every requested output time.
* ``expm`` -- Pade approximation with scaling and squaring, with the usual
  degree selection for double precision.

Both are written for small dense systems (the package never integrates
anything larger than 6x6).
"""
from __future__ import annotations

import math

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator cannot continue (step underflow)."""


# DORMAND-PRINCE 5(4) TABLEAU ==========================================
# seven stages, FSAL; 5th order solution propagated, 4th order embedded
# estimate used for error control.

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

# 5th order weights (identical to the last A row: FSAL)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])

# difference between 5th and 4th order weights -> local error estimate
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920,
    -17253 / 339200, 22 / 525, -1 / 40,
])

_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_SAFETY = 0.9
_ORDER_EXPONENT = -0.2  # 1 / (error estimator order)


def _rms_norm(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.square(x))))


def _initial_step(f, t0, y0, f0, rtol, atol, t_bound):
    # Hairer/Norsett/Wanner starting-step heuristic.
    scale = atol + rtol * np.abs(y0)
    d0 = _rms_norm(y0 / scale)
    d1 = _rms_norm(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = _rms_norm((f1 - f0) / scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_bound - t0)


def integrate_adaptive(f, y0, times, rtol: float = 1e-10, atol: float = 1e-10,
                       max_step: float = math.inf,
                       min_step: float | None = None) -> np.ndarray:
    """Integrate ``dy/dt = f(t, y)`` and return y at each requested time.

    ``times`` must be strictly increasing; ``times[0]`` is the initial time.
    Steps are capped so the solver lands exactly on every output time (no
    interpolation error enters the returned values).

    Raises :class:`IntegrationError` if error control drives the step size
    below ``min_step`` (default: a few ulps of the current time).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D array")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")

    y = np.array(y0, dtype=float)
    n = y.size
    out = np.empty((times.size, n))
    out[0] = y
    if times.size == 1:
        return out

    t = float(times[0])
    t_end = float(times[-1])
    k = np.empty((7, n))
    k[0] = f(t, y)
    h = min(_initial_step(f, t, y, k[0], rtol, atol, t_end), max_step)

    next_out = 1
    while next_out < times.size:
        if min_step is not None:
            floor = min_step
        else:
            floor = 16 * np.finfo(float).eps * max(abs(t), 1.0)
        if h < floor:
            raise IntegrationError(
                f"step size underflow at t={t:.6g} (h={h:.3g} < {floor:.3g})")

        t_target = float(times[next_out])
        h_step = min(h, max_step, t_target - t)
        capped = h_step < h

        # stage evaluations
        for i in range(1, 7):
            dy = _A[i] @ k[:i]
            k[i] = f(t + _C[i] * h_step, y + h_step * dy)
        y_new = y + h_step * (_B @ k)
        err_vec = h_step * (_E @ k)

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms_norm(err_vec / scale)

        if err <= 1.0:
            # land exactly on the output time when the step was capped to it
            t = t_target if capped or h_step == t_target - t else t + h_step
            y = y_new
            k[0] = k[6]  # FSAL
            if t >= t_target:
                out[next_out] = y
                next_out += 1
            factor = _MAX_FACTOR if err == 0.0 else min(
                _MAX_FACTOR, _SAFETY * err ** _ORDER_EXPONENT)
            if not capped:
                h = h_step * factor
            else:
                h = max(h, h_step * factor)
        else:
            h = h_step * max(_MIN_FACTOR, _SAFETY * err ** _ORDER_EXPONENT)

    return out


# MATRIX EXPONENTIAL ===================================================
# Pade-based expm with scaling and squaring; degree picked from the
# 1-norm thresholds for double precision (3/5/7/9/13).

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}

_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_uv(a: np.ndarray, degree: int):
    # U (odd powers) and V (even powers) of the [m/m] Pade approximant.
    b = _PADE_COEFFS[degree]
    eye = np.eye(a.shape[0], dtype=a.dtype)
    a2 = a @ a
    if degree == 13:
        a4 = a2 @ a2
        a6 = a4 @ a2
        u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
                 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * eye)
        v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
             + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * eye)
        return u, v
    powers = [eye, a2]
    while 2 * len(powers) < degree + 1:
        powers.append(powers[-1] @ a2)
    u_poly = sum(b[2 * i + 1] * powers[i] for i in range((degree + 1) // 2))
    v_poly = sum(b[2 * i] * powers[i] for i in range((degree + 1) // 2))
    return a @ u_poly, v_poly


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential of a small dense square matrix."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expm expects a square matrix")
    a = a.astype(np.promote_types(a.dtype, np.float64), copy=True)

    norm = float(np.linalg.norm(a, 1))
    if norm == 0.0:
        return np.eye(a.shape[0], dtype=a.dtype)

    for degree in (3, 5, 7, 9):
        if norm <= _PADE_THETA[degree]:
            u, v = _pade_uv(a, degree)
            return np.linalg.solve(v - u, v + u)

    squarings = max(0, int(math.ceil(math.log2(norm / _PADE_THETA[13]))))
    u, v = _pade_uv(a / (2.0 ** squarings), 13)
    result = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        result = result @ result
    return result
