"""Embedded Dormand-Prince 5(4) integrator with PI step-size control.

Propagates the 5th-order solution; the embedded 4th-order result supplies
the local error estimate.  The controller is the standard proportional-
integral rule (exponents 0.7/5 and 0.4/5 with safety 0.9), which damps the
step-size oscillation a pure I controller shows on oscillatory right-hand
sides.  Steps are clamped so that every requested output time is hit as a
step endpoint exactly; no dense interpolation error enters the samples.

State vectors are complex; the error norm uses component magnitudes.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import IntegrationError, ValidationError

# Dormand-Prince coefficients
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
_ALPHA = 0.7 / 5.0  # proportional exponent
_BETA = 0.4 / 5.0  # integral exponent
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_MAX_STEPS = 20_000_000


@dataclass
class SolveResult:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), dim)
    n_steps: int
    n_rejected: int
    n_rhs: int


def solve(rhs, t_span, y0, rtol, atol, max_step=math.inf, t_eval=None,
          max_step_fn=None):
    """Integrate dy/dt = rhs(t, y) from t_span[0] to t_span[1].

    ``t_eval`` lists the times at which the solution is recorded (defaults
    to the accepted step points).  ``max_step_fn(t, y)``, when given, sets
    an additional state-dependent step ceiling, used to keep oscillatory
    phases resolved where their local rate varies along the solution.
    Raises :class:`IntegrationError` on step-size underflow, reporting the
    failing time.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValidationError("t_span must be increasing")
    y = np.asarray(y0, dtype=complex).copy()
    dim = y.size
    span = t1 - t0

    if t_eval is None:
        eval_ts = None
        out_t, out_y = [t0], [y.copy()]
    else:
        eval_ts = np.asarray(t_eval, dtype=float)
        if eval_ts.ndim != 1 or np.any(np.diff(eval_ts) <= 0):
            raise ValidationError("t_eval must be strictly increasing")
        slack = 1e-12 * span
        if eval_ts[0] < t0 - slack or eval_ts[-1] > t1 + slack:
            raise ValidationError("t_eval must lie within t_span")
        out_t, out_y = [], []

    def record(t_now, y_now):
        out_t.append(t_now)
        out_y.append(y_now.copy())

    next_eval = 0
    if eval_ts is not None:
        while next_eval < eval_ts.size and eval_ts[next_eval] <= t0 + 1e-12 * span:
            record(t0, y)
            next_eval += 1

    t = t0
    k = np.empty((7, dim), dtype=complex)
    k[0] = rhs(t, y)
    n_rhs = 1
    h_prop = min(max_step, span / 100.0, span)
    err_prev = 1e-4
    n_steps = 0
    n_rejected = 0

    while t < t1 - 1e-14 * span:
        if n_steps + n_rejected > _MAX_STEPS:
            raise IntegrationError(f"step budget exhausted at t={t:g}", t=t)
        h_nat = min(h_prop, max_step)
        if max_step_fn is not None:
            h_nat = min(h_nat, max_step_fn(t, y))
        h = min(h_nat, t1 - t)
        hit_eval = False
        if eval_ts is not None and next_eval < eval_ts.size:
            gap = eval_ts[next_eval] - t
            if gap <= h * (1 + 1e-12):
                h = gap
                hit_eval = True
        clipped = h < h_nat * (1.0 - 1e-12)
        if h < 16.0 * np.finfo(float).eps * max(abs(t), 1.0):
            raise IntegrationError(f"step size underflow at t={t:g}", t=t)

        for i in range(1, 7):
            yi = y + h * (_A[i] @ k[:i])
            k[i] = rhs(t + _C[i] * h, yi)
        n_rhs += 6
        y_new = y + h * (_B5 @ k)
        err_vec = h * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            err = math.sqrt(float(np.mean(np.abs(err_vec / scale) ** 2)))
        if math.isnan(err):
            err = math.inf

        if err <= 1.0 or h <= 16.0 * np.finfo(float).eps * max(abs(t), 1.0):
            t_new = t + h
            if hit_eval:
                t_new = eval_ts[next_eval]
            y = y_new
            t = t_new
            k[0] = k[6]  # FSAL
            n_steps += 1
            if eval_ts is None:
                record(t, y)
            elif hit_eval:
                record(t, y)
                next_eval += 1
                while (
                    next_eval < eval_ts.size
                    and eval_ts[next_eval] <= t + 1e-12 * span
                ):
                    record(t, y)
                    next_eval += 1
            err = max(err, 1e-10)
            fac = _SAFETY * err ** (-_ALPHA) * err_prev ** _BETA
            h_new = h * min(_FAC_MAX, max(_FAC_MIN, fac))
            # a step shortened only to land on an output time must not
            # drag the controller down with it
            h_prop = max(h_new, h_nat) if clipped else h_new
            err_prev = err
        else:
            n_rejected += 1
            # k[0] still holds rhs(t, y); only stages 1..6 were trial values
            fac = max(0.1, _SAFETY * err ** (-0.2))
            h_prop = h * fac

    if eval_ts is None and out_t[-1] < t1:
        record(t, y)

    return SolveResult(
        t=np.asarray(out_t),
        y=np.asarray(out_y),
        n_steps=n_steps,
        n_rejected=n_rejected,
        n_rhs=n_rhs,
    )
