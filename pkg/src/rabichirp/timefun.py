"""Scalar functions of time.

One immutable type carries every time-dependent ingredient of a run: pulse
envelope, chirp, level splitting and the three dipole functions.  Four
representations are supported:

* ``constant``  -- fixed value
* ``gaussian``  -- height * exp(-(t-center)^2 / (2 width^2))
* ``sin2``      -- height * sin^2(pi (t-start)/duration) inside its support,
                   exactly zero outside
* ``table``     -- samples on a strictly increasing grid, interpolated with
                   order 1 (piecewise linear) or order 3 (cubic spline,
                   not-a-knot ends)

Analytic kinds are defined for all t; tabulated functions refuse to
extrapolate.  Evaluation is pure and deterministic.
"""

import math

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, ValidationError

_KINDS = ("constant", "gaussian", "sin2", "table")


class TimeFunction:
    """Immutable scalar function of time with an analytic derivative."""

    __slots__ = ("kind", "params", "_lo", "_hi", "_pp", "_dpp", "_slopes")

    def __init__(self, kind, params):
        if kind not in _KINDS:
            raise ValidationError(f"unknown time-function kind {kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "params", dict(params))
        object.__setattr__(self, "_pp", None)
        object.__setattr__(self, "_dpp", None)
        object.__setattr__(self, "_slopes", None)
        lo, hi = -math.inf, math.inf
        p = self.params
        if kind == "constant":
            self._require_finite(p, "value")
        elif kind == "gaussian":
            self._require_finite(p, "center", "width", "height")
            if p["width"] <= 0:
                raise ValidationError("gaussian width must be positive")
        elif kind == "sin2":
            self._require_finite(p, "start", "duration", "height")
            if p["duration"] <= 0:
                raise ValidationError("sin2 duration must be positive")
        else:
            times = np.asarray(p["times"], dtype=float)
            values = np.asarray(p["values"], dtype=float)
            order = int(p.get("order", 3))
            if times.ndim != 1 or times.size < 2 or times.shape != values.shape:
                raise ValidationError(
                    "tabulated function needs >= 2 samples with matching shapes"
                )
            if not (np.isfinite(times).all() and np.isfinite(values).all()):
                raise ValidationError("tabulated samples must be finite")
            if np.any(np.diff(times) <= 0):
                raise ValidationError("tabulated sample times must be strictly increasing")
            if order not in (1, 3):
                raise ValidationError("interpolation order must be 1 or 3")
            if order == 3 and times.size < 4:
                raise ValidationError("cubic interpolation needs >= 4 samples")
            times.setflags(write=False)
            values.setflags(write=False)
            self.params["times"] = times
            self.params["values"] = values
            self.params["order"] = order
            lo, hi = float(times[0]), float(times[-1])
            if order == 3:
                pp = CubicSpline(times, values)  # not-a-knot ends
                object.__setattr__(self, "_pp", pp)
                object.__setattr__(self, "_dpp", pp.derivative())
            else:
                object.__setattr__(
                    self, "_slopes", np.diff(values) / np.diff(times)
                )
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    @staticmethod
    def _require_finite(params, *keys):
        for k in keys:
            if k not in params or not math.isfinite(float(params[k])):
                raise ValidationError(f"parameter {k!r} missing or not finite")

    # -- constructors ----------------------------------------------------

    @classmethod
    def constant(cls, value):
        return cls("constant", {"value": float(value)})

    @classmethod
    def gaussian(cls, center, width, height):
        return cls(
            "gaussian",
            {"center": float(center), "width": float(width), "height": float(height)},
        )

    @classmethod
    def sin_squared(cls, start, duration, height):
        return cls(
            "sin2",
            {"start": float(start), "duration": float(duration), "height": float(height)},
        )

    @classmethod
    def tabulated(cls, times, values, order=3):
        return cls("table", {"times": times, "values": values, "order": order})

    # -- evaluation ------------------------------------------------------

    @property
    def domain(self):
        return (self._lo, self._hi)

    def _check_scalar(self, t):
        if self.kind != "table":
            return
        slack = 1e-9 * (self._hi - self._lo)
        if t < self._lo - slack or t > self._hi + slack:
            raise DomainError(
                f"t={t!r} outside tabulated domain [{self._lo}, {self._hi}]"
            )

    def _check_array(self, t):
        if self.kind != "table":
            return
        slack = 1e-9 * (self._hi - self._lo)
        if t.size and (t.min() < self._lo - slack or t.max() > self._hi + slack):
            raise DomainError(
                f"samples outside tabulated domain [{self._lo}, {self._hi}]"
            )

    def __call__(self, t):
        t = float(t)
        self._check_scalar(t)
        p = self.params
        if self.kind == "constant":
            return p["value"]
        if self.kind == "gaussian":
            u = (t - p["center"]) / p["width"]
            return p["height"] * math.exp(-0.5 * u * u)
        if self.kind == "sin2":
            u = (t - p["start"]) / p["duration"]
            if u <= 0.0 or u >= 1.0:
                return 0.0
            s = math.sin(math.pi * u)
            return p["height"] * s * s
        if self._pp is not None:
            return float(self._pp(t))
        times = p["times"]
        i = min(max(np.searchsorted(times, t) - 1, 0), times.size - 2)
        return float(p["values"][i] + self._slopes[i] * (t - times[i]))

    def sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        self._check_array(ts)
        p = self.params
        if self.kind == "constant":
            return np.full(ts.shape, p["value"])
        if self.kind == "gaussian":
            u = (ts - p["center"]) / p["width"]
            return p["height"] * np.exp(-0.5 * u * u)
        if self.kind == "sin2":
            u = (ts - p["start"]) / p["duration"]
            out = np.where(
                (u > 0.0) & (u < 1.0), p["height"] * np.sin(np.pi * u) ** 2, 0.0
            )
            return out
        if self._pp is not None:
            return self._pp(ts)
        return np.interp(ts, p["times"], p["values"])

    def derivative(self, t):
        t = float(t)
        self._check_scalar(t)
        p = self.params
        if self.kind == "constant":
            return 0.0
        if self.kind == "gaussian":
            u = (t - p["center"]) / p["width"]
            return -p["height"] * u / p["width"] * math.exp(-0.5 * u * u)
        if self.kind == "sin2":
            u = (t - p["start"]) / p["duration"]
            if u <= 0.0 or u >= 1.0:
                return 0.0
            return p["height"] * math.pi / p["duration"] * math.sin(2.0 * math.pi * u)
        if self._dpp is not None:
            return float(self._dpp(t))
        times = p["times"]
        i = min(max(np.searchsorted(times, t) - 1, 0), times.size - 2)
        return float(self._slopes[i])

    def derivative_sample(self, ts):
        ts = np.asarray(ts, dtype=float)
        self._check_array(ts)
        p = self.params
        if self.kind == "constant":
            return np.zeros(ts.shape)
        if self.kind == "gaussian":
            u = (ts - p["center"]) / p["width"]
            return -p["height"] * u / p["width"] * np.exp(-0.5 * u * u)
        if self.kind == "sin2":
            u = (ts - p["start"]) / p["duration"]
            return np.where(
                (u > 0.0) & (u < 1.0),
                p["height"] * np.pi / p["duration"] * np.sin(2.0 * np.pi * u),
                0.0,
            )
        if self._dpp is not None:
            return self._dpp(ts)
        times = p["times"]
        i = np.clip(np.searchsorted(times, ts) - 1, 0, times.size - 2)
        return self._slopes[i]

    def fast_eval(self):
        """Scalar evaluator closure without domain checks (hot loops only).

        Callers must keep t inside the domain themselves; the propagators
        clamp to the pulse window before evaluating.
        """
        p = self.params
        if self.kind == "constant":
            v = p["value"]
            return lambda t: v
        if self.kind == "gaussian":
            c, w, hgt = p["center"], p["width"], p["height"]
            exp = math.exp
            return lambda t: hgt * exp(-0.5 * ((t - c) / w) ** 2)
        if self.kind == "sin2":
            t0, d, hgt = p["start"], p["duration"], p["height"]
            sin, pi = math.sin, math.pi
            def _sin2(t):
                u = (t - t0) / d
                if u <= 0.0 or u >= 1.0:
                    return 0.0
                s = sin(pi * u)
                return hgt * s * s
            return _sin2
        if self._pp is not None:
            pp = self._pp
            return lambda t: float(pp(t))
        return self.__call__

    def fast_derivative(self):
        """Scalar derivative closure without domain checks (hot loops only)."""
        p = self.params
        if self.kind == "constant":
            return lambda t: 0.0
        if self.kind == "gaussian":
            c, w, hgt = p["center"], p["width"], p["height"]
            exp = math.exp
            return lambda t: -hgt * (t - c) / (w * w) * exp(-0.5 * ((t - c) / w) ** 2)
        if self.kind == "sin2":
            t0, d, hgt = p["start"], p["duration"], p["height"]
            sin, pi = math.sin, math.pi
            def _dsin2(t):
                u = (t - t0) / d
                if u <= 0.0 or u >= 1.0:
                    return 0.0
                return hgt * pi / d * sin(2.0 * pi * u)
            return _dsin2
        if self._dpp is not None:
            dpp = self._dpp
            return lambda t: float(dpp(t))
        return self.derivative

    # -- misc --------------------------------------------------------------

    def scaled(self, factor):
        """Same shape with values multiplied by ``factor``."""
        factor = float(factor)
        p = self.params
        if self.kind == "constant":
            return TimeFunction.constant(p["value"] * factor)
        if self.kind == "gaussian":
            return TimeFunction.gaussian(p["center"], p["width"], p["height"] * factor)
        if self.kind == "sin2":
            return TimeFunction.sin_squared(
                p["start"], p["duration"], p["height"] * factor
            )
        return TimeFunction.tabulated(p["times"], p["values"] * factor, p["order"])

    def covers(self, t_lo, t_hi):
        slack = 0.0 if self.kind != "table" else 1e-9 * (self._hi - self._lo)
        return self._lo - slack <= t_lo and t_hi <= self._hi + slack

    def __eq__(self, other):
        if not isinstance(other, TimeFunction) or self.kind != other.kind:
            return NotImplemented if not isinstance(other, TimeFunction) else False
        if self.kind != "table":
            return self.params == other.params
        return (
            self.params["order"] == other.params["order"]
            and np.array_equal(self.params["times"], other.params["times"])
            and np.array_equal(self.params["values"], other.params["values"])
        )

    def __repr__(self):
        if self.kind == "table":
            return (
                f"TimeFunction(table, n={self.params['times'].size}, "
                f"order={self.params['order']})"
            )
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params.items())
        return f"TimeFunction({self.kind}, {inner})"
