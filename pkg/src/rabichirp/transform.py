"""Warped time coordinate and the shorthands built on it.

The warped time tau absorbs the instantaneous coupling strength,

    dtau/dt = (F0 m(t) w(t) / 2) * mu_ab(t) / omega_ab(t),

so that on resonance the transfer phase accumulates linearly in tau and a
complete population flip corresponds to tau = pi/2.  The map is built once
by composite quadrature on a uniform grid and inverted by root bracketing
on its own interpolant, which keeps round trips consistent by construction.

Also defined here: the sum/difference detunings  w(t) +/- omega_ab(t)  and
the diagonal drive terms

    f_i(t) = 2 (mu_ii / mu_ab) omega_ab t sin(w t),    i = alpha, beta,

which the warped-frame propagators place on the diagonal.  All factors are
evaluated at lab time; composition with t(tau) happens at the call sites.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    AmbiguousTauError,
    DegenerateCouplingError,
    DomainError,
    LevelCrossingError,
    OrientationError,
    ValidationError,
)
from .quadrature import cumulative_simpson_uniform

# carrier-resolution rule: at least this many grid points per carrier period
_POINTS_PER_PERIOD = 40
_N_GRID_MIN = 1001
_N_GRID_MAX = 400_001


@dataclass(frozen=True)
class Detunings:
    """Sum and difference of carrier frequency and level splitting."""

    delta_plus: float
    delta_minus: float


def detunings(model, pulse, t):
    """Detunings (w + omega_ab, w - omega_ab) at lab time t."""
    pulse._check_window(t)
    w = pulse.require_chirp()(float(t))
    wab = model.omega_ab(float(t))
    return Detunings(w + wab, w - wab)


def f_diagonal(model, pulse, t, level):
    """Diagonal drive term 2 (mu_ii/mu_ab) omega_ab t sin(w t) at lab time t."""
    pulse._check_window(t)
    t = float(t)
    mu_ab = model.mu_ab(t)
    if mu_ab == 0.0:
        raise DegenerateCouplingError(f"mu_ab vanishes at t={t:g}")
    mu_ii = _diagonal_dipole(model, level)(t)
    wab = model.omega_ab(t)
    return 2.0 * (mu_ii / mu_ab) * wab * t * math.sin(pulse.require_chirp()(t) * t)


def f_diagonal_samples(model, pulse, ts, level):
    """Vectorized :func:`f_diagonal`."""
    ts = np.asarray(ts, dtype=float)
    pulse._check_window(ts)
    mu_ab = model.mu_ab.sample(ts)
    if np.any(mu_ab == 0.0):
        raise DegenerateCouplingError("mu_ab vanishes on the sample grid")
    mu_ii = _diagonal_dipole(model, level).sample(ts)
    wab = model.omega_ab.sample(ts)
    return 2.0 * (mu_ii / mu_ab) * wab * ts * np.sin(
        pulse.require_chirp().sample(ts) * ts
    )


def _diagonal_dipole(model, level):
    if level in ("alpha", "a"):
        return model.mu_aa
    if level in ("beta", "b"):
        return model.mu_bb
    raise ValidationError(f"level must be 'alpha' or 'beta', got {level!r}")


def warp_rate_samples(model, pulse, ts):
    """dtau/dt on a sample grid; validates positivity of the splitting."""
    ts = np.asarray(ts, dtype=float)
    wab = model.omega_ab.sample(ts)
    if wab.min() <= 0.0:
        t_bad = ts[int(np.argmin(wab))]
        raise LevelCrossingError(f"omega_ab not positive near t={t_bad:g}")
    w = pulse.require_chirp().sample(ts)
    m = pulse.envelope.sample(ts)
    mu = model.mu_ab.sample(ts)
    return 0.5 * pulse.f0 * m * w * mu / wab


class TauMap:
    """Monotone map between lab time and warped time on a fixed grid."""

    def __init__(self, t_grid, tau_grid, order=3, richardson_error=0.0):
        t_grid = np.asarray(t_grid, dtype=float)
        tau_grid = np.asarray(tau_grid, dtype=float)
        if t_grid.ndim != 1 or t_grid.size < 2 or t_grid.shape != tau_grid.shape:
            raise ValidationError("warp grids need >= 2 matching samples")
        if np.any(np.diff(t_grid) <= 0):
            raise ValidationError("t_grid must be strictly increasing")
        if np.any(np.diff(tau_grid) < 0):
            raise ValidationError("tau_grid must be nondecreasing")
        if tau_grid[0] != 0.0:
            raise ValidationError("tau_grid must start at 0")
        if order not in (1, 3):
            raise ValidationError("interpolation order must be 1 or 3")
        self.t_grid = t_grid
        self.tau_grid = tau_grid
        self.order = order
        self.richardson_error = float(richardson_error)
        self._flat = np.diff(tau_grid) == 0.0
        if order == 3 and t_grid.size >= 4:
            self._fwd = CubicSpline(t_grid, tau_grid)
        else:
            self._fwd = None

    @property
    def t_start(self):
        return float(self.t_grid[0])

    @property
    def t_end(self):
        return float(self.t_grid[-1])

    @property
    def tau_max(self):
        return float(self.tau_grid[-1])

    def has_flat_segment(self, tau_lo=None, tau_hi=None):
        """True if the envelope vanishes over an interval inside the span."""
        lo = 0.0 if tau_lo is None else tau_lo
        hi = self.tau_max if tau_hi is None else tau_hi
        inside = (self.tau_grid[:-1] >= lo) & (self.tau_grid[1:] <= hi)
        return bool(np.any(self._flat & inside))

    def _eval_fwd(self, t):
        if self._fwd is not None:
            return self._fwd(t)
        return np.interp(t, self.t_grid, self.tau_grid)

    def tau_of(self, t):
        """Warped time at lab time t (scalar or array)."""
        arr = np.asarray(t, dtype=float)
        slack = 1e-9 * (self.t_end - self.t_start)
        if arr.size and (arr.min() < self.t_start - slack or arr.max() > self.t_end + slack):
            raise DomainError(f"t outside warp domain [{self.t_start}, {self.t_end}]")
        out = np.clip(self._eval_fwd(np.clip(arr, self.t_start, self.t_end)), 0.0, None)
        return float(out) if np.isscalar(t) or arr.ndim == 0 else out

    def t_of(self, tau):
        """Lab time at warped time tau (scalar or array).

        Raises :class:`AmbiguousTauError` for queries inside a flat segment,
        where every lab time in the segment maps to the same tau.
        """
        arr = np.atleast_1d(np.asarray(tau, dtype=float))
        slack = 1e-9 * max(self.tau_max, 1.0)
        if arr.size and (arr.min() < -slack or arr.max() > self.tau_max + slack):
            raise DomainError(f"tau outside [0, {self.tau_max}]")
        out = np.empty(arr.shape)
        for i, target in enumerate(arr.ravel()):
            out.ravel()[i] = self._invert_one(min(max(target, 0.0), self.tau_max))
        scalar = np.isscalar(tau) or np.asarray(tau).ndim == 0
        return float(out.ravel()[0]) if scalar else out

    def _invert_one(self, target):
        tau = self.tau_grid
        k = int(np.searchsorted(tau, target, side="left"))
        if k == 0:
            return float(self.t_grid[0])
        if k >= tau.size:
            return float(self.t_grid[-1])
        if tau[k] == target:
            # exact grid hit; ambiguous if an adjacent segment is flat
            left_flat = self._flat[k - 1]
            right_flat = k < self._flat.size and self._flat[k]
            if left_flat or right_flat:
                raise AmbiguousTauError(
                    f"tau={target:g} lies in a zero-envelope segment"
                )
            return float(self.t_grid[k])
        lo, hi = self.t_grid[k - 1], self.t_grid[k]
        if self._flat[k - 1]:
            raise AmbiguousTauError(f"tau={target:g} lies in a zero-envelope segment")
        if self._fwd is None:
            frac = (target - tau[k - 1]) / (tau[k] - tau[k - 1])
            return float(lo + frac * (hi - lo))
        f = lambda x: float(self._fwd(x)) - target
        flo, fhi = f(lo), f(hi)
        if flo == 0.0:
            return float(lo)
        if fhi == 0.0:
            return float(hi)
        if flo * fhi > 0.0:
            # interpolant wiggle across a near-flat cell; linear fallback
            frac = (target - tau[k - 1]) / (tau[k] - tau[k - 1])
            return float(lo + frac * (hi - lo))
        return float(brentq(f, lo, hi, xtol=1e-15 * max(1.0, abs(hi)), rtol=8.9e-16))


def default_grid_size(pulse, points_per_period=_POINTS_PER_PERIOD):
    """Grid size resolving every carrier period of the chirp."""
    w_max = float(pulse.require_chirp().sample(pulse.window_grid(4097)).max())
    periods = w_max * pulse.duration / (2.0 * math.pi)
    n = int(math.ceil(points_per_period * periods)) + 1
    return int(min(max(n, _N_GRID_MIN), _N_GRID_MAX))


def build_tau_map(model, pulse, n_grid=None, richardson_tol=1e-8):
    """Construct the warp by composite Simpson quadrature on a uniform grid.

    The integrand must be nonnegative: a negative transition dipole under a
    positive envelope flips the warp direction and is rejected.  A stride-2
    Richardson estimate of the quadrature error is stored on the map and a
    warning is emitted when it exceeds ``richardson_tol`` relative to the
    total warped duration.
    """
    if n_grid is None:
        n_grid = default_grid_size(pulse)
    n_grid = int(n_grid)
    if n_grid < 2:
        raise ValidationError("n_grid must be >= 2")
    if n_grid % 2 == 0:
        n_grid += 1  # keep a stride-2 subgrid available for the error estimate
    ts = pulse.window_grid(n_grid)
    rate = warp_rate_samples(model, pulse, ts)
    floor = -1e-13 * max(abs(rate).max(), 1e-300)
    if rate.min() < floor:
        t_bad = ts[int(np.argmin(rate))]
        raise OrientationError(
            f"warp integrand negative near t={t_bad:g}; absorb the sign of "
            "mu_ab into its phase convention so the warp runs forward"
        )
    rate = np.maximum(rate, 0.0)
    h = ts[1] - ts[0]
    tau = cumulative_simpson_uniform(rate, h)
    # quadrature noise can leave tiny non-monotone dips; flatten them
    tau = np.maximum.accumulate(tau)
    tau[0] = 0.0
    rich = 0.0
    if n_grid >= 5:
        coarse = cumulative_simpson_uniform(rate[::2], 2.0 * h)
        rich = abs(tau[-1] - coarse[-1]) / 15.0
        if tau[-1] > 0 and rich > richardson_tol * tau[-1]:
            warnings.warn(
                f"warp quadrature error estimate {rich:.2e} exceeds "
                f"{richardson_tol:.1e} of tau_max; increase n_grid",
                stacklevel=2,
            )
    return TauMap(ts, tau, order=3, richardson_error=rich)


def invert_tau(tau_map, tau):
    """Lab time corresponding to a warped time (see :meth:`TauMap.t_of`)."""
    return tau_map.t_of(tau)
