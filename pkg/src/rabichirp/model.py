"""Physical inputs: level structure, induced dipoles, and the driving pulse.

The two-level system is described by the instantaneous splitting
omega_ab(t) = |E_a - E_b| (always positive), its sign s = Sign(E_a - E_b),
and three induced dipole functions mu_aa, mu_bb, mu_ab.  All five are
functions of time because the external field itself creates them.

The pulse is

    F(t) = f0 * m(t) * cos(w(t) * t)

with a dimensionless envelope 0 <= m <= 1 and an instantaneous carrier
frequency w(t) > 0 (the chirp, the designable quantity).
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import (
    DegenerateCouplingError,
    DomainError,
    LevelCrossingError,
    ValidationError,
)
from .timefun import TimeFunction

# grid density used to audit envelope/chirp bounds at construction
_CHECK_POINTS = 10_000
_ENVELOPE_SLACK = 1e-9


@dataclass(frozen=True)
class SystemModel:
    """Two-level system with field-induced dipole moments."""

    omega_ab: TimeFunction
    sign_ab: int
    mu_aa: TimeFunction
    mu_bb: TimeFunction
    mu_ab: TimeFunction

    def __post_init__(self):
        if self.sign_ab not in (-1, 1):
            raise ValidationError("sign_ab must be -1 or +1")
        for name in ("omega_ab", "mu_aa", "mu_bb", "mu_ab"):
            if not isinstance(getattr(self, name), TimeFunction):
                raise ValidationError(f"{name} must be a TimeFunction")


@dataclass(frozen=True)
class PulseSpec:
    """Driving pulse: amplitude, envelope, chirp and time window.

    ``chirp`` may be None for a pulse that still has to be designed; every
    evaluation that needs the carrier rejects such a pulse.  ``f0 == 0`` is
    accepted so that field-free propagation can be expressed, but any
    negative amplitude is rejected (the design formulas require F0 > 0).
    """

    f0: float
    envelope: TimeFunction
    chirp: TimeFunction | None
    t_start: float
    t_end: float

    def __post_init__(self):
        if not math.isfinite(self.f0) or self.f0 < 0:
            raise ValidationError("pulse amplitude must satisfy F0 > 0")
        if not (math.isfinite(self.t_start) and math.isfinite(self.t_end)):
            raise ValidationError("pulse window must be finite")
        if self.t_start < 0:
            raise ValidationError("t_start must be >= 0")
        if self.t_end <= self.t_start:
            raise ValidationError("t_end must exceed t_start")
        if not isinstance(self.envelope, TimeFunction):
            raise ValidationError("envelope must be a TimeFunction")
        if not self.envelope.covers(self.t_start, self.t_end):
            raise ValidationError("envelope does not cover the pulse window")
        ts = self.window_grid(_CHECK_POINTS)
        m = self.envelope.sample(ts)
        if m.min() < -_ENVELOPE_SLACK or m.max() > 1.0 + _ENVELOPE_SLACK:
            raise ValidationError("envelope must stay within 0 <= m(t) <= 1")
        if self.chirp is not None:
            if not isinstance(self.chirp, TimeFunction):
                raise ValidationError("chirp must be a TimeFunction or None")
            if not self.chirp.covers(self.t_start, self.t_end):
                raise ValidationError("chirp does not cover the pulse window")
            if self.chirp.sample(ts).min() <= 0.0:
                raise ValidationError("chirp must be positive on the pulse window")

    def window_grid(self, n):
        return np.linspace(self.t_start, self.t_end, n)

    @property
    def duration(self):
        return self.t_end - self.t_start

    def require_chirp(self):
        if self.chirp is None:
            raise ValidationError("pulse has no chirp; design one first")
        return self.chirp

    def with_chirp(self, chirp):
        return PulseSpec(self.f0, self.envelope, chirp, self.t_start, self.t_end)

    def _check_window(self, t):
        slack = 1e-9 * self.duration
        if np.min(t) < self.t_start - slack or np.max(t) > self.t_end + slack:
            raise DomainError(
                f"t outside pulse window [{self.t_start}, {self.t_end}]"
            )


def eval_field(pulse, t):
    """Field value F0 * m(t) * cos(w(t) t) at a single time."""
    pulse._check_window(t)
    w = pulse.require_chirp()
    t = float(t)
    return pulse.f0 * pulse.envelope(t) * math.cos(w(t) * t)


def field_samples(pulse, ts):
    """Vectorized :func:`eval_field`."""
    ts = np.asarray(ts, dtype=float)
    pulse._check_window(ts)
    w = pulse.require_chirp()
    return pulse.f0 * pulse.envelope.sample(ts) * np.cos(w.sample(ts) * ts)


def eval_field_derivative(pulse, t, mode="exact"):
    """Time derivative of the field.

    ``envelope-slow`` keeps only the carrier term -F0 m w sin(w t), valid
    when the field oscillates much faster than the envelope varies.
    ``exact`` differentiates the full product, including dm/dt and the
    chirp-rate term t * dw/dt.
    """
    pulse._check_window(t)
    w = pulse.require_chirp()
    t = float(t)
    m = pulse.envelope(t)
    wt = w(t)
    phase = wt * t
    if mode == "envelope-slow":
        return -pulse.f0 * m * wt * math.sin(phase)
    if mode == "exact":
        dm = pulse.envelope.derivative(t)
        dw = w.derivative(t)
        return pulse.f0 * (
            dm * math.cos(phase) - m * (wt + dw * t) * math.sin(phase)
        )
    raise ValidationError(f"unknown derivative mode {mode!r}")


def field_derivative_samples(pulse, ts, mode="exact"):
    """Vectorized :func:`eval_field_derivative`."""
    ts = np.asarray(ts, dtype=float)
    pulse._check_window(ts)
    w = pulse.require_chirp()
    m = pulse.envelope.sample(ts)
    wt = w.sample(ts)
    phase = wt * ts
    if mode == "envelope-slow":
        return -pulse.f0 * m * wt * np.sin(phase)
    if mode == "exact":
        dm = pulse.envelope.derivative_sample(ts)
        dw = w.derivative_sample(ts)
        return pulse.f0 * (dm * np.cos(phase) - m * (wt + dw * ts) * np.sin(phase))
    raise ValidationError(f"unknown derivative mode {mode!r}")


def eval_system(model, t, pulse=None):
    """All five instantaneous model values at time t.

    Returns ``(omega_ab, sign_ab, mu_aa, mu_bb, mu_ab)``.  A non-positive
    splitting is a level crossing and always an error.  A vanishing
    transition dipole is flagged only when a pulse is supplied and t lies
    strictly inside its window with a non-vanishing envelope, because the
    dynamical matrix divides by mu_ab there.
    """
    t = float(t)
    w = model.omega_ab(t)
    if w <= 0.0:
        raise LevelCrossingError(f"omega_ab(t={t:g}) = {w:g} is not positive")
    mu_ab = model.mu_ab(t)
    if mu_ab == 0.0 and pulse is not None:
        inside = pulse.t_start < t < pulse.t_end
        if inside and pulse.envelope(t) > 0.0:
            raise DegenerateCouplingError(
                f"mu_ab vanishes at t={t:g} inside the pulse support"
            )
    return (w, model.sign_ab, model.mu_aa(t), model.mu_bb(t), mu_ab)


def induced_dipoles(kappa_aa, kappa_bb, kappa_ab, f0, envelope):
    """Dipole functions proportional to the field-strength envelope.

    Models the premise that the external perturbation itself creates the
    dipole moments: mu_ij(t) = kappa_ij * F0 * m(t), i.e. each dipole
    follows the magnitude envelope of the field.  The carrier oscillation
    is deliberately not included; a dipole tracking |cos(w t)| would vanish
    twice per cycle and make the coupling degenerate.  This is a modeling
    choice, not a derived result.
    """
    if f0 <= 0:
        raise ValidationError("pulse amplitude must satisfy F0 > 0")
    return (
        envelope.scaled(kappa_aa * f0),
        envelope.scaled(kappa_bb * f0),
        envelope.scaled(kappa_ab * f0),
    )
