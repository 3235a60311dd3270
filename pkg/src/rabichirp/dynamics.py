"""Two-level propagation in the lab, warped-time and Rabi frames.

Three pictures of the same dynamics:

* lab frame (amplitudes c): the raw equation of motion driven by dF/dt,
  with the level phase exp(+/- i s omega_ab t) on the off-diagonals and
  the diagonal terms -i (mu_ii/mu_ab) omega_ab t.
* warped frame (amplitudes a): after substituting the envelope-slow field
  derivative and the warped time tau, the generator splits into diagonal
  drive terms -i f_i and off-diagonal phases at the difference and sum
  detunings.  Dropping the sum-frequency exponentials gives the rotating
  wave approximation.
* Rabi frame (amplitudes b): a diagonal phase transformation
  b_i = exp(-i rho_i(tau)) a_i with d rho_i/d tau = f_i removes the
  diagonal, leaving the textbook constant-coupling oscillation
  d b/d tau = +/- i [[0,1],[1,0]] b whose populations follow sin^2(tau).

Detuning phases are taken as the literal product Delta(t) * t by default
(``phase_convention="product"``); the accumulated integral of Delta is
available as an alternative reading for time-dependent detunings.
"""

import cmath
from dataclasses import dataclass
import math

import numpy as np
from scipy.interpolate import CubicSpline

from . import rk
from .errors import AmbiguousTauError, DomainError, ValidationError
from .model import field_samples
from .quadrature import cumulative_order6_uniform
from .timefun import TimeFunction
from .transform import warp_rate_samples

FRAME_LAB = "lab-c"
FRAME_TAU = "tau-a"
FRAME_RABI = "rabi-b"
_FRAMES = (FRAME_LAB, FRAME_TAU, FRAME_RABI)

# the user-facing tolerance bounds the delivered trace error (norm drift
# stays below 10 tol); the controller runs this much tighter internally
_TOL_SAFETY = 1e-3
_RTOL_FLOOR = 5e-14
_INIT_NORM_TOL = 1e-8
_CEILING_PERIODS = 20  # step ceiling: 1/20 of the shortest phase period


@dataclass(frozen=True)
class Amplitudes:
    """Complex two-component state in a declared frame."""

    first: complex
    second: complex
    frame: str

    def __post_init__(self):
        if self.frame not in _FRAMES:
            raise ValidationError(f"unknown frame {self.frame!r}")

    def norm(self):
        return math.sqrt(abs(self.first) ** 2 + abs(self.second) ** 2)

    def populations(self):
        return (abs(self.first) ** 2, abs(self.second) ** 2)

    def as_array(self):
        return np.array([self.first, self.second], dtype=complex)


def _require_init(init, frame):
    if init.frame != frame:
        raise ValidationError(f"initial state must be in frame {frame!r}")
    if abs(init.norm() - 1.0) > _INIT_NORM_TOL:
        raise ValidationError("initial state must be normalized")


@dataclass
class Trace:
    """Sampled evolution in one frame, with the drive along for the ride."""

    frame: str
    t: np.ndarray
    tau: np.ndarray
    amp1: np.ndarray
    amp2: np.ndarray
    field: np.ndarray
    chirp: np.ndarray

    CSV_COLUMNS = ("t", "tau", "re_1", "im_1", "re_2", "im_2",
                   "pop_1", "pop_2", "field", "chirp")

    def __post_init__(self):
        if self.frame not in _FRAMES:
            raise ValidationError(f"unknown frame {self.frame!r}")
        coord = self.tau if self.frame != FRAME_LAB else self.t
        if np.any(np.diff(coord) <= 0):
            raise ValidationError("trace coordinates must be strictly increasing")

    @property
    def pop1(self):
        return np.abs(self.amp1) ** 2

    @property
    def pop2(self):
        return np.abs(self.amp2) ** 2

    def norm_drift(self):
        return float(np.max(np.abs(self.pop1 + self.pop2 - 1.0)))

    def final_state(self):
        return Amplitudes(complex(self.amp1[-1]), complex(self.amp2[-1]), self.frame)

    def to_csv(self, path):
        cols = np.column_stack([
            self.t, self.tau,
            self.amp1.real, self.amp1.imag, self.amp2.real, self.amp2.imag,
            self.pop1, self.pop2, self.field, self.chirp,
        ])
        with open(path, "w") as fh:
            fh.write(f"# rabichirp trace frame={self.frame}\n")
            fh.write(",".join(self.CSV_COLUMNS) + "\n")
            for row in cols:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        frame = None
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    for tok in line[1:].split():
                        if tok.startswith("frame="):
                            frame = tok.split("=", 1)[1]
                    continue
                if line.startswith("t,"):
                    continue
                rows.append([float(v) for v in line.split(",")])
        if frame is None or not rows:
            raise ValidationError(f"{path} is not a rabichirp trace")
        d = np.asarray(rows)
        return cls(
            frame=frame, t=d[:, 0], tau=d[:, 1],
            amp1=d[:, 2] + 1j * d[:, 3], amp2=d[:, 4] + 1j * d[:, 5],
            field=d[:, 8], chirp=d[:, 9],
        )


# ---------------------------------------------------------------------------
# generators (exposed for the cross-frame chain-rule identity and tests)


def lab_generator(model, pulse, t, derivative_mode="exact"):
    """2x2 generator of the lab-frame equation at time t."""
    from .model import eval_field_derivative, eval_system

    t = float(t)
    dfdt = eval_field_derivative(pulse, t, derivative_mode)
    wab, s, muaa, mubb, muab = eval_system(model, t, pulse)
    pref = dfdt * muab / wab
    phase = cmath.exp(1j * s * wab * t)
    return pref * np.array(
        [
            [-1j * (muaa / muab) * wab * t, phase],
            [-1.0 / phase, -1j * (mubb / muab) * wab * t],
        ],
        dtype=complex,
    )


def tau_generator(model, pulse, t, rwa=False, phase_convention="product",
                  detuning_phases=None):
    """2x2 generator of the warped-frame equation, evaluated at lab time t."""
    w = pulse.require_chirp()(float(t))
    from .model import eval_system

    t = float(t)
    wab, s, muaa, mubb, muab = eval_system(model, t, pulse)
    sin_wt = math.sin(w * t)
    f_a = 2.0 * (muaa / muab) * wab * t * sin_wt
    f_b = 2.0 * (mubb / muab) * wab * t * sin_wt
    if phase_convention == "product":
        th_m = (w - wab) * t
        th_p = (w + wab) * t
    elif phase_convention == "integral":
        if detuning_phases is None:
            raise ValidationError("integral convention needs detuning_phases")
        th_m, th_p = detuning_phases(t)
    else:
        raise ValidationError(f"unknown phase convention {phase_convention!r}")
    em = cmath.exp(-1j * s * th_m)
    if rwa:
        top = s * em
        bot = s / em
    else:
        ep = cmath.exp(1j * s * th_p)
        top = s * (em - ep)
        bot = s * (1.0 / em - 1.0 / ep)
    return -1j * np.array([[-f_a, top], [bot, -f_b]], dtype=complex)


def _detuning_phase_table(model, pulse, n=8193):
    """Cumulative integrals of both detunings for the integral convention."""
    ts = pulse.window_grid(n)
    h = ts[1] - ts[0]
    w = pulse.require_chirp().sample(ts)
    wab = model.omega_ab.sample(ts)
    phi_m = CubicSpline(ts, cumulative_order6_uniform(w - wab, h))
    phi_p = CubicSpline(ts, cumulative_order6_uniform(w + wab, h))
    return lambda t: (float(phi_m(t)), float(phi_p(t)))


# ---------------------------------------------------------------------------
# integrators


def _tolerances(tol):
    if tol <= 0:
        raise ValidationError("tol must be positive")
    rtol = max(tol * _TOL_SAFETY, _RTOL_FLOOR)
    return rtol, rtol * 1e-2


def integrate_lab(model, pulse, init, t_span=None, tol=1e-9, n_samples=1001,
                  derivative_mode="exact", tau_map=None):
    """Propagate the lab-frame amplitudes across the pulse window.

    The field derivative is evaluated in ``exact`` mode by default.  When a
    warp map is supplied the trace gains matched warped-time coordinates.
    """
    _require_init(init, FRAME_LAB)
    chirp = pulse.require_chirp()
    if t_span is None:
        t_span = (pulse.t_start, pulse.t_end)
    pulse._check_window(np.asarray(t_span))
    rtol, atol = _tolerances(tol)

    f0 = pulse.f0
    s = float(model.sign_ab)
    exact = derivative_mode == "exact"
    if not exact and derivative_mode != "envelope-slow":
        raise ValidationError(f"unknown derivative mode {derivative_mode!r}")
    env = pulse.envelope.fast_eval()
    denv = pulse.envelope.fast_derivative()
    f_w = chirp.fast_eval()
    f_dw = chirp.fast_derivative()
    f_wab = model.omega_ab.fast_eval()
    mu_aa = model.mu_aa.fast_eval()
    mu_bb = model.mu_bb.fast_eval()
    f_muab = model.mu_ab.fast_eval()

    def rhs(t, y):
        m = env(t)
        w = f_w(t)
        phase = w * t
        if exact:
            dfdt = f0 * (
                denv(t) * math.cos(phase)
                - m * (w + f_dw(t) * t) * math.sin(phase)
            )
        else:
            dfdt = -f0 * m * w * math.sin(phase)
        wab = f_wab(t)
        muab = f_muab(t)
        pref = dfdt * muab / wab
        ph = cmath.exp(1j * s * wab * t)
        # the transition dipole cancels in the diagonal: pref * diag = -i dF mu_ii t
        diag = -1j * dfdt * t
        c1, c2 = y[0], y[1]
        return np.array(
            [
                diag * mu_aa(t) * c1 + pref * ph * c2,
                -pref * c1 / ph + diag * mu_bb(t) * c2,
            ]
        )

    # step ceiling from the fastest phase present (carrier and level phase)
    ts_probe = np.linspace(t_span[0], t_span[1], 2049)
    w_p = chirp.sample(ts_probe)
    dw_p = chirp.derivative_sample(ts_probe)
    wab_p = model.omega_ab.sample(ts_probe)
    dwab_p = model.omega_ab.derivative_sample(ts_probe)
    rate = np.maximum(np.abs(w_p + dw_p * ts_probe),
                      np.abs(wab_p) + np.abs(dwab_p) * ts_probe)
    max_step = min(
        2.0 * math.pi / (_CEILING_PERIODS * float(rate.max())),
        (t_span[1] - t_span[0]) / 20.0,
    )

    ts = np.linspace(t_span[0], t_span[1], int(n_samples))
    res = rk.solve(rhs, t_span, init.as_array(), rtol=rtol, atol=atol,
                   max_step=max_step, t_eval=ts)
    tau = tau_map.tau_of(ts) if tau_map is not None else np.zeros_like(ts)
    return Trace(
        frame=FRAME_LAB, t=ts, tau=tau,
        amp1=res.y[:, 0], amp2=res.y[:, 1],
        field=field_samples(pulse, ts), chirp=chirp.sample(ts),
    )


def _integrate_tau(model, pulse, tau_map, init, tau_span, tol, n_samples,
                   rwa, phase_convention, tau_eval=None):
    _require_init(init, FRAME_TAU)
    chirp = pulse.require_chirp()
    if tau_span is None:
        tau_span = (0.0, tau_map.tau_max)
    lo, hi = float(tau_span[0]), float(tau_span[1])
    slack = 1e-9 * max(tau_map.tau_max, 1.0)
    if lo < -slack or hi > tau_map.tau_max + slack or hi <= lo:
        raise DomainError(
            f"tau_span must be increasing and inside [0, {tau_map.tau_max:g}]"
        )
    if tau_map.has_flat_segment(lo, hi):
        raise AmbiguousTauError("tau_span crosses a zero-envelope segment")
    t_lo = tau_map.t_of(lo)
    t_hi = tau_map.t_of(hi)
    for t_edge, name in ((t_lo, "start"), (t_hi, "end")):
        if warp_rate_samples(model, pulse, np.array([t_edge]))[0] <= 0.0:
            raise AmbiguousTauError(
                f"envelope vanishes at the {name} of tau_span (t={t_edge:g}); "
                "shrink the span or keep the envelope positive there"
            )
    rtol, atol = _tolerances(tol)

    f0 = pulse.f0
    s = float(model.sign_ab)
    t_min, t_max = pulse.t_start, pulse.t_end
    product = phase_convention == "product"
    phases = None if product else _detuning_phase_table(model, pulse)
    if not product and phase_convention != "integral":
        raise ValidationError(f"unknown phase convention {phase_convention!r}")
    env = pulse.envelope.fast_eval()
    f_w = chirp.fast_eval()
    f_dw = chirp.fast_derivative()
    f_wab = model.omega_ab.fast_eval()
    f_dwab = model.omega_ab.fast_derivative()
    mu_aa = model.mu_aa.fast_eval()
    mu_bb = model.mu_bb.fast_eval()
    f_muab = model.mu_ab.fast_eval()

    from .errors import IntegrationError

    def rhs(tau, y):
        # trial stages may probe just past the window; clamp to its edge
        t = min(max(y[2].real, t_min), t_max)
        m = env(t)
        w = f_w(t)
        wab = f_wab(t)
        muab = f_muab(t)
        denom = f0 * m * w * muab
        if denom <= 0.0:
            raise IntegrationError(
                f"warp rate vanished at t={t:g}; the envelope or coupling "
                "is zero inside the integration span", t=t)
        dtdtau = 2.0 * wab / denom
        sin_wt = math.sin(w * t)
        f_fac = 2.0 * wab * t * sin_wt / muab
        if product:
            th_m = (w - wab) * t
            th_p = (w + wab) * t
        else:
            th_m, th_p = phases(t)
        em = cmath.exp(-1j * s * th_m)
        if rwa:
            top = s * em
            bot = s / em
        else:
            ep = cmath.exp(1j * s * th_p)
            top = s * (em - ep)
            bot = s * (1.0 / em - 1.0 / ep)
        a1, a2 = y[0], y[1]
        return np.array(
            [
                -1j * (-f_fac * mu_aa(t) * a1 + top * a2),
                -1j * (bot * a1 - f_fac * mu_bb(t) * a2),
                dtdtau + 0j,
            ]
        )

    def phase_rate_ceiling(tau, y):
        t = min(max(y[2].real, t_min), t_max)
        m = env(t)
        w = f_w(t)
        wab = f_wab(t)
        muab = f_muab(t)
        denom = f0 * m * w * muab
        if denom <= 0.0:
            return 1e-6 * (hi - lo)
        dtdtau = 2.0 * wab / denom
        dw = f_dw(t)
        dwab = f_dwab(t)
        if rwa:
            r_osc = abs(w - wab) + abs(dw - dwab) * t
        else:
            r_osc = (w + wab) + abs(dw + dwab) * t
        f_mag = 2.0 * wab * t * max(abs(mu_aa(t)), abs(mu_bb(t))) / abs(muab)
        rate = max(dtdtau * r_osc, f_mag, 1.0)
        # floor: the ceiling must never force more steps than the error
        # controller itself would; envelope tails spin irrelevant phases
        return max(2.0 * math.pi / (_CEILING_PERIODS * rate),
                   (hi - lo) / 200_000.0)

    if tau_eval is None:
        taus = np.linspace(lo, hi, int(n_samples))
    else:
        taus = np.asarray(tau_eval, dtype=float)
    y0 = np.array([init.first, init.second, t_lo], dtype=complex)
    res = rk.solve(rhs, (lo, hi), y0, rtol=rtol, atol=atol,
                   max_step=(hi - lo) / 20.0, t_eval=taus,
                   max_step_fn=phase_rate_ceiling)
    t_samples = res.y[:, 2].real
    return Trace(
        frame=FRAME_TAU, t=t_samples, tau=taus,
        amp1=res.y[:, 0], amp2=res.y[:, 1],
        field=field_samples(pulse, np.clip(t_samples, t_min, t_max)),
        chirp=chirp.sample(np.clip(t_samples, t_min, t_max)),
    )


def integrate_tau_full(model, pulse, tau_map, init, tau_span=None, tol=1e-9,
                       n_samples=1001, phase_convention="product",
                       tau_eval=None):
    """Propagate the warped-frame amplitudes with both detuning exponentials."""
    return _integrate_tau(model, pulse, tau_map, init, tau_span, tol,
                          n_samples, rwa=False,
                          phase_convention=phase_convention, tau_eval=tau_eval)


def integrate_tau_rwa(model, pulse, tau_map, init, tau_span=None, tol=1e-9,
                      n_samples=1001, phase_convention="product",
                      tau_eval=None):
    """Propagate the warped-frame amplitudes with sum-frequency terms dropped."""
    return _integrate_tau(model, pulse, tau_map, init, tau_span, tol,
                          n_samples, rwa=True,
                          phase_convention=phase_convention, tau_eval=tau_eval)


# ---------------------------------------------------------------------------
# diagonal phases and the Rabi frame


@dataclass
class PhaseIntegrals:
    """Accumulated diagonal phases rho_i(tau) = integral of f_i d tau."""

    t_grid: np.ndarray
    tau_grid: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray

    def __post_init__(self):
        self._r1 = CubicSpline(self.t_grid, self.rho1)
        self._r2 = CubicSpline(self.t_grid, self.rho2)

    def at_time(self, t):
        return (float(self._r1(t)), float(self._r2(t)))

    def at_tau(self, tau_map, tau):
        return self.at_time(tau_map.t_of(tau))


def phase_integrals(model, pulse, tau_map, tau_span=None):
    """Integrate the diagonal drive terms along the warp.

    Works on the warp's own grid.  The integrand f_i dtau/dt collapses to
    F0 mu_ii m w t sin(w t): the transition dipole cancels exactly, so
    isolated zeros of mu_ab do not poison the phases.
    """
    if tau_span is not None:
        lo, hi = float(tau_span[0]), float(tau_span[1])
        slack = 1e-9 * max(tau_map.tau_max, 1.0)
        if lo < -slack or hi > tau_map.tau_max + slack:
            raise DomainError(f"tau_span must lie inside [0, {tau_map.tau_max:g}]")
    ts = tau_map.t_grid
    h = ts[1] - ts[0]
    w = pulse.require_chirp().sample(ts)
    m = pulse.envelope.sample(ts)
    core = pulse.f0 * m * w * ts * np.sin(w * ts)
    rho1 = cumulative_order6_uniform(model.mu_aa.sample(ts) * core, h)
    rho2 = cumulative_order6_uniform(model.mu_bb.sample(ts) * core, h)
    return PhaseIntegrals(t_grid=ts, tau_grid=tau_map.tau_grid,
                          rho1=rho1, rho2=rho2)


def to_rabi_frame(a, phases, tau, tau_map=None, t=None):
    """Apply the diagonal phase transformation b_i = exp(-i rho_i) a_i.

    The phases are looked up at lab time ``t`` when given, otherwise at the
    lab time matching ``tau`` through ``tau_map``.  Populations are exactly
    preserved; only the complex phases change.
    """
    if a.frame != FRAME_TAU:
        raise ValidationError("to_rabi_frame expects warped-frame amplitudes")
    if t is None:
        if tau_map is None:
            raise ValidationError("need either t or tau_map to locate tau")
        t = tau_map.t_of(tau)
    r1, r2 = phases.at_time(t)
    return Amplitudes(
        cmath.exp(-1j * r1) * a.first,
        cmath.exp(-1j * r2) * a.second,
        FRAME_RABI,
    )


def tau_trace_to_rabi(trace, phases):
    """Transform a warped-frame trace into the Rabi frame sample by sample."""
    if trace.frame != FRAME_TAU:
        raise ValidationError("expected a warped-frame trace")
    r1 = phases._r1(trace.t)
    r2 = phases._r2(trace.t)
    return Trace(
        frame=FRAME_RABI, t=trace.t, tau=trace.tau,
        amp1=np.exp(-1j * r1) * trace.amp1,
        amp2=np.exp(-1j * r2) * trace.amp2,
        field=trace.field, chirp=trace.chirp,
    )


def rabi_reference(init, tau, sign=1):
    """Closed-form solution of d b/d tau = sign * i [[0,1],[1,0]] b."""
    if sign not in (-1, 1):
        raise ValidationError("sign must be -1 or +1")
    _require_init(init, FRAME_RABI)
    c, s = math.cos(tau), math.sin(tau)
    return Amplitudes(
        c * init.first + sign * 1j * s * init.second,
        c * init.second + sign * 1j * s * init.first,
        FRAME_RABI,
    )
