"""Shared factories for randomized and curated test configurations."""

import math

import numpy as np
import pytest

from rabichirp import PulseSpec, SystemModel, TimeFunction, build_tau_map


def constant_model(omega=1.0, sign=1, mu_aa=0.0, mu_bb=0.0, mu_ab=0.5):
    return SystemModel(
        omega_ab=TimeFunction.constant(omega),
        sign_ab=sign,
        mu_aa=TimeFunction.constant(mu_aa),
        mu_bb=TimeFunction.constant(mu_bb),
        mu_ab=TimeFunction.constant(mu_ab),
    )


def constant_pulse(f0=1.0, m=1.0, w=2.0, t_start=0.0, t_end=4.0):
    return PulseSpec(
        f0=f0,
        envelope=TimeFunction.constant(m),
        chirp=TimeFunction.constant(w),
        t_start=t_start,
        t_end=t_end,
    )


def smooth_tabulated(rng, t_lo, t_hi, base, rel_amp, n=201):
    """Slowly varying positive tabulated function: base * (1 + bumps)."""
    ts = np.linspace(t_lo - 0.05 * (t_hi - t_lo), t_hi + 0.05 * (t_hi - t_lo), n)
    span = t_hi - t_lo
    values = np.ones_like(ts)
    for _ in range(3):
        center = rng.uniform(t_lo, t_hi)
        width = rng.uniform(0.2, 0.5) * span
        values += rel_amp * rng.uniform(-1, 1) * np.exp(
            -0.5 * ((ts - center) / width) ** 2
        )
    return TimeFunction.tabulated(ts, base * values)


def random_smooth_setup(rng):
    """One randomized smooth model/pulse pair on a short window."""
    t_start = float(rng.choice([0.0, 0.5]))
    duration = rng.uniform(4.0, 8.0)
    t_end = t_start + duration
    w_ab = rng.uniform(1.0, 3.0)
    sign = int(rng.choice([-1, 1]))

    if rng.random() < 0.5:
        omega_ab = TimeFunction.constant(w_ab)
    else:
        omega_ab = smooth_tabulated(rng, t_start, t_end, w_ab, 0.04)

    mu_ab_val = rng.uniform(0.3, 0.7)
    mu_ab = TimeFunction.constant(mu_ab_val)
    mu_aa = TimeFunction.constant(rng.uniform(0.0, 0.05))
    mu_bb = TimeFunction.constant(rng.uniform(0.0, 0.05))
    model = SystemModel(omega_ab, sign, mu_aa, mu_bb, mu_ab)

    kind = rng.integers(0, 3)
    if kind == 0:
        envelope = TimeFunction.constant(1.0)
    elif kind == 1:
        envelope = TimeFunction.gaussian(
            center=0.5 * (t_start + t_end),
            width=rng.uniform(0.18, 0.3) * duration,
            height=1.0,
        )
    else:
        pad = rng.uniform(0.1, 0.3) * duration
        envelope = TimeFunction.sin_squared(
            start=t_start - pad, duration=duration + 2 * pad, height=1.0
        )

    chirp_scale = rng.uniform(0.9, 1.15)
    if rng.random() < 0.5:
        chirp = TimeFunction.constant(w_ab * chirp_scale)
    else:
        chirp = smooth_tabulated(rng, t_start, t_end, w_ab * chirp_scale, 0.03)

    pulse = PulseSpec(
        f0=rng.uniform(0.05, 0.3),
        envelope=envelope,
        chirp=chirp,
        t_start=t_start,
        t_end=t_end,
    )
    return model, pulse


def asymmetric_design_setup(i):
    """Curated asymmetric configs for the design pipeline.

    Built so the fixed-point map contracts (small diagonal asymmetry), the
    counter-rotating phases spin fast (validity metric far above 10), and
    the pulse accumulates a bit more than pi of warped time.
    """
    rng = np.random.default_rng(7700 + i)
    w_ab = rng.uniform(18.0, 25.0)
    duration = rng.uniform(90.0, 130.0)
    t_start = 5.0 if i % 5 == 4 else 0.0
    t_end = t_start + duration
    mu_ab_val = rng.uniform(0.4, 0.6)
    diff = rng.uniform(0.001, 0.002)
    mu_bb_val = rng.uniform(0.0, 0.002)
    sign = -1 if i % 2 else 1

    kind = i % 3
    if kind == 0:
        envelope = TimeFunction.constant(1.0)
    elif kind == 1:
        envelope = TimeFunction.gaussian(
            center=0.5 * (t_start + t_end), width=0.225 * duration, height=1.0
        )
    else:
        pad = 0.35 * duration
        envelope = TimeFunction.sin_squared(
            start=t_start - pad, duration=duration + 2 * pad, height=1.0
        )

    if i % 4 == 3:
        omega_ab = smooth_tabulated(
            np.random.default_rng(880 + i), t_start, t_end, w_ab, 0.002, n=401
        )
    else:
        omega_ab = TimeFunction.constant(w_ab)

    model = SystemModel(
        omega_ab=omega_ab,
        sign_ab=sign,
        mu_aa=TimeFunction.constant(mu_bb_val + diff),
        mu_bb=TimeFunction.constant(mu_bb_val),
        mu_ab=TimeFunction.constant(mu_ab_val),
    )
    # amplitude for ~1.3 complete oscillations of warped time
    ts = np.linspace(t_start, t_end, 4001)
    m_int = np.trapezoid(envelope.sample(ts), ts)
    tau_target = rng.uniform(3.5, 4.3)
    f0 = 2.0 * tau_target / (mu_ab_val * m_int)
    pulse = PulseSpec(f0=f0, envelope=envelope, chirp=None,
                      t_start=t_start, t_end=t_end)
    return model, pulse


@pytest.fixture(scope="session")
def designed_family():
    """Ten converged asymmetric designs, shared across acceptance tests."""
    from rabichirp import design_chirp

    family = []
    for i in range(10):
        model, pulse = asymmetric_design_setup(i)
        report = design_chirp(model, pulse, tol_fp=1e-13, max_iter=60,
                              verify=False)
        assert report.converged, f"design {i} failed to converge"
        family.append((model, pulse.with_chirp(report.chirp), report))
    return family


def tau_map_for(model, pulse, n=None):
    return build_tau_map(model, pulse, n)
