import numpy as np
import pytest

from rabichirp.errors import IntegrationError, ValidationError
from rabichirp import rk


def test_complex_oscillator_accuracy():
    w = 3.7
    ts = np.linspace(0, 10, 401)
    res = rk.solve(lambda t, y: 1j * w * y, (0, 10), np.array([1.0 + 0j]),
                   rtol=1e-11, atol=1e-13, t_eval=ts)
    assert np.array_equal(res.t, ts)
    exact = np.exp(1j * w * ts)
    assert np.max(np.abs(res.y[:, 0] - exact)) < 1e-9


def test_hermitian_generator_preserves_norm():
    H = np.array([[0.3, 0.7 + 0.2j], [0.7 - 0.2j, -0.1]])
    rhs = lambda t, y: -1j * (H @ y)
    res = rk.solve(rhs, (0, 20), np.array([1, 0], dtype=complex),
                   rtol=1e-12, atol=1e-14, t_eval=np.linspace(0, 20, 101))
    norms = np.sum(np.abs(res.y) ** 2, axis=1)
    assert np.max(np.abs(norms - 1)) < 1e-11


def test_max_step_enforced():
    res = rk.solve(lambda t, y: 0.1 * y, (0, 1), np.array([1.0 + 0j]),
                   rtol=1e-6, atol=1e-9, max_step=0.01)
    assert np.max(np.diff(res.t)) <= 0.01 + 1e-12


def test_state_dependent_ceiling():
    seen = []

    def ceiling(t, y):
        seen.append(t)
        return 0.05 if t < 0.5 else 0.2

    res = rk.solve(lambda t, y: 1.0 * y, (0, 1), np.array([1.0 + 0j]),
                   rtol=1e-6, atol=1e-9, max_step_fn=ceiling)
    steps = np.diff(res.t)
    early = steps[res.t[:-1] < 0.45]
    assert np.max(early) <= 0.05 + 1e-12
    assert seen


def test_pole_triggers_integration_error():
    # derivative blows up approaching t = 0.5; steps underflow there
    def rhs(t, y):
        return y / (0.5 - t) ** 2

    with pytest.raises(IntegrationError) as err:
        rk.solve(rhs, (0, 1), np.array([1.0 + 0j]), rtol=1e-10, atol=1e-12)
    assert err.value.t == pytest.approx(0.5, abs=0.05)


def test_eval_points_must_be_inside_span():
    with pytest.raises(ValidationError):
        rk.solve(lambda t, y: y, (0, 1), np.array([1.0 + 0j]),
                 rtol=1e-6, atol=1e-9, t_eval=np.array([0.5, 1.5]))
    with pytest.raises(ValidationError):
        rk.solve(lambda t, y: y, (1, 0), np.array([1.0 + 0j]),
                 rtol=1e-6, atol=1e-9)


def test_deterministic():
    rhs = lambda t, y: np.array([1j * 2.0 * y[0] + 0.1 * y[1], -0.1 * y[0]])
    ts = np.linspace(0, 5, 37)
    a = rk.solve(rhs, (0, 5), np.array([1, 0], dtype=complex),
                 rtol=1e-9, atol=1e-12, t_eval=ts)
    b = rk.solve(rhs, (0, 5), np.array([1, 0], dtype=complex),
                 rtol=1e-9, atol=1e-12, t_eval=ts)
    assert np.array_equal(a.y, b.y)
