"""
🧪 TEST CASCADE CONTROLLER - Errores de la cascada, saturación y rangos de ganancias
"""

import numpy as np
import pytest

from src.config.parameters import GAIN_RANGES
from src.domain.controller import GainVector, RefPoint, compute_cascade, validate_gains
from src.domain.dynamics import QuadParams, QuadState, derivatives
from src.domain.errors import GainRangeError

PARAMS = QuadParams()
MID = GainVector.midpoints()


def test_midpoints():
    assert MID.to_array().tolist() == pytest.approx([1.25, -0.3, 7.5, 13.0, 1.75, 10.0])


def test_at_rest_on_reference_gives_hover():
    errors, thrusts = compute_cascade(QuadState(), RefPoint(0.0, 0.0), MID, PARAMS)
    assert errors.to_array().tolist() == [0.0] * 6
    assert thrusts.t1 == pytest.approx(PARAMS.hover_thrust, abs=1e-12)
    assert thrusts.t2 == pytest.approx(PARAMS.hover_thrust, abs=1e-12)


def test_attitude_reference_from_position_error():
    gains = GainVector(1.0, -0.3, 7.5, 13.0, 1.75, 10.0)
    errors, _ = compute_cascade(QuadState(), RefPoint(1.0, 0.0), gains, PARAMS)
    assert errors.e_theta == pytest.approx(-0.3)


def test_full_cascade_unsaturated():
    gains = GainVector(1.0, -0.3, 7.5, 13.0, 1.75, 10.0)
    errors, thrusts = compute_cascade(QuadState(), RefPoint(1.0, 1.0), gains, PARAMS)
    np.testing.assert_allclose(errors.to_array(), [1.0, 1.0, -0.3, -2.25, 1.0, 1.75], atol=1e-12)
    assert thrusts.t1 == pytest.approx(35.63375, abs=1e-9)
    assert thrusts.t2 == pytest.approx(6.38375, abs=1e-9)


def test_full_cascade_midpoints_saturates_left_rotor():
    errors, thrusts = compute_cascade(QuadState(), RefPoint(1.0, 1.0), MID, PARAMS)
    np.testing.assert_allclose(errors.to_array(), [1.0, 1.25, -0.375, -2.8125, 1.0, 1.75], atol=1e-12)
    assert thrusts.t1 == PARAMS.t_max
    assert thrusts.t2 == pytest.approx(2.7275, abs=1e-9)


def test_thrusts_always_within_limits():
    rng = np.random.default_rng(7)
    lo = np.array([r[0] for r in GAIN_RANGES.values()])
    hi = np.array([r[1] for r in GAIN_RANGES.values()])
    for _ in range(500):
        state = QuadState.from_array(rng.uniform(-50.0, 50.0, 6))
        gains = GainVector.from_array(rng.uniform(lo, hi))
        ref = RefPoint(*rng.uniform(-50.0, 50.0, 2))
        _, thrusts = compute_cascade(state, ref, gains, PARAMS)
        assert 0.0 <= thrusts.t1 <= PARAMS.t_max
        assert 0.0 <= thrusts.t2 <= PARAMS.t_max


def test_positive_x_error_produces_corrective_acceleration():
    """Error positivo en x: actitud negativa y aceleración horizontal positiva"""
    errors, thrusts = compute_cascade(QuadState(), RefPoint(0.5, 0.0), MID, PARAMS)
    assert errors.e_theta < 0
    alpha = derivatives(QuadState(), thrusts, PARAMS)[5]
    assert alpha < 0
    tilted = QuadState(theta=-0.1)
    _, thrusts = compute_cascade(tilted, RefPoint(0.5, 0.0), MID, PARAMS)
    assert derivatives(tilted, thrusts, PARAMS)[3] > 0


def test_position_errors_scale_velocity_errors():
    small, _ = compute_cascade(QuadState(), RefPoint(0.2, 0.3), MID, PARAMS)
    large, _ = compute_cascade(QuadState(), RefPoint(0.4, 0.6), MID, PARAMS)
    assert large.e_vx == pytest.approx(2.0 * small.e_vx)
    assert large.e_vy == pytest.approx(2.0 * small.e_vy)


def test_validate_gains_accepts_bounds():
    lows = GainVector.from_array([r[0] for r in GAIN_RANGES.values()])
    assert validate_gains(lows) is lows


def test_validate_gains_names_violated_bound():
    gains = GainVector(1.25, 0.2, 7.5, 13.0, 1.75, 10.0)
    with pytest.raises(GainRangeError, match="kp_vx"):
        validate_gains(gains)


def test_gain_vector_requires_six_values():
    with pytest.raises(ValueError):
        GainVector.from_array([1.0, 2.0])
