import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdfl.channel import ChannelRealization, Pulse, noiseless_signal, synthesize_received
from mdfl.errors import EmptyNetworkError, OutOfWindowError
from mdfl.geometry import Link, Surface, build_component, visible_set
from mdfl.measurement import (
    MeasurementModel,
    ModelParams,
    measure_power_changes,
    model_h,
    power_change,
    predict_vector,
    project_amplitude,
    project_amplitudes,
)

PARAMS = ModelParams(-2.5, 0.05, 1.5)
WALL = Surface("w", (-10, 5), (10, 5))
LINK = Link(0, 0, 1, (0, 0), (4, 0))


def los():
    return build_component(LINK, (), [])


def reflected():
    return build_component(LINK, ("w",), [WALL])


def test_h_on_los_segment_equals_phi():
    assert model_h((1.3, 0.0), los(), PARAMS) == pytest.approx(-2.5)


def test_h_at_reflection_point_doubles():
    # both pair segments of the first-order path pass through (2, 5)
    assert model_h((2.0, 5.0), reflected(), PARAMS) == pytest.approx(-5.0)


def test_h_far_from_paths_is_negligible():
    comp = reflected()
    r = np.array([2.0, -1.0])
    deltas = [np.linalg.norm(r - a) + np.linalg.norm(r - b) - comp.length for a, b in zip(comp.vt, comp.vr)]
    assert min(deltas) >= 10 * PARAMS.kappa_m
    assert abs(model_h(r, comp, PARAMS)) <= 2 * 2.5 * math.exp(-10)
    assert abs(model_h(r, comp, PARAMS)) < 2e-4


def test_h_closed_form():
    r = (2.0, 0.3)
    delta = 2 * math.hypot(2, 0.3) - 4
    assert model_h(r, los(), PARAMS) == pytest.approx(-2.5 * math.exp(-delta / 0.05), rel=1e-12)


def test_model_matches_per_component_function():
    comps = [los(), reflected()]
    model = MeasurementModel(comps, PARAMS)
    pts = np.random.default_rng(0).uniform(-1, 5, (50, 2))
    h = model.predict(pts)
    for k, c in enumerate(comps):
        np.testing.assert_allclose(h[:, k], model_h(pts, c, PARAMS), rtol=1e-12, atol=0)


@settings(max_examples=200)
@given(st.floats(-3, 7), st.floats(-3, 8))
def test_sign_and_bounds(x, y):
    comp = reflected()
    h = model_h((x, y), comp, PARAMS)
    assert (comp.order + 1) * PARAMS.phi_db - 1e-12 <= h <= 0.0
    deltas = [math.dist((x, y), a) + math.dist((x, y), b) - comp.length for a, b in zip(comp.vt, comp.vr)]
    if min(deltas) / PARAMS.kappa_m < 700:
        assert h < 0


def test_monotone_decay_away_from_path():
    ys = np.linspace(0.0, 1.0, 200)
    h = model_h(np.column_stack([np.full_like(ys, 2.0), ys]), los(), PARAMS)
    assert np.all(np.diff(np.abs(h)) < 0)


def test_swap_symmetry():
    walls = [WALL, Surface("v", (6, -3), (6, 8))]
    rng = np.random.default_rng(3)
    for seq in [(), ("w",), ("v",), ("w", "v"), ("v", "w")]:
        fwd = build_component(LINK, seq, walls)
        rev = build_component(LINK.reversed(), seq[::-1], walls)
        pts = rng.uniform(-2, 8, (30, 2))
        np.testing.assert_allclose(model_h(pts, fwd, PARAMS), model_h(pts, rev, PARAMS), rtol=1e-10, atol=1e-300)


def test_predict_vector_shapes_and_far_field():
    comps = visible_set(LINK, [WALL], 1).components + [build_component(LINK, (), [])]
    z, R = predict_vector((30.0, -30.0), comps, PARAMS)
    assert z.shape == (3,)
    assert R.shape == (3, 3)
    np.testing.assert_allclose(z, 0.0, atol=1e-12)
    np.testing.assert_allclose(R, np.diag([2.25] * 3))
    with pytest.raises(EmptyNetworkError):
        predict_vector((0, 0), [], PARAMS)


def test_sampled_measurements_match_model_statistics():
    comps = [los(), reflected()]
    model = MeasurementModel(comps, PARAMS)
    r = np.array([2.0, 0.05])
    draws = model.sample(r, 10_000, np.random.default_rng(11))
    h = model.predict(r)
    n = draws.shape[0]
    assert np.all(np.abs(draws.mean(axis=0) - h) < 3 * 1.5 / math.sqrt(n))
    # variance of the sample variance for Gaussian data: 2 sigma^4 / (n - 1)
    assert np.all(np.abs(draws.var(axis=0, ddof=1) - 2.25) < 3 * math.sqrt(2 * 2.25**2 / (n - 1)))


def test_per_sequence_overrides():
    params = ModelParams(-2.5, 0.05, 1.5, {(0, ("w",)): (-4.0, 0.1, 2.0)})
    model = MeasurementModel([los(), reflected()], params)
    np.testing.assert_allclose(model.sigma, [1.5, 2.0])
    assert model_h((2.0, 5.0), reflected(), params) == pytest.approx(-8.0)


def test_invalid_params():
    with pytest.raises(ValueError):
        ModelParams(kappa_m=0.0)
    with pytest.raises(ValueError):
        ModelParams(sigma_db=-1.0)


@pytest.mark.parametrize(
    "alpha_hat, alpha_bar, expected",
    [
        (0.3 + 0.4j, 0.5, 0.0),
        (0.25, -0.5j, 20 * math.log10(0.5)),
        (0.0, 1.0, -60.0),
    ],
)
def test_power_change_examples(alpha_hat, alpha_bar, expected):
    assert power_change(alpha_hat, alpha_bar) == pytest.approx(expected)


def test_power_change_half_amplitude_value():
    assert power_change(0.5, 1.0) == pytest.approx(-6.0206, abs=1e-4)


def test_power_change_zero_reference():
    with pytest.raises(ZeroDivisionError):
        power_change(1.0, 0.0)


def test_power_change_floor_is_configurable():
    assert power_change(1e-6, 1.0, floor_db=-40.0) == -40.0


PULSE = Pulse()


def test_project_single_path():
    alpha = 0.5 - 0.2j
    y = noiseless_signal(ChannelRealization(0, [alpha], [20e-9]), PULSE)
    assert abs(project_amplitude(y, PULSE, [20e-9], 0) - alpha) < 1e-6


def test_project_after_cancellation():
    a = [1.0 + 0.5j, -0.3 + 0.7j]
    tau = [20e-9, 20e-9 + 3 * PULSE.chip]
    y = noiseless_signal(ChannelRealization(0, a, tau), PULSE)
    assert abs(project_amplitude(y, PULSE, tau, 1) - a[1]) < 1e-3


def test_project_zero_signal_and_window():
    y = np.zeros(PULSE.n_samples, complex)
    assert project_amplitude(y, PULSE, [10e-9], 0) == 0
    with pytest.raises(OutOfWindowError):
        project_amplitudes(y, PULSE, [PULSE.symbol_duration_s])


def test_projection_is_linear():
    rng = np.random.default_rng(5)
    delays = [15e-9, 40e-9, 41.3e-9]
    y1 = rng.standard_normal(PULSE.n_samples) + 1j * rng.standard_normal(PULSE.n_samples)
    y2 = rng.standard_normal(PULSE.n_samples) + 1j * rng.standard_normal(PULSE.n_samples)
    c = 0.7 - 1.3j
    lhs = project_amplitudes(y1 + c * y2, PULSE, delays)
    rhs = project_amplitudes(y1, PULSE, delays) + c * project_amplitudes(y2, PULSE, delays)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def test_measured_power_changes_follow_planted_gains():
    idle = ChannelRealization(0, [1.0, 0.5j, 0.3], [12e-9, 30e-9, 55e-9])
    gains_db = np.array([-2.0, 0.0, -5.5])
    user = ChannelRealization(0, idle.amplitudes * 10 ** (gains_db / 20), idle.delays)
    y = synthesize_received(user, PULSE)
    # unsorted input order is preserved
    order = [2, 0, 1]
    z = measure_power_changes(y, PULSE, idle.delays[order], idle.amplitudes[order])
    np.testing.assert_allclose(z, gains_db[order], atol=1e-3)
