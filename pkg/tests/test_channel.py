import math

import numpy as np
import pytest

from mdfl.channel import (
    SPEED_OF_LIGHT,
    ChannelConfig,
    ChannelRealization,
    Pulse,
    cluster_estimates,
    estimate_components,
    idle_realization,
    initialize_link,
    noiseless_signal,
    synthesize_received,
    user_realization,
    write_snapshot_csv,
)
from mdfl.errors import ConfigurationError, OutOfWindowError
from mdfl.geometry import Link, Surface, visible_set

PULSE = Pulse()
B = PULSE.bandwidth_hz


def test_pulse_unit_energy():
    assert PULSE.energy(PULSE.template) == pytest.approx(1.0, abs=1e-6)
    # off-grid shifts keep unit energy up to the band-limited sampling error
    assert PULSE.energy(PULSE.shifted(17.3e-9)) == pytest.approx(1.0, abs=1e-4)


def test_pulse_sample_rate_constraint():
    with pytest.raises(ConfigurationError):
        Pulse(bandwidth_hz=500e6, sample_rate_hz=900e6)


def test_single_component_equals_pulse():
    y = synthesize_received(ChannelRealization(0, [1.0], [0.0]), PULSE, rng_seed=0)
    np.testing.assert_array_equal(y, PULSE.shifted(0.0))


def test_zero_components_zero_signal():
    y = synthesize_received(ChannelRealization(0, [], []), PULSE, rng_seed=0)
    assert y.shape == (PULSE.n_samples,)
    assert not np.any(y)


def test_out_of_window_delay():
    with pytest.raises(OutOfWindowError):
        synthesize_received(ChannelRealization(0, [1.0], [PULSE.symbol_duration_s]), PULSE)


def test_negative_delay_rejected():
    with pytest.raises(ValueError):
        ChannelRealization(0, [1.0], [-1e-9])


def test_two_peaks_in_matched_filter_output():
    taus = [20e-9, 20e-9 + 3 / B]
    y = noiseless_signal(ChannelRealization(0, [1.0, 0.8], taus), PULSE)
    corr = np.abs(np.correlate(y, PULSE.template, mode="valid"))
    interior = (corr[1:-1] > corr[:-2]) & (corr[1:-1] >= corr[2:])
    peaks = np.flatnonzero(interior) + 1
    strong = peaks[corr[peaks] > 0.5 * corr.max()]
    np.testing.assert_allclose(strong * PULSE.dt, taus, atol=PULSE.dt)


def test_energy_normalization_for_separated_paths():
    amps = np.array([1.0, 0.6j, -0.3])
    taus = np.array([10e-9, 80e-9, 150e-9])
    y = noiseless_signal(ChannelRealization(0, amps, taus), PULSE)
    assert PULSE.energy(y) == pytest.approx(np.sum(np.abs(amps) ** 2), abs=1e-6)


def test_determinism():
    real = ChannelRealization(0, [1.0, 0.5j], [10e-9, 40e-9], noise_variance=1e-3)
    a = synthesize_received(real, PULSE, rng_seed=42)
    b = synthesize_received(real, PULSE, rng_seed=42)
    np.testing.assert_array_equal(a, b)
    assert estimate_components(a, PULSE, noise_variance=1e-3) == estimate_components(b, PULSE, noise_variance=1e-3)
    assert not np.array_equal(a, synthesize_received(real, PULSE, rng_seed=43))


def test_noise_statistics():
    real = ChannelRealization(0, [], [], noise_variance=2.0)
    y = np.concatenate([synthesize_received(real, PULSE, rng_seed=s) for s in range(50)])
    assert np.mean(np.abs(y) ** 2) == pytest.approx(2.0, rel=0.03)
    assert abs(np.mean(y.real**2) - np.mean(y.imag**2)) < 0.06


def test_estimate_noiseless_single_path():
    y = noiseless_signal(ChannelRealization(0, [0.5], [20e-9]), PULSE)
    ((alpha, tau),) = estimate_components(y, PULSE)
    assert abs(alpha - 0.5) < 1e-3
    assert abs(tau - 20e-9) < 0.05 / B


def test_estimate_off_grid_delay():
    y = noiseless_signal(ChannelRealization(0, [0.2 - 0.7j], [33.3e-9]), PULSE)
    ((alpha, tau),) = estimate_components(y, PULSE)
    assert abs(alpha - (0.2 - 0.7j)) < 1e-3
    assert abs(tau - 33.3e-9) < 0.01 / B


def test_noise_only_gives_empty_list():
    real = ChannelRealization(0, [], [], noise_variance=1.0)
    hits = sum(
        bool(estimate_components(synthesize_received(real, PULSE, rng_seed=s), PULSE, noise_variance=1.0))
        for s in range(200)
    )
    assert hits <= 2


def test_two_paths_ordered_by_strength():
    amps = [0.4, 1.0j]
    taus = [30e-9, 90e-9]
    est = estimate_components(noiseless_signal(ChannelRealization(0, amps, taus), PULSE), PULSE)
    assert len(est) == 2
    assert abs(est[0][0]) > abs(est[1][0])
    assert abs(est[0][0] - 1.0j) < 1e-3 and abs(est[0][1] - 90e-9) < 0.05 / B
    assert abs(est[1][0] - 0.4) < 1e-3 and abs(est[1][1] - 30e-9) < 0.05 / B


def test_equal_paths_both_recovered():
    taus = [40e-9, 120e-9]
    est = estimate_components(noiseless_signal(ChannelRealization(0, [1.0, 1.0], taus), PULSE), PULSE)
    np.testing.assert_allclose(sorted(t for _, t in est), taus, atol=0.05 / B)


def test_max_components_cap():
    taus = np.arange(5) * 10e-9 + 10e-9
    y = noiseless_signal(ChannelRealization(0, np.ones(5), taus), PULSE)
    assert len(estimate_components(y, PULSE, max_components=3)) == 3


def test_closely_spaced_paths_at_two_chips():
    amps = np.array([1.0, -0.7j, 0.5])
    taus = np.array([50e-9, 50e-9 + 2 / B, 50e-9 + 4 / B])
    est = estimate_components(noiseless_signal(ChannelRealization(0, amps, taus), PULSE), PULSE)
    est.sort(key=lambda e: e[1])
    np.testing.assert_allclose([t for _, t in est], taus, atol=0.1 / B)
    np.testing.assert_allclose([a for a, _ in est], amps, atol=0.01)


def test_initialize_constant_channel():
    real = ChannelRealization(3, [1.0, 0.3j], [15e-9, 60e-9])
    stats = initialize_link(real, PULSE, t_ini=1.0, t_g=0.25)
    single = sorted(estimate_components(noiseless_signal(real, PULSE), PULSE), key=lambda e: e[1])
    assert stats.link == 3
    np.testing.assert_allclose(stats.mean_delays, [t for _, t in single], rtol=1e-12)
    np.testing.assert_allclose(stats.mean_amplitudes, [a for a, _ in single], rtol=1e-12)
    np.testing.assert_array_equal(stats.support, [4, 4])


def test_estimated_path_lengths_definition():
    real = ChannelRealization(0, [1.0, 0.5], [4.0 / SPEED_OF_LIGHT, 10.77 / SPEED_OF_LIGHT])
    stats = initialize_link(real, PULSE, 0.3, 0.1)
    np.testing.assert_array_equal(stats.estimated_path_lengths, SPEED_OF_LIGHT * stats.mean_delays)
    np.testing.assert_allclose(stats.estimated_path_lengths, [4.0, 10.77], atol=0.05 * SPEED_OF_LIGHT / B)


def test_zero_snapshots_is_configuration_error():
    real = ChannelRealization(0, [1.0], [10e-9])
    with pytest.raises(ConfigurationError):
        initialize_link(real, PULSE, t_ini=0.05, t_g=0.1)


def test_averaging_shrinks_delay_error():
    amp, tau = 1.0, 37.2e-9
    nv = abs(amp) ** 2 / PULSE.window_duration / 10.0  # 10 dB window SNR
    real = ChannelRealization(0, [amp], [tau], nv)
    single, averaged = [], []
    for seed in range(40):
        rng = np.random.default_rng(seed)
        single.append(estimate_components(synthesize_received(real, PULSE, rng), PULSE, noise_variance=nv)[0][1])
        averaged.append(initialize_link(real, PULSE, 10.0, 0.1, rng).mean_delays[0])
    ratio = np.std(averaged) / np.std(single)
    # expected 1/sqrt(100) = 0.1; 40 seeds leave roughly 20 % scatter on each std
    assert 0.05 < ratio < 0.2


def test_cluster_estimates_support_filter():
    snaps = [[(1.0, 10e-9), (0.1, 50e-9)], [(1.0, 10.1e-9)], [(1.0, 9.9e-9)], [(1.0, 10e-9)]]
    out = cluster_estimates(snaps, radius=1e-9, min_support=0.5)
    assert len(out) == 1
    alpha, tau, support = out[0]
    assert support == 4
    assert tau == pytest.approx(10e-9)


def test_snapshot_log_and_csv(tmp_path):
    real = ChannelRealization(2, [1.0], [12e-9], 1e-4)
    log = []
    initialize_link(real, PULSE, 0.3, 0.1, 0, snapshot_log=log)
    assert [row[:2] for row in log] == [(2, 0), (2, 1), (2, 2)]
    path = tmp_path / "snap.csv"
    write_snapshot_csv(path, log)
    lines = path.read_text().splitlines()
    assert lines[0] == "link,snapshot,tau_ns,re_alpha,im_alpha"
    assert len(lines) == 4


def test_idle_and_user_realizations():
    link = Link(0, 0, 1, (0, 0), (4, 0))
    comps = visible_set(link, [Surface("w", (-10, 5), (10, 5))], 1).components
    cfg = ChannelConfig()
    idle = idle_realization(link, comps, cfg)
    np.testing.assert_allclose(idle.delays * SPEED_OF_LIGHT, [4.0, math.sqrt(116)])
    np.testing.assert_allclose(np.abs(idle.amplitudes), [1 / 4.0, 0.7 / math.sqrt(116)])
    user = user_realization(idle, [-6.0206, 0.0])
    np.testing.assert_allclose(np.abs(user.amplitudes), [0.125, 0.7 / math.sqrt(116)], rtol=1e-5)
    assert user.noise_variance == idle.noise_variance
