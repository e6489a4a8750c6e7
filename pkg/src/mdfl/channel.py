"""Multipath channel synthesis and idle-channel initialization.

Signals are complex baseband sequences sampled on a fixed observation
window. The window starts ``span`` chips before delay 0 and ends ``span``
chips after the symbol duration so that every pulse with a delay inside
``[0, T_sym)`` fits completely.

Power conventions: ``noise_variance`` is the per-sample noise power, and the
SNR of a waveform is its mean per-sample power over the observation window
divided by that noise power. Detection thresholds use the same scale.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize_scalar

from .errors import ConfigurationError, OutOfWindowError
from .geometry import Component, Link

SPEED_OF_LIGHT = 299_792_458.0

logger = logging.getLogger(__name__)


def rrc(t: ArrayLike, chip: float, rolloff: float) -> NDArray:
    """Root-raised-cosine impulse response (unit energy, untruncated)."""
    t = np.asarray(t, dtype=float) / chip
    b = rolloff
    out = np.empty_like(t)
    at_zero = np.abs(t) < 1e-12
    at_sing = np.abs(np.abs(t) - 1.0 / (4.0 * b)) < 1e-9 if b > 0 else np.zeros_like(at_zero)
    reg = ~(at_zero | at_sing)
    tr = t[reg]
    num = np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))
    den = np.pi * tr * (1 - (4 * b * tr) ** 2)
    out[reg] = num / den
    out[at_zero] = 1 - b + 4 * b / np.pi
    out[at_sing] = (b / np.sqrt(2)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
    )
    return out / np.sqrt(chip)


@dataclass(frozen=True)
class Pulse:
    """Band-limited unit-energy transmit pulse and its sampling grid.

    The chip duration is ``1 / bandwidth_hz``; ``span`` is the one-sided
    truncation length in chips.
    """

    bandwidth_hz: float = 500e6
    rolloff: float = 0.5
    sample_rate_hz: float = 2e9
    symbol_duration_s: float = 200e-9
    span: int = 32

    def __post_init__(self):
        if self.sample_rate_hz < 2 * self.bandwidth_hz:
            raise ConfigurationError("sample rate must be at least twice the bandwidth")
        if not 0 < self.rolloff <= 1:
            raise ConfigurationError("rolloff must be in (0, 1]")

    @property
    def chip(self) -> float:
        return 1.0 / self.bandwidth_hz

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @cached_property
    def half_len(self) -> int:
        return int(np.ceil(self.span * self.chip * self.sample_rate_hz))

    @cached_property
    def n_lags(self) -> int:
        return int(round(self.symbol_duration_s * self.sample_rate_hz))

    @cached_property
    def n_samples(self) -> int:
        return self.n_lags + 2 * self.half_len

    @cached_property
    def times(self) -> NDArray:
        return (np.arange(self.n_samples) - self.half_len) * self.dt

    @property
    def window_duration(self) -> float:
        return self.n_samples * self.dt

    @cached_property
    def _norm(self) -> float:
        k = np.arange(-self.half_len, self.half_len + 1) * self.dt
        energy = np.sum(rrc(k, self.chip, self.rolloff) ** 2) * self.dt
        return 1.0 / np.sqrt(energy)

    @cached_property
    def template(self) -> NDArray:
        """On-grid pulse samples centred at zero, length ``2 * half_len + 1``."""
        k = np.arange(-self.half_len, self.half_len + 1) * self.dt
        return rrc(k, self.chip, self.rolloff) * self._norm

    def waveform(self, t: ArrayLike) -> NDArray:
        t = np.asarray(t, dtype=float)
        s = rrc(t, self.chip, self.rolloff) * self._norm
        return np.where(np.abs(t) <= self.half_len * self.dt + 1e-15, s, 0.0)

    def shifted(self, tau: float) -> NDArray:
        """Samples of ``s(t - tau)`` on the observation grid."""
        return self.waveform(self.times - tau)

    def inner(self, signal: NDArray, template: NDArray) -> complex:
        """Projection ``integral conj(template) * signal dt``."""
        return complex(np.vdot(template, signal) * self.dt)

    def project(self, signal: NDArray, template: NDArray) -> complex:
        """Least-squares amplitude of ``template`` in ``signal``.

        Truncation makes the energy of off-grid shifts deviate slightly from
        one, so the plain inner product is normalised by it.
        """
        return self.inner(signal, template) / self.energy(template)

    def energy(self, signal: NDArray) -> float:
        return float(np.sum(np.abs(signal) ** 2) * self.dt)

    def mean_power(self, signal: NDArray) -> float:
        return float(np.mean(np.abs(signal) ** 2))


@dataclass(frozen=True)
class ChannelRealization:
    """Components ``(alpha, tau)`` of one link plus per-sample noise variance."""

    link: int
    amplitudes: NDArray
    delays: NDArray
    noise_variance: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=complex).reshape(-1))
        object.__setattr__(self, "delays", np.asarray(self.delays, dtype=float).reshape(-1))
        if self.amplitudes.shape != self.delays.shape:
            raise ValueError("amplitudes and delays differ in length")
        if np.any(self.delays < 0):
            raise OutOfWindowError("negative delay")
        if self.noise_variance < 0:
            raise ValueError("negative noise variance")


@dataclass(frozen=True)
class IdleChannelStats:
    link: int
    mean_amplitudes: NDArray
    mean_delays: NDArray
    support: NDArray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def estimated_path_lengths(self) -> NDArray:
        return SPEED_OF_LIGHT * self.mean_delays

    def __len__(self):
        return len(self.mean_delays)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def noiseless_signal(realization: ChannelRealization, pulse: Pulse) -> NDArray:
    if np.any(realization.delays >= pulse.symbol_duration_s):
        raise OutOfWindowError(
            f"delay beyond symbol duration {pulse.symbol_duration_s:g} s: {realization.delays.max():g}"
        )
    y = np.zeros(pulse.n_samples, dtype=complex)
    for a, tau in zip(realization.amplitudes, realization.delays):
        y += a * pulse.shifted(tau)
    return y


def synthesize_received(realization: ChannelRealization, pulse: Pulse, rng_seed=None) -> NDArray:
    """Sum of delayed, scaled pulses plus circular Gaussian noise."""
    y = noiseless_signal(realization, pulse)
    if realization.noise_variance > 0:
        rng = _rng(rng_seed)
        scale = np.sqrt(realization.noise_variance / 2)
        y = y + scale * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return y


def noise_variance_for_snr(realization: ChannelRealization, pulse: Pulse, snr_db: float) -> float:
    """Per-sample noise variance giving the requested window SNR."""
    power = pulse.mean_power(noiseless_signal(realization, pulse))
    return power / 10 ** (snr_db / 10)


def _matched_gain(residual: NDArray, pulse: Pulse, tau: float) -> float:
    template = pulse.shifted(tau)
    return abs(pulse.inner(residual, template)) / np.sqrt(pulse.energy(template))


def _refine_delay(residual: NDArray, pulse: Pulse, tau0: float) -> float:
    lo = max(0.0, tau0 - pulse.dt)
    hi = min(pulse.symbol_duration_s - 1e-15, tau0 + pulse.dt)
    if hi <= lo:
        return tau0
    res = minimize_scalar(
        lambda tau: -_matched_gain(residual, pulse, tau),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-6 * pulse.dt},
    )
    return float(res.x)


def _peak_delay(residual: NDArray, pulse: Pulse) -> float:
    corr = np.abs(np.correlate(residual, pulse.template, mode="valid"))
    k = int(np.argmax(corr))
    offset = 0.0
    if 0 < k < corr.size - 1:
        a, b, c = corr[k - 1], corr[k], corr[k + 1]
        den = a - 2 * b + c
        if den < 0:
            offset = 0.5 * (a - c) / den
    return (k + offset) * pulse.dt


def _sweep(residual: NDArray, pulse: Pulse, comps: list[list]) -> NDArray:
    """One cyclic re-estimation pass; updates ``comps`` in place and returns the new residual."""
    for comp in comps:
        partial = residual + comp[0] * comp[2]
        tau = _refine_delay(partial, pulse, comp[1])
        template = pulse.shifted(tau)
        alpha = pulse.project(partial, template)
        residual = partial - alpha * template
        comp[:] = [alpha, tau, template]
    return residual


def estimate_components(
    signal: ArrayLike,
    pulse: Pulse,
    max_components: int = 10,
    detection_threshold_db: float = 6.0,
    noise_variance: float = 0.0,
    refine_sweeps: int = 2,
) -> list[tuple[complex, float]]:
    """Matched-filter detection with successive interference cancellation.

    Each step takes the strongest correlation peak, refines its delay by
    parabolic interpolation followed by a bounded 1-D search of the
    projection magnitude, projects for the amplitude and cancels the
    component. After every new detection the earlier components are
    re-estimated cyclically against the updated residual, which removes the
    bias caused by overlapping pulse tails before the next peak is searched.
    Detection stops when a component's window power falls below
    ``detection_threshold_db`` above the noise floor. Returns ``(alpha, tau)`` sorted by descending ``|alpha|``.
    """
    y = np.asarray(signal, dtype=complex)
    if y.size != pulse.n_samples:
        raise ValueError(f"signal has {y.size} samples, pulse grid has {pulse.n_samples}")
    floor = max(noise_variance, 1e-10 * pulse.mean_power(y), np.finfo(float).tiny)
    threshold = floor * 10 ** (detection_threshold_db / 10)

    residual = y.copy()
    comps: list[list] = []
    for _ in range(max_components):
        tau = _refine_delay(residual, pulse, _peak_delay(residual, pulse))
        template = pulse.shifted(tau)
        alpha = pulse.project(residual, template)
        if abs(alpha) ** 2 / pulse.window_duration < threshold:
            break
        residual -= alpha * template
        comps.append([alpha, tau, template])
        if len(comps) > 1:
            residual = _sweep(residual, pulse, comps)

    for _ in range(refine_sweeps if len(comps) > 1 else 0):
        residual = _sweep(residual, pulse, comps)

    comps.sort(key=lambda c: -abs(c[0]))
    return [(complex(a), float(t)) for a, t, _ in comps]


def cluster_estimates(
    snapshots: Sequence[Sequence[tuple[complex, float]]],
    radius: float,
    min_support: float = 0.5,
) -> list[tuple[complex, float, int]]:
    """Group per-snapshot estimates by delay proximity and average each group.

    Estimates are sorted by delay and a new cluster starts whenever the gap to
    the running mean of the current cluster exceeds ``radius``. Clusters seen
    in fewer than ``min_support`` of the snapshots are dropped.
    """
    pooled = sorted((tau, alpha) for snap in snapshots for alpha, tau in snap)
    clusters: list[list[tuple[float, complex]]] = []
    for tau, alpha in pooled:
        if clusters and abs(tau - np.mean([t for t, _ in clusters[-1]])) <= radius:
            clusters[-1].append((tau, alpha))
        else:
            clusters.append([(tau, alpha)])
    need = min_support * len(snapshots)
    out = []
    for cl in clusters:
        if len(cl) >= need:
            taus, alphas = zip(*cl)
            out.append((complex(np.mean(alphas)), float(np.mean(taus)), len(cl)))
    return out


def initialize_link(
    realization: ChannelRealization,
    pulse: Pulse,
    t_ini: float,
    t_g: float,
    rng_seed=None,
    *,
    max_components: int = 10,
    detection_threshold_db: float = 6.0,
    min_support: float = 0.5,
    snapshot_log: list | None = None,
) -> IdleChannelStats:
    """Mean amplitudes and delays of the idle channel over ``floor(t_ini / t_g)`` snapshots."""
    n_snap = int(np.floor(t_ini / t_g + 1e-9)) if t_g > 0 else 0
    if n_snap < 1:
        raise ConfigurationError(f"no snapshots: t_ini={t_ini!r}, t_g={t_g!r}")
    rng = _rng(rng_seed)
    snapshots = []
    for i in range(n_snap):
        y = synthesize_received(realization, pulse, rng)
        est = estimate_components(
            y, pulse, max_components, detection_threshold_db, realization.noise_variance
        )
        snapshots.append(est)
        if snapshot_log is not None:
            snapshot_log.extend((realization.link, i, tau, alpha) for alpha, tau in est)
    clusters = cluster_estimates(snapshots, 0.5 * pulse.chip, min_support)
    logger.debug("link %d: %d snapshots, %d clusters", realization.link, n_snap, len(clusters))
    return IdleChannelStats(
        realization.link,
        np.array([c[0] for c in clusters], dtype=complex),
        np.array([c[1] for c in clusters], dtype=float),
        np.array([c[2] for c in clusters], dtype=int),
    )


@dataclass(frozen=True)
class ChannelConfig:
    """Synthetic idle-channel parameters.

    Component amplitudes are ``gamma**order / d`` with carrier phase
    ``-2 pi f_c d / c``; the per-link noise variance follows from ``snr_db``.
    """

    bandwidth_hz: float = 500e6
    rolloff: float = 0.5
    sample_rate_hz: float = 2e9
    symbol_duration_s: float = 200e-9
    carrier_hz: float = 6.5e9
    reflection_coeff: float = 0.7
    snr_db: float = 30.0
    t_ini_s: float = 1.0
    t_g_s: float = 0.1
    max_components: int = 10
    detection_threshold_db: float = 6.0

    def pulse(self) -> Pulse:
        return Pulse(self.bandwidth_hz, self.rolloff, self.sample_rate_hz, self.symbol_duration_s)


def idle_realization(
    link: Link | int, components: Iterable[Component], config: ChannelConfig, pulse: Pulse | None = None
) -> ChannelRealization:
    comps = list(components)
    pulse = pulse or config.pulse()
    lengths = np.array([c.length for c in comps], dtype=float)
    orders = np.array([c.order for c in comps], dtype=float)
    amps = config.reflection_coeff**orders / np.maximum(lengths, 1e-3)
    amps = amps * np.exp(-2j * np.pi * config.carrier_hz * lengths / SPEED_OF_LIGHT)
    index = link.index if isinstance(link, Link) else int(link)
    real = ChannelRealization(index, amps, lengths / SPEED_OF_LIGHT)
    if not comps:
        return real
    return ChannelRealization(index, amps, real.delays, noise_variance_for_snr(real, pulse, config.snr_db))


def user_realization(
    idle: ChannelRealization, power_change_db: ArrayLike
) -> ChannelRealization:
    """Idle channel with each amplitude scaled by a dB power change."""
    gain = 10 ** (np.asarray(power_change_db, dtype=float) / 20)
    return ChannelRealization(idle.link, idle.amplitudes * gain, idle.delays, idle.noise_variance)


def write_snapshot_csv(path, rows: Iterable[tuple[int, int, float, complex]]) -> None:
    """Debug dump: link, snapshot index, delay in ns, real and imaginary amplitude."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["link", "snapshot", "tau_ns", "re_alpha", "im_alpha"])
        for link, i, tau, alpha in rows:
            w.writerow([link, i, f"{tau * 1e9:.6f}", repr(alpha.real), repr(alpha.imag)])
