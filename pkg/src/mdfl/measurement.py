"""User-impact measurement model.

Each associated multipath component contributes one measurement: the dB
change of its power relative to the idle channel. The model prediction sums
an exponential shadowing term over all virtual node pairs of the component,

    h(r) = sum_u phi * exp(-delta_u(r) / kappa),

with ``delta_u`` the excess path length of the user at ``r`` with respect to
pair ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .channel import Pulse
from .errors import EmptyNetworkError, OutOfWindowError
from .geometry import Component, excess_path_length

POWER_FLOOR_DB = -60.0

SequenceKey = tuple[int, tuple[str, ...]]


@dataclass(frozen=True)
class ModelParams:
    """Exponential model parameters with optional per-sequence overrides.

    ``overrides`` maps ``(link_index, surface_ids)`` to ``(phi_db, kappa_m, sigma_db)``.
    """

    phi_db: float = -2.5
    kappa_m: float = 0.05
    sigma_db: float = 1.5
    overrides: Mapping[SequenceKey, tuple[float, float, float]] = field(default_factory=dict)

    def __post_init__(self):
        for phi, kappa, sigma in [(self.phi_db, self.kappa_m, self.sigma_db), *self.overrides.values()]:
            if not kappa > 0:
                raise ValueError("kappa must be positive")
            if not sigma > 0:
                raise ValueError("sigma must be positive")

    def for_component(self, comp: Component) -> tuple[float, float, float]:
        key = (comp.link.index, comp.surfaces)
        return self.overrides.get(key, (self.phi_db, self.kappa_m, self.sigma_db))

    def scaled_sigma(self, factor: float) -> "ModelParams":
        return ModelParams(
            self.phi_db,
            self.kappa_m,
            self.sigma_db * factor,
            {k: (p, k_, s * factor) for k, (p, k_, s) in self.overrides.items()},
        )


class MeasurementModel:
    """Stacked model over the ordered set of associated components.

    Virtual node pairs of all components are flattened into one table so that
    predictions and gradients vectorise over query points.
    """

    def __init__(self, components: Sequence[Component], params: ModelParams = ModelParams()):
        self.components = list(components)
        self.params = params
        if not self.components:
            self.phi = self.kappa = self.sigma = np.empty(0)
            self.vt = self.vr = np.empty((0, 2))
            self.length = np.empty(0)
            self.owner = np.empty(0, dtype=int)
            return
        per = np.array([params.for_component(c) for c in self.components], dtype=float)
        self.phi, self.kappa, self.sigma = per.T
        self.vt = np.concatenate([c.vt for c in self.components])
        self.vr = np.concatenate([c.vr for c in self.components])
        self.length = np.concatenate([np.full(c.order + 1, c.length) for c in self.components])
        self.owner = np.concatenate(
            [np.full(c.order + 1, i) for i, c in enumerate(self.components)]
        )
        self._starts = np.flatnonzero(np.r_[True, np.diff(self.owner) != 0])

    def __len__(self):
        return len(self.components)

    @property
    def noise_covariance(self) -> NDArray:
        return np.diag(self.sigma**2)

    def _require_nonempty(self):
        if not self.components:
            raise EmptyNetworkError("no associated multipath components")

    def _pair_terms(self, r: NDArray):
        """Per-pair exponential terms for points ``r`` of shape (M, 2)."""
        kappa = self.kappa[self.owner]
        delta = excess_path_length(self.vt, self.vr, r[:, None, :], self.length)
        return self.phi[self.owner] * np.exp(-delta / kappa)

    def _sum_pairs(self, values: NDArray) -> NDArray:
        """Sum the last axis (pairs) into components."""
        # owner is sorted, so each component is one contiguous run of pairs
        return np.add.reduceat(values, self._starts, axis=-1)

    def predict(self, r: ArrayLike) -> NDArray:
        """Model prediction h(r) in dB, shape (M, n_components) or (n_components,)."""
        self._require_nonempty()
        r = np.asarray(r, dtype=float)
        single = r.ndim == 1
        pts = r.reshape(-1, 2)
        h = self._sum_pairs(self._pair_terms(pts))
        return h[0] if single else h

    def jacobian(self, r: ArrayLike) -> NDArray:
        """Gradient of h with respect to r, shape (M, n_components, 2) or (n_components, 2)."""
        self._require_nonempty()
        r = np.asarray(r, dtype=float)
        single = r.ndim == 1
        pts = r.reshape(-1, 2)
        terms = self._pair_terms(pts)
        to_vt = pts[:, None, :] - self.vt
        to_vr = pts[:, None, :] - self.vr
        n_vt = np.linalg.norm(to_vt, axis=-1)
        n_vr = np.linalg.norm(to_vr, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            grad_delta = to_vt / n_vt[..., None] + to_vr / n_vr[..., None]
        scale = -terms / self.kappa[self.owner]
        g = scale[..., None] * grad_delta
        jac = np.stack([self._sum_pairs(g[..., 0]), self._sum_pairs(g[..., 1])], axis=-1)
        return jac[0] if single else jac

    def min_node_distance(self, r: ArrayLike) -> NDArray:
        """Distance from each point to the nearest (virtual) node of the model."""
        pts = np.asarray(r, dtype=float).reshape(-1, 2)
        nodes = np.concatenate([self.vt, self.vr])
        return np.min(np.linalg.norm(pts[:, None, :] - nodes, axis=-1), axis=1)

    def sample(self, r: ArrayLike, n: int, rng: np.random.Generator) -> NDArray:
        """Noisy measurement vectors ``h(r) + w`` with ``w ~ N(0, R)``, shape (n, n_components)."""
        h = self.predict(np.asarray(r, dtype=float))
        return h + rng.standard_normal((n, len(self))) * self.sigma


def model_h(r: ArrayLike, comp: Component, params: ModelParams = ModelParams()) -> NDArray:
    """Power change in dB predicted for component ``comp`` with the user at ``r``."""
    phi, kappa, _ = params.for_component(comp)
    r = np.asarray(r, dtype=float)
    total = np.zeros(r.shape[:-1])
    for vt, vr in zip(comp.vt, comp.vr):
        total = total + phi * np.exp(-excess_path_length(vt, vr, r, comp.length) / kappa)
    return total


def predict_vector(
    r: ArrayLike, components: Sequence[Component], params: ModelParams = ModelParams()
) -> tuple[NDArray, NDArray]:
    """Predicted measurement vector and diagonal noise covariance at ``r``."""
    model = MeasurementModel(components, params)
    model._require_nonempty()
    return model.predict(as_single(r)), model.noise_covariance


def as_single(r: ArrayLike) -> NDArray:
    r = np.asarray(r, dtype=float)
    if r.shape != (2,):
        raise ValueError("expected a single 2-D point")
    return r


def power_change(alpha_hat: complex, alpha_bar: complex, floor_db: float = POWER_FLOOR_DB) -> float:
    """``20 log10(|alpha_hat| / |alpha_bar|)`` saturated below at ``floor_db``."""
    ref = abs(alpha_bar)
    if ref == 0.0:
        raise ZeroDivisionError("idle amplitude is zero; drop the component upstream")
    mag = abs(alpha_hat)
    if mag == 0.0:
        return floor_db
    return max(20.0 * np.log10(mag / ref), floor_db)


def project_amplitudes(signal: ArrayLike, pulse: Pulse, delays: Sequence[float]) -> NDArray:
    """Successive projections of the residual signal onto the pulse at each delay.

    Delays are processed in the given order; amplitude ``n`` is estimated after
    cancelling components ``0..n-1``.
    """
    residual = np.array(signal, dtype=complex)
    out = np.empty(len(delays), dtype=complex)
    for n, tau in enumerate(delays):
        if not 0.0 <= tau < pulse.symbol_duration_s:
            raise OutOfWindowError(f"delay {tau:g} s outside [0, {pulse.symbol_duration_s:g})")
        template = pulse.shifted(tau)
        out[n] = pulse.project(residual, template)
        residual -= out[n] * template
    return out


def project_amplitude(signal: ArrayLike, pulse: Pulse, delays: Sequence[float], n: int) -> complex:
    """Amplitude of the ``n``-th component (0-based) after cancelling the earlier ones."""
    return complex(project_amplitudes(signal, pulse, list(delays)[: n + 1])[n])


def measure_power_changes(
    signal: ArrayLike,
    pulse: Pulse,
    mean_delays: Sequence[float],
    mean_amplitudes: Sequence[complex],
    floor_db: float = POWER_FLOOR_DB,
) -> NDArray:
    """Measured dB power changes for components given by their idle statistics.

    Cancellation runs in ascending delay; results keep the input order.
    """
    delays = np.asarray(mean_delays, dtype=float)
    order = np.argsort(delays, kind="stable")
    alpha_sorted = project_amplitudes(signal, pulse, delays[order])
    alpha = np.empty_like(alpha_sorted)
    alpha[order] = alpha_sorted
    return np.array(
        [power_change(a, b, floor_db) for a, b in zip(alpha, mean_amplitudes)], dtype=float
    )
