"""Evaluation runs: bound maps, node-count sweeps, Monte-Carlo checks and association."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from . import channel as ch
from .association import AssociationResult, associate, build_union, write_report
from .channel import SPEED_OF_LIGHT
from .crlb import GridSpec, expected_rmse, fim, rmse_bound_grid
from .errors import ConfigurationError
from .geometry import Component, visible_set
from .measurement import MeasurementModel
from .output import write_grid_csv, write_pgm, write_table_csv
from .scenario import Scenario, make_circle_network

EFFECTIVE_RMSE_M = 1.0
MODES = ("dfl", "mdfl")

logger = logging.getLogger(__name__)


def visible_components(scenario: Scenario, mode: str = "mdfl") -> list[Component]:
    """Components of every link under perfect association, in link order.

    DFL uses only line-of-sight paths; MDFL adds visible reflections up to
    the scenario's maximum order.
    """
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    order = scenario.max_order if mode == "mdfl" else 0
    comps = []
    for link in scenario.build_links():
        comps.extend(visible_set(link, scenario.surfaces, order).components)
    return comps


@dataclass
class CrlbMap:
    mode: str
    grid: GridSpec
    values: np.ndarray
    n_components: int

    @property
    def effective_fraction(self) -> float:
        return float(np.mean(self.values < EFFECTIVE_RMSE_M))

    @property
    def effective_area_m2(self) -> float:
        return self.effective_fraction * (self.grid.x_max - self.grid.x_min) * (
            self.grid.y_max - self.grid.y_min
        )

    def summary(self) -> dict:
        finite = self.values[np.isfinite(self.values)]
        return {
            "mode": self.mode,
            "n_components": self.n_components,
            "grid_points": int(self.values.size),
            "effective_fraction": self.effective_fraction,
            "effective_area_m2": self.effective_area_m2,
            "singular_points": int(self.values.size - finite.size),
            "median_rmse_m": float(np.median(self.values)),
        }


def run_crlb_map(scenario: Scenario, mode: str = "mdfl", workers: int = 1) -> CrlbMap:
    if scenario.grid is None:
        raise ConfigurationError("scenario has no grid")
    comps = visible_components(scenario, mode)
    values = rmse_bound_grid(scenario.grid, comps, scenario.params, workers)
    return CrlbMap(mode, scenario.grid, values, len(comps))


def write_crlb_map(result: CrlbMap, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / f"crlb_{result.mode}.csv",
        "pgm": out / f"crlb_{result.mode}.pgm",
        "summary": out / f"crlb_{result.mode}_summary.json",
    }
    write_grid_csv(paths["csv"], result.grid, result.values)
    write_pgm(paths["pgm"], result.values)
    paths["summary"].write_text(json.dumps(result.summary(), indent=2) + "\n")
    return paths


@dataclass
class SweepResult:
    """Expected RMSE per node count (rows) and surface subset (columns)."""

    node_counts: list[int]
    subsets: list[tuple[str, ...]]
    rmse: np.ndarray

    def rows(self):
        for i, n in enumerate(self.node_counts):
            for j, sub in enumerate(self.subsets):
                yield n, len(sub), "+".join(sub) or "none", float(self.rmse[i, j])

    def relative_gain(self) -> np.ndarray:
        """``(DFL - full MDFL) / DFL`` per node count (first vs last subset)."""
        return (self.rmse[:, 0] - self.rmse[:, -1]) / self.rmse[:, 0]


def nested_subsets(scenario: Scenario) -> list[tuple[str, ...]]:
    ids = [s.id for s in scenario.surfaces]
    return [tuple(ids[:k]) for k in range(len(ids) + 1)]


def run_node_sweep(
    scenario: Scenario,
    node_counts: Sequence[int],
    subsets: Sequence[Sequence[str]] | None = None,
    region: GridSpec | None = None,
) -> SweepResult:
    """Expected RMSE over the central region for circular networks of each size."""
    if any(n < 3 for n in node_counts):
        raise ConfigurationError("node counts must be >= 3")
    subsets = [tuple(s) for s in (subsets if subsets is not None else nested_subsets(scenario))]
    radius, center = scenario.network_geometry()
    region = region or scenario.region or GridSpec.centered(center, 2.0, 2.0, 0.1)
    by_id = {s.id: s for s in scenario.surfaces}
    out = np.empty((len(node_counts), len(subsets)))
    for i, n in enumerate(node_counts):
        nodes = make_circle_network(n, radius, center)
        for j, sub in enumerate(subsets):
            sc = scenario.with_nodes(nodes).with_surfaces([by_id[s] for s in sub])
            comps = visible_components(sc, "mdfl")
            out[i, j] = expected_rmse(region, comps, scenario.params)
            logger.info("sweep N=%d surfaces=%s: %.4g m", n, sub, out[i, j])
    return SweepResult(list(node_counts), subsets, out)


def write_sweep(result: SweepResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep.csv"
    write_table_csv(
        path, ["n_nodes", "n_surfaces", "surfaces", "expected_rmse_m"], result.rows()
    )
    return path


class MLEstimator:
    """Maximum-likelihood position estimate over a rectangular search region.

    A coarse grid search picks the start point for a bounded least-squares
    refinement of the whitened residual. Components whose prediction is
    negligible over the whole region only add a constant to the cost and
    are left out.
    """

    def __init__(self, model: MeasurementModel, search: GridSpec, negligible_db: float = 1e-10):
        self.search = search
        self.grid_points = search.points()
        h = model.predict(self.grid_points)
        self.active = np.flatnonzero(np.max(np.abs(h), axis=0) > negligible_db)
        if self.active.size == 0:
            raise ConfigurationError("no component responds inside the search region")
        self.model = MeasurementModel([model.components[i] for i in self.active], model.params)
        self.w = 1.0 / self.model.sigma
        self.grid_h = h[:, self.active] * self.w
        self.grid_norm = np.sum(self.grid_h**2, axis=1)
        self.lower = np.array([search.x_min, search.y_min])
        self.upper = np.array([search.x_max, search.y_max])

    def estimate(self, z: np.ndarray) -> np.ndarray:
        zw = np.asarray(z)[self.active] * self.w
        k = int(np.argmin(self.grid_norm - 2 * self.grid_h @ zw))
        x0 = self.grid_points[k]
        res = least_squares(
            lambda r: self.model.predict(r) * self.w - zw,
            x0,
            jac=lambda r: self.model.jacobian(r) * self.w[:, None],
            bounds=(self.lower, self.upper),
            method="trf",
            x_scale=0.01,
        )
        return np.clip(res.x, self.lower, self.upper)


@dataclass
class MonteCarloResult:
    position: np.ndarray
    empirical_rmse: float
    std_error: float
    bound: float
    estimates: np.ndarray = field(repr=False)


def run_monte_carlo_validation(
    scenario: Scenario,
    positions: Sequence,
    trials: int = 1000,
    seed: int | None = None,
    mode: str = "mdfl",
    search_halfwidth: float = 1.0,
    coarse_resolution: float = 0.1,
) -> list[MonteCarloResult]:
    """Empirical RMSE of the ML estimator against the bound at each position.

    Measurements are drawn from the Gaussian model itself. The standard
    error of the empirical RMSE follows from the delta method.
    """
    if trials < 100:
        raise ConfigurationError("use at least 100 trials")
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    model = MeasurementModel(visible_components(scenario, mode), scenario.params)
    results = []
    for pos in positions:
        pos = np.asarray(pos, dtype=float)
        search = GridSpec.centered(pos, 2 * search_halfwidth, 2 * search_halfwidth, coarse_resolution)
        est = MLEstimator(model, search)
        z = model.sample(pos, trials, rng)
        r_hat = np.array([est.estimate(zi) for zi in z])
        sq = np.sum((r_hat - pos) ** 2, axis=1)
        rmse = float(np.sqrt(sq.mean()))
        se = float(sq.std(ddof=1) / np.sqrt(trials) / (2 * rmse)) if rmse > 0 else 0.0
        bound = fim(pos, model).rmse_bound
        results.append(MonteCarloResult(pos, rmse, se, bound, r_hat))
    return results


def high_information_positions(
    scenario: Scenario, n: int = 10, spacing: float = 1.0, min_node_distance: float = 0.5
) -> np.ndarray:
    """``n`` grid points with the smallest bounds, mutually ``spacing`` apart and away from nodes."""
    grid = scenario.grid or GridSpec(-5, 5, -5, 5)
    coarse = GridSpec(grid.x_min + 0.25, grid.x_max - 0.25, grid.y_min + 0.25, grid.y_max - 0.25, 0.25)
    model = MeasurementModel(visible_components(scenario, "mdfl"), scenario.params)
    pts = coarse.points()
    vals = rmse_bound_grid(coarse, model).ravel()
    far = np.min(np.linalg.norm(pts[:, None] - scenario.nodes, axis=-1), axis=1) > min_node_distance
    chosen: list[np.ndarray] = []
    for k in np.argsort(np.where(far, vals, np.inf), kind="stable"):
        if not far[k]:
            break
        if all(np.linalg.norm(pts[k] - c) >= spacing for c in chosen):
            chosen.append(pts[k])
        if len(chosen) == n:
            break
    return np.array(chosen)


@dataclass
class AssociationRun:
    results: list[AssociationResult]
    union: list[Component]
    stats: list[ch.IdleChannelStats]
    snapshots: list = field(repr=False, default_factory=list)


def run_association(scenario: Scenario, seed: int | None = None, cutoff: float | None = None) -> AssociationRun:
    """Synthesize idle channels, initialise every link and associate its components."""
    cfg = scenario.channel
    pulse = cfg.pulse()
    cutoff = cutoff if cutoff is not None else SPEED_OF_LIGHT / cfg.bandwidth_hz
    seeds = np.random.SeedSequence(scenario.seed if seed is None else seed).spawn(
        len(scenario.link_pairs())
    )
    results, stats, log = [], [], []
    for link, ss in zip(scenario.build_links(), seeds):
        vis = visible_set(link, scenario.surfaces, scenario.max_order)
        real = ch.idle_realization(link, vis.components, cfg, pulse)
        st = ch.initialize_link(
            real,
            pulse,
            cfg.t_ini_s,
            cfg.t_g_s,
            np.random.default_rng(ss),
            max_components=cfg.max_components,
            detection_threshold_db=cfg.detection_threshold_db,
            snapshot_log=log,
        )
        stats.append(st)
        results.append(associate(vis.components, st.estimated_path_lengths, cutoff, link.index))
    return AssociationRun(results, build_union(results), stats, log)


def write_association(run: AssociationRun, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "association.csv", "snapshots": out / "snapshots.csv"}
    write_report(paths["report"], run.results)
    ch.write_snapshot_csv(paths["snapshots"], run.snapshots)
    return paths
