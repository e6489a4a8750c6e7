"""Fisher information and Cramér-Rao bounds on the user position."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import EmptyNetworkError, SingularGradientError, UndefinedExpectationError
from .geometry import GEO_TOL, Component
from .measurement import MeasurementModel, ModelParams

COND_LIMIT = 1e12

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular grid with inclusive bounds and uniform spacing (meters)."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution: float = 0.1

    def __post_init__(self):
        if not self.resolution > 0:
            raise ValueError("grid resolution must be positive")
        if self.x_max < self.x_min or self.y_max < self.y_min:
            raise ValueError("empty grid bounds")

    @classmethod
    def centered(cls, center: ArrayLike, width: float, height: float, resolution: float = 0.1):
        cx, cy = np.asarray(center, dtype=float)
        return cls(cx - width / 2, cx + width / 2, cy - height / 2, cy + height / 2, resolution)

    def axis(self, lo: float, hi: float) -> NDArray:
        n = int(np.floor((hi - lo) / self.resolution + 1e-9)) + 1
        return lo + self.resolution * np.arange(n)

    @property
    def xs(self) -> NDArray:
        return self.axis(self.x_min, self.x_max)

    @property
    def ys(self) -> NDArray:
        return self.axis(self.y_min, self.y_max)

    @property
    def shape(self) -> tuple[int, int]:
        return self.ys.size, self.xs.size

    def points(self) -> NDArray:
        """Grid points in row-major order (y outer, x inner), shape (ny * nx, 2)."""
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def cell_centers(self) -> NDArray:
        """Centres of the ``resolution``-sized cells tiling the rectangle (midpoint rule)."""
        nx = max(1, int(round((self.x_max - self.x_min) / self.resolution)))
        ny = max(1, int(round((self.y_max - self.y_min) / self.resolution)))
        xs = self.x_min + (np.arange(nx) + 0.5) * (self.x_max - self.x_min) / nx
        ys = self.y_min + (np.arange(ny) + 0.5) * (self.y_max - self.y_min) / ny
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class FimResult:
    r: NDArray
    fim: NDArray
    crlb_trace: float
    rmse_bound: float

    @property
    def singular(self) -> bool:
        return not np.isfinite(self.rmse_bound)

    @property
    def crlb(self) -> NDArray:
        if self.singular:
            raise np.linalg.LinAlgError("singular Fisher information")
        return np.linalg.inv(self.fim)


def jacobian_row(r: ArrayLike, comp: Component, params: ModelParams = ModelParams()) -> NDArray:
    """Analytic gradient of the component's model prediction at ``r`` (dB/m)."""
    r = np.asarray(r, dtype=float)
    model = MeasurementModel([comp], params)
    if model.min_node_distance(r)[0] <= GEO_TOL:
        raise SingularGradientError(f"gradient undefined at node position {r}")
    return model.jacobian(r)[0]


def trace_of_inverse(fxx, fxy, fyy, det=None, cond_limit: float = COND_LIMIT):
    """``trace(F^-1)`` for symmetric 2x2 matrices, ``inf`` where ill-conditioned.

    ``det`` may be supplied when it is known more accurately than the
    cancellation-prone ``fxx * fyy - fxy**2``.
    """
    fxx, fxy, fyy = np.broadcast_arrays(
        np.asarray(fxx, float), np.asarray(fxy, float), np.asarray(fyy, float)
    )
    mean = 0.5 * (fxx + fyy)
    rad = np.hypot(0.5 * (fxx - fyy), fxy)
    lam_max = mean + rad
    det = fxx * fyy - fxy * fxy if det is None else np.broadcast_to(np.asarray(det, float), fxx.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_min = np.where(lam_max > 0, det / lam_max, 0.0)
        ok = (lam_max > 0) & (lam_min > 0) & (lam_max < cond_limit * lam_min)
        tr = np.where(ok, (fxx + fyy) / np.where(ok, det, 1.0), np.inf)
    return tr


def _gram_determinant(a: NDArray, b: NDArray, naa: NDArray, nbb: NDArray) -> NDArray:
    """``det`` of the Gram matrix of row-wise vector pairs ``a``, ``b`` (shape (P, M)).

    Computed as ``|p|^2 * |q_perp|^2`` where ``p`` is the longer vector and
    ``q_perp`` the other one orthogonalised against it (twice, for accuracy).
    """
    swap = nbb > naa
    p = np.where(swap[:, None], b, a)
    q = np.where(swap[:, None], a, b)
    npp = np.maximum(naa, nbb)
    for _ in range(2):
        coef = np.divide(np.einsum("ij,ij->i", p, q), npp, out=np.zeros_like(npp), where=npp > 0)
        q = q - coef[:, None] * p
    return npp * np.einsum("ij,ij->i", q, q)


def fim_entries(model: MeasurementModel, points: NDArray, chunk_pairs: int = 1_000_000):
    """FIM entries ``(fxx, fxy, fyy)``, an accurate determinant and a node-singularity mask."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n_pairs = max(len(model.owner), 1)
    step = max(1, chunk_pairs // n_pairs)
    sw = 1.0 / model.sigma
    out = np.empty((pts.shape[0], 4))
    for s in range(0, pts.shape[0], step):
        jac = model.jacobian(pts[s : s + step]) * sw[:, None]
        jx, jy = jac[..., 0], jac[..., 1]
        fxx = np.einsum("ij,ij->i", jx, jx)
        fyy = np.einsum("ij,ij->i", jy, jy)
        out[s : s + step, 0] = fxx
        out[s : s + step, 1] = np.einsum("ij,ij->i", jx, jy)
        out[s : s + step, 2] = fyy
        out[s : s + step, 3] = _gram_determinant(jx, jy, fxx, fyy)
    at_node = model.min_node_distance(pts) <= GEO_TOL
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3], at_node


def fim(r: ArrayLike, components: Sequence[Component], params: ModelParams = ModelParams()) -> FimResult:
    """Fisher information ``J^T R^-1 J`` at ``r`` and the resulting RMSE bound."""
    model = components if isinstance(components, MeasurementModel) else MeasurementModel(components, params)
    if len(model) == 0:
        raise EmptyNetworkError("no associated multipath components")
    r = np.asarray(r, dtype=float)
    fxx, fxy, fyy, det, at_node = fim_entries(model, r[None, :])
    F = np.array([[fxx[0], fxy[0]], [fxy[0], fyy[0]]])
    tr = float(trace_of_inverse(fxx, fxy, fyy, det)[0])
    if at_node[0]:
        tr = np.inf
    return FimResult(r, F, tr, float(np.sqrt(tr)))


def rmse_bound_points(
    points: ArrayLike,
    components: Sequence[Component] | MeasurementModel,
    params: ModelParams = ModelParams(),
    workers: int = 1,
    chunk: int = 2048,
) -> NDArray:
    """RMSE bound ``sqrt(trace(F^-1))`` at each point; ``inf`` where singular."""
    model = components if isinstance(components, MeasurementModel) else MeasurementModel(components, params)
    if len(model) == 0:
        raise EmptyNetworkError("no associated multipath components")
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    blocks = [pts[s : s + chunk] for s in range(0, pts.shape[0], chunk)]

    def work(block):
        fxx, fxy, fyy, det, at_node = fim_entries(model, block)
        tr = trace_of_inverse(fxx, fxy, fyy, det)
        tr[at_node] = np.inf
        return np.sqrt(tr)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    return np.concatenate(parts) if parts else np.empty(0)


def rmse_bound_grid(
    grid: GridSpec,
    components: Sequence[Component] | MeasurementModel,
    params: ModelParams = ModelParams(),
    workers: int = 1,
) -> NDArray:
    """RMSE bound over ``grid`` as an array of shape ``grid.shape`` (rows are y)."""
    return rmse_bound_points(grid.points(), components, params, workers).reshape(grid.shape)


def expected_rmse(
    region: GridSpec,
    components: Sequence[Component] | MeasurementModel,
    params: ModelParams = ModelParams(),
) -> float:
    """Area-averaged RMSE bound over ``region``, singular points excluded.

    The average uses cell centres rather than grid nodes: on a node grid an
    isolated point where many links cross (zero model gradient) can dominate
    the mean without representing any area.
    """
    vals = rmse_bound_points(region.cell_centers(), components, params)
    finite = np.isfinite(vals)
    if not finite.any():
        raise UndefinedExpectationError("bound is singular at every point of the region")
    if not finite.all():
        logger.warning("expected_rmse: %d of %d points singular", (~finite).sum(), vals.size)
    return float(vals[finite].mean())
