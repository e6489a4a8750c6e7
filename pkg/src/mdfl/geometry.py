"""Planar environment geometry: surfaces, virtual nodes and visibility.

Reflected paths are modelled with image sources. For a reflection sequence
``(s_1, ..., s_N)`` the virtual transmitters are obtained by mirroring the
transmitter across ``s_1, s_2, ...`` in turn, the virtual receivers by
mirroring the receiver across ``s_N, s_{N-1}, ...``. Pair ``u`` couples the
``u``-th virtual transmitter with the ``(N - u)``-th virtual receiver; every
pair spans the same distance, which is the physical path length, and the
segment between the nodes of pair ``u`` carries the ``u``-th physical leg.

Example:
    >>> tx, rx = (0.0, 0.0), (4.0, 0.0)
    >>> wall = Surface("w", (-10.0, 5.0), (10.0, 5.0))
    >>> link = Link(0, 0, 1, tx, rx)
    >>> comp = build_component(link, ("w",), {"w": wall})
    >>> round(comp.length, 4)
    10.7703
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ConfigurationError, ConsistencyError, InvalidSurfaceError

GEO_TOL = 1e-6  # m, on-segment and equidistance checks

Array = NDArray[np.float64]


def as_point(p: ArrayLike) -> Array:
    """Return ``p`` as a finite float array of shape (2,)."""
    arr = np.asarray(p, dtype=float).reshape(-1)
    if arr.shape != (2,):
        raise ValueError(f"expected a 2-D point, got shape {np.shape(p)}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point has non-finite coordinates: {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class Surface:
    """Finite reflecting line segment from ``a`` to ``b``."""

    id: str
    a: Array
    b: Array

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a))
        object.__setattr__(self, "b", as_point(self.b))
        if np.linalg.norm(self.b - self.a) == 0.0:
            raise InvalidSurfaceError(f"surface {self.id!r} has coincident endpoints")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))

    def __repr__(self):
        return f"Surface({self.id!r}, {self.a.tolist()}, {self.b.tolist()})"


@dataclass(frozen=True, eq=False)
class Link:
    """Directed transmitter/receiver pair ``(tx_index, rx_index)`` with index ``index``."""

    index: int
    tx_index: int
    rx_index: int
    tx_pos: Array
    rx_pos: Array

    def __post_init__(self):
        object.__setattr__(self, "tx_pos", as_point(self.tx_pos))
        object.__setattr__(self, "rx_pos", as_point(self.rx_pos))

    def reversed(self) -> "Link":
        return Link(self.index, self.rx_index, self.tx_index, self.rx_pos, self.tx_pos)


@dataclass(frozen=True)
class VirtualNodePair:
    u: int
    vt: Array
    vr: Array

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.vt - self.vr))


@dataclass(frozen=True, eq=False)
class Component:
    """Geometry of one multipath component (LoS when ``surfaces`` is empty).

    ``vt[u]`` and ``vr[u]`` hold the nodes of pair ``u``, i.e. the ``u``-th
    virtual transmitter and the ``(N - u)``-th virtual receiver.
    """

    link: Link
    surfaces: tuple[str, ...]
    vt: Array
    vr: Array
    length: float

    @property
    def order(self) -> int:
        return len(self.surfaces)

    @property
    def is_los(self) -> bool:
        return not self.surfaces

    def pairs(self) -> list[VirtualNodePair]:
        return [VirtualNodePair(u, self.vt[u], self.vr[u]) for u in range(self.order + 1)]


class Visibility(enum.Enum):
    VISIBLE = "visible"
    BLOCKED = "blocked"
    OFF_SEGMENT = "off-segment"


@dataclass(frozen=True)
class VisibilityResult:
    status: Visibility
    reflection_points: Array = field(default_factory=lambda: np.empty((0, 2)))

    @property
    def visible(self) -> bool:
        return self.status is Visibility.VISIBLE


@dataclass(frozen=True, eq=False)
class VisibleSet:
    """Visible components of one link and their expected path lengths."""

    link: Link
    components: list[Component]

    @property
    def sequences(self) -> list[tuple[str, ...]]:
        return [c.surfaces for c in self.components]

    @property
    def path_lengths(self) -> Array:
        return np.array([c.length for c in self.components], dtype=float)

    def __len__(self):
        return len(self.components)


def surface_map(surfaces: Iterable[Surface] | Mapping[str, Surface]) -> dict[str, Surface]:
    if isinstance(surfaces, Mapping):
        return dict(surfaces)
    out: dict[str, Surface] = {}
    for s in surfaces:
        if s.id in out:
            raise ConfigurationError(f"duplicate surface id {s.id!r}")
        out[s.id] = s
    return out


def mirror_point(p: ArrayLike, s: Surface) -> Array:
    """Reflect ``p`` across the infinite line through surface ``s``."""
    p = np.asarray(p, dtype=float)
    d = s.b - s.a
    n2 = d @ d
    if n2 == 0.0:
        raise InvalidSurfaceError(f"surface {s.id!r} has coincident endpoints")
    rel = p - s.a
    foot = s.a + (rel @ d) / n2 * d
    return 2.0 * foot - p


def enumerate_sequences(
    surfaces: Iterable[Surface] | Iterable[str], max_order: int
) -> list[tuple[str, ...]]:
    """All reflection sequences up to ``max_order`` bounces.

    LoS ``()`` comes first, then sequences by ascending length, each length in
    lexicographic order of surface ids. Immediate repetitions are excluded.
    """
    if max_order < 0:
        raise ConfigurationError("max_order must be >= 0")
    ids = sorted(s.id if isinstance(s, Surface) else str(s) for s in surfaces)
    out: list[tuple[str, ...]] = [()]
    for order in range(1, max_order + 1):
        for seq in itertools.product(ids, repeat=order):
            if all(a != b for a, b in zip(seq, seq[1:])):
                out.append(seq)
    return out


def build_virtual_nodes(
    link: Link, seq: Sequence[str], surfaces: Iterable[Surface] | Mapping[str, Surface]
) -> list[VirtualNodePair]:
    """Pairs of related virtual transmitters and receivers for ``seq``."""
    vt, vr = _virtual_nodes(link, tuple(seq), surface_map(surfaces))
    return [VirtualNodePair(u, vt[u], vr[u]) for u in range(len(seq) + 1)]


def _virtual_nodes(link: Link, seq: tuple[str, ...], smap: Mapping[str, Surface]):
    try:
        surfs = [smap[sid] for sid in seq]
    except KeyError as exc:
        raise ConfigurationError(f"unknown surface id {exc.args[0]!r}") from None
    n = len(seq)
    vts = [link.tx_pos]
    for s in surfs:
        vts.append(mirror_point(vts[-1], s))
    vrs_by_depth = [link.rx_pos]
    for s in reversed(surfs):
        vrs_by_depth.append(mirror_point(vrs_by_depth[-1], s))
    vt = np.array(vts)
    vr = np.array([vrs_by_depth[n - u] for u in range(n + 1)])
    return vt, vr


def path_length(pairs: Sequence[VirtualNodePair], tol: float = GEO_TOL) -> float:
    """Common distance of equidistant virtual node pairs."""
    if not pairs:
        raise ValueError("no virtual node pairs")
    dists = np.array([p.distance for p in pairs])
    if dists.max() - dists.min() > tol:
        raise ConsistencyError(f"virtual node pairs are not equidistant: {dists}")
    return float(dists[0])


def build_component(
    link: Link, seq: Sequence[str], surfaces: Iterable[Surface] | Mapping[str, Surface]
) -> Component:
    seq = tuple(seq)
    vt, vr = _virtual_nodes(link, seq, surface_map(surfaces))
    pairs = [VirtualNodePair(u, vt[u], vr[u]) for u in range(len(seq) + 1)]
    return Component(link, seq, vt, vr, path_length(pairs))


def _line_intersection(p0, p1, q0, q1):
    """Parameters (t, s) with p0 + t (p1 - p0) = q0 + s (q1 - q0); None if parallel."""
    d1 = p1 - p0
    d2 = q1 - q0
    den = d1[0] * d2[1] - d1[1] * d2[0]
    scale = np.linalg.norm(d1) * np.linalg.norm(d2)
    if scale == 0.0 or abs(den) <= 1e-14 * scale:
        return None
    w = q0 - p0
    t = (w[0] * d2[1] - w[1] * d2[0]) / den
    s = (w[0] * d1[1] - w[1] * d1[0]) / den
    return t, s


def _leg_blocked(p0: Array, p1: Array, surfs: Iterable[Surface], tol: float) -> bool:
    leg_len = float(np.linalg.norm(p1 - p0))
    if leg_len <= tol:
        return False
    for s in surfs:
        hit = _line_intersection(p0, p1, s.a, s.b)
        if hit is None:
            continue
        t, u = hit
        t_tol = tol / leg_len
        u_tol = tol / s.length
        if t_tol < t < 1.0 - t_tol and -u_tol <= u <= 1.0 + u_tol:
            return True
    return False


def trace_visibility(
    link: Link,
    seq: Sequence[str],
    surfaces: Iterable[Surface] | Mapping[str, Surface],
    tol: float = GEO_TOL,
) -> VisibilityResult:
    """Reconstruct the physical path of ``seq`` and check that it exists.

    Reflection point ``k`` is where the segment of pair ``k - 1`` crosses
    surface ``s_k``. A path is off-segment if any reflection point misses the
    interior of its surface (endpoints included) or the reconstructed polyline
    is not the unfolded straight path; it is blocked if any surface crosses
    the interior of a leg.
    """
    smap = surface_map(surfaces)
    seq = tuple(seq)
    vt, vr = _virtual_nodes(link, seq, smap)
    d = float(np.linalg.norm(vt[0] - vr[0]))
    points = []
    for k, sid in enumerate(seq):
        s = smap[sid]
        hit = _line_intersection(vt[k], vr[k], s.a, s.b)
        if hit is None:
            return VisibilityResult(Visibility.OFF_SEGMENT)
        t, u = hit
        u_tol = tol / s.length
        if not (u_tol < u < 1.0 - u_tol):
            return VisibilityResult(Visibility.OFF_SEGMENT, np.array(points).reshape(-1, 2))
        points.append(vt[k] + t * (vr[k] - vt[k]))
    refl = np.array(points).reshape(-1, 2)
    poly = np.vstack([link.tx_pos, refl, link.rx_pos])
    poly_len = float(np.sum(np.linalg.norm(np.diff(poly, axis=0), axis=1)))
    if abs(poly_len - d) > tol * max(1.0, d):
        return VisibilityResult(Visibility.OFF_SEGMENT, refl)
    all_surfs = list(smap.values())
    for p0, p1 in zip(poly[:-1], poly[1:]):
        if _leg_blocked(p0, p1, all_surfs, tol):
            return VisibilityResult(Visibility.BLOCKED, refl)
    return VisibilityResult(Visibility.VISIBLE, refl)


def visible_set(
    link: Link,
    surfaces: Iterable[Surface] | Mapping[str, Surface],
    max_order: int,
    tol: float = GEO_TOL,
) -> VisibleSet:
    smap = surface_map(surfaces)
    comps = []
    for seq in enumerate_sequences(smap.keys(), max_order):
        if trace_visibility(link, seq, smap, tol).visible:
            comps.append(build_component(link, seq, smap))
    return VisibleSet(link, comps)


def excess_path_length(vt: ArrayLike, vr: ArrayLike, r: ArrayLike, d: float) -> NDArray:
    """Detour ``|vt - r| + |vr - r| - d`` of a user at ``r`` (broadcasts over ``r``)."""
    r = np.asarray(r, dtype=float)
    vt = np.asarray(vt, dtype=float)
    vr = np.asarray(vr, dtype=float)
    return np.linalg.norm(r - vt, axis=-1) + np.linalg.norm(r - vr, axis=-1) - d
