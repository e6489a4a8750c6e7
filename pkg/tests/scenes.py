"""Random planar scenes for oracle comparisons."""

from __future__ import annotations

import numpy as np

from mdfl.geometry import Link, Surface, visible_set

MARGIN = 1e-3


def random_scene(rng: np.random.Generator, max_surfaces: int = 3, max_order: int = 2):
    n_surf = int(rng.integers(0, max_surfaces + 1))
    surfaces = []
    while len(surfaces) < n_surf:
        a, b = rng.uniform(-6, 6, 2), rng.uniform(-6, 6, 2)
        if np.linalg.norm(b - a) > 0.5:
            surfaces.append(Surface(f"s{len(surfaces) + 1}", a, b))
    tx, rx = rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2)
    order = int(rng.integers(0, max_order + 1))
    return Link(0, 0, 1, tx, rx), surfaces, order


def _point_segment_distance(p, s):
    d = s.b - s.a
    t = np.clip((p - s.a) @ d / (d @ d), 0, 1)
    return np.linalg.norm(p - (s.a + t * d))


def _resized(s: Surface, eps: float) -> Surface:
    u = (s.b - s.a) / s.length
    return Surface(s.id, s.a - eps * u, s.b + eps * u)


def is_well_conditioned(link: Link, surfaces, order: int) -> bool:
    """False when a small change of surface extents or node positions alters visibility."""
    if np.linalg.norm(link.tx_pos - link.rx_pos) < 0.1:
        return False
    for s in surfaces:
        if min(_point_segment_distance(link.tx_pos, s), _point_segment_distance(link.rx_pos, s)) < 1e-2:
            return False
    nominal = set(visible_set(link, surfaces, order).sequences)
    for eps in (MARGIN, -MARGIN):
        if set(visible_set(link, [_resized(s, eps) for s in surfaces], order).sequences) != nominal:
            return False
    return True
