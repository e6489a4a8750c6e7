"""Scenario description and its JSON file format.

Schema (all lengths in meters, dB values in dB)::

    {
      "name": "paper-room",
      "surfaces": [{"id": "s1", "a": [x, y], "b": [x, y]}, ...],
      "nodes": [[x, y], ...],
      "links": "full-mesh" | [[tx, rx], ...],
      "link_mode": "undirected" | "directed",
      "max_order": 1,
      "model": {"phi_db": -2.5, "kappa_m": 0.05, "sigma_db": 1.5},
      "grid": {"x_min": .., "x_max": .., "y_min": .., "y_max": .., "resolution": 0.1},
      "region": {... same keys as grid ...},
      "network": {"radius": 4.0, "center": [0, 0]},
      "channel": {... ChannelConfig fields ...},
      "seed": 0
    }

``region``, ``network`` and ``channel`` are optional. ``network`` records
how circular node layouts were generated so that node-count sweeps can
regenerate them.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelConfig
from .crlb import GridSpec
from .errors import ConfigurationError
from .geometry import Link, Surface, as_point
from .measurement import ModelParams

REFERENCE_ROOM_SIZE = (23.0, 15.5)
REFERENCE_RADIUS = 4.0
REFERENCE_NODES = 20


def make_circle_network(n: int, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    """``n`` equally spaced nodes on a circle, first at angle 0, counterclockwise."""
    if n < 2:
        raise ConfigurationError("a circular network needs at least 2 nodes")
    if not radius > 0:
        raise ConfigurationError("radius must be positive")
    ang = 2 * np.pi * np.arange(n) / n
    return as_point(center) + radius * np.column_stack([np.cos(ang), np.sin(ang)])


def rectangle_walls(width: float, height: float, center=(0.0, 0.0)) -> list[Surface]:
    """Four walls s1 (bottom), s2 (right), s3 (top), s4 (left) of an axis-aligned room."""
    cx, cy = as_point(center)
    x0, x1 = cx - width / 2, cx + width / 2
    y0, y1 = cy - height / 2, cy + height / 2
    return [
        Surface("s1", (x0, y0), (x1, y0)),
        Surface("s2", (x1, y0), (x1, y1)),
        Surface("s3", (x1, y1), (x0, y1)),
        Surface("s4", (x0, y1), (x0, y0)),
    ]


@dataclass
class Scenario:
    surfaces: list[Surface]
    nodes: np.ndarray
    links: str | list[tuple[int, int]] = "full-mesh"
    link_mode: str = "undirected"
    max_order: int = 1
    params: ModelParams = field(default_factory=ModelParams)
    grid: GridSpec | None = None
    region: GridSpec | None = None
    network: dict | None = None
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        if self.link_mode not in ("undirected", "directed"):
            raise ConfigurationError(f"unknown link mode {self.link_mode!r}")
        if isinstance(self.links, str) and self.links != "full-mesh":
            raise ConfigurationError(f"unknown link set {self.links!r}")
        if self.max_order < 0:
            raise ConfigurationError("max_order must be >= 0")
        if self.params.overrides:
            raise ConfigurationError("per-sequence overrides are not part of the file format")

    def link_pairs(self) -> list[tuple[int, int]]:
        n = len(self.nodes)
        if self.links == "full-mesh":
            if self.link_mode == "directed":
                return [(i, j) for i in range(n) for j in range(n) if i != j]
            return [(i, j) for i in range(n) for j in range(i + 1, n)]
        pairs = [(int(i), int(j)) for i, j in self.links]
        for i, j in pairs:
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise ConfigurationError(f"invalid link ({i}, {j})")
        return pairs

    def build_links(self) -> list[Link]:
        return [
            Link(k, i, j, self.nodes[i], self.nodes[j]) for k, (i, j) in enumerate(self.link_pairs())
        ]

    def with_nodes(self, nodes, network: dict | None = None) -> "Scenario":
        return dataclasses.replace(self, nodes=np.asarray(nodes, float), network=network)

    def with_surfaces(self, surfaces) -> "Scenario":
        return dataclasses.replace(self, surfaces=list(surfaces))

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "surfaces": [{"id": s.id, "a": s.a.tolist(), "b": s.b.tolist()} for s in self.surfaces],
            "nodes": self.nodes.tolist(),
            "links": self.links if isinstance(self.links, str) else [list(p) for p in self.links],
            "link_mode": self.link_mode,
            "max_order": self.max_order,
            "model": {
                "phi_db": self.params.phi_db,
                "kappa_m": self.params.kappa_m,
                "sigma_db": self.params.sigma_db,
            },
            "channel": dataclasses.asdict(self.channel),
            "seed": self.seed,
        }
        if self.grid is not None:
            d["grid"] = dataclasses.asdict(self.grid)
        if self.region is not None:
            d["region"] = dataclasses.asdict(self.region)
        if self.network is not None:
            d["network"] = {
                "radius": float(self.network["radius"]),
                "center": [float(c) for c in self.network["center"]],
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            model = d.get("model", {})
            links = d.get("links", "full-mesh")
            return cls(
                surfaces=[Surface(str(s["id"]), s["a"], s["b"]) for s in d.get("surfaces", [])],
                nodes=d["nodes"],
                links=links if isinstance(links, str) else [tuple(p) for p in links],
                link_mode=d.get("link_mode", "undirected"),
                max_order=int(d.get("max_order", 1)),
                params=ModelParams(
                    model.get("phi_db", -2.5), model.get("kappa_m", 0.05), model.get("sigma_db", 1.5)
                ),
                grid=GridSpec(**d["grid"]) if "grid" in d else None,
                region=GridSpec(**d["region"]) if "region" in d else None,
                network=d.get("network"),
                channel=ChannelConfig(**d.get("channel", {})),
                seed=int(d.get("seed", 0)),
                name=d.get("name", "scenario"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"malformed scenario: {exc}") from exc

    def network_geometry(self) -> tuple[float, np.ndarray]:
        """Radius and centre of the circular layout (recorded or inferred from the nodes)."""
        if self.network is not None:
            return float(self.network["radius"]), as_point(self.network["center"])
        center = self.nodes.mean(axis=0)
        return float(np.linalg.norm(self.nodes - center, axis=1).mean()), center


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        return Scenario.from_dict(json.load(fh))


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario.to_dict(), indent=2) + "\n")


def make_paper_room(n_nodes: int = REFERENCE_NODES, radius: float = REFERENCE_RADIUS) -> Scenario:
    """Reference evaluation setup: circular network centred in a 23 m x 15.5 m room.

    The network sits at the room centre; move the walls with
    ``rectangle_walls(..., center=...)`` to study other placements.
    """
    width, height = REFERENCE_ROOM_SIZE
    return Scenario(
        surfaces=rectangle_walls(width, height),
        nodes=make_circle_network(n_nodes, radius),
        max_order=1,
        params=ModelParams(-2.5, 0.05, 1.5),
        grid=GridSpec(-width / 2, width / 2, -height / 2, height / 2, 0.1),
        region=GridSpec(-1.0, 1.0, -1.0, 1.0, 0.1),
        network={"radius": radius, "center": [0.0, 0.0]},
        name="paper-room",
    )
