"""Cut-off constrained assignment of estimated to expected path lengths."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy.optimize import linear_sum_assignment

from .geometry import Component


@dataclass
class AssociationResult:
    """Matched ``(expected index, estimated index)`` pairs of one link.

    ``cost`` is the summed absolute path-length residual of the matched pairs
    in meters.
    """

    link: int
    pairs: list[tuple[int, int]]
    unmatched_expected: list[int]
    unmatched_estimated: list[int]
    cost: float
    expected: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    estimated: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))
    components: list[Component] | None = field(repr=False, default=None)

    @property
    def associated(self) -> list[Component]:
        """Associated components in expected (enumeration) order."""
        if self.components is None:
            raise ValueError("association was run without component references")
        return [self.components[i] for i, _ in self.pairs]


def associate(
    expected: ArrayLike | Sequence[Component],
    estimated: ArrayLike,
    cutoff: float,
    link: int = 0,
) -> AssociationResult:
    """Optimal assignment with per-pair distances clamped to ``cutoff``.

    The assignment minimises the summed residual of matched pairs plus
    ``cutoff`` for every pair left unmatched among the ``min(m, n)`` possible
    ones. Pairs whose residual reaches the cut-off are reported unmatched.
    """
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    comps = None
    exp_list = list(expected) if not isinstance(expected, np.ndarray) else expected
    if len(exp_list) and isinstance(exp_list[0], Component):
        comps = list(exp_list)
        exp = np.array([c.length for c in comps], dtype=float)
    else:
        exp = np.asarray(exp_list, dtype=float).reshape(-1)
    est = np.asarray(estimated, dtype=float).reshape(-1)

    pairs: list[tuple[int, int]] = []
    if exp.size and est.size:
        dist = np.abs(exp[:, None] - est[None, :])
        rows, cols = linear_sum_assignment(np.minimum(dist, cutoff))
        pairs = sorted((int(i), int(j)) for i, j in zip(rows, cols) if dist[i, j] < cutoff)
    matched_e = {i for i, _ in pairs}
    matched_q = {j for _, j in pairs}
    cost = float(sum(abs(exp[i] - est[j]) for i, j in pairs))
    return AssociationResult(
        link,
        pairs,
        [i for i in range(exp.size) if i not in matched_e],
        [j for j in range(est.size) if j not in matched_q],
        cost,
        exp,
        est,
        comps,
    )


def build_union(results: Sequence[AssociationResult]) -> list[Component]:
    """Concatenate associated components in link order; the list index is the global index."""
    out: list[Component] = []
    for res in sorted(results, key=lambda r: r.link):
        out.extend(res.associated)
    return out


def write_report(path, results: Sequence[AssociationResult]) -> None:
    """CSV with one row per expected or estimated path length."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["link", "sequence", "expected_m", "estimated_m", "residual_m", "matched"])
        for res in sorted(results, key=lambda r: r.link):
            names = (
                ["-".join(c.surfaces) or "LoS" for c in res.components]
                if res.components is not None
                else [f"#{i}" for i in range(res.expected.size)]
            )
            for i, j in res.pairs:
                e, d = res.expected[i], res.estimated[j]
                w.writerow([res.link, names[i], f"{e:.6f}", f"{d:.6f}", f"{d - e:.6f}", 1])
            for i in res.unmatched_expected:
                w.writerow([res.link, names[i], f"{res.expected[i]:.6f}", "", "", 0])
            for j in res.unmatched_estimated:
                w.writerow([res.link, "", "", f"{res.estimated[j]:.6f}", "", 0])
