"""
From received signals to associated paths
=========================================

Before a user enters, each link observes its idle channel for a while. The
resolvable components are estimated in every snapshot, averaged, and then
matched against the path lengths predicted by the room geometry. Only
matched paths are used for localization.
"""

import numpy as np

from mdfl.association import associate
from mdfl.channel import SPEED_OF_LIGHT, ChannelConfig, idle_realization, initialize_link
from mdfl.geometry import Link, visible_set
from mdfl.scenario import rectangle_walls

config = ChannelConfig()
pulse = config.pulse()
walls = rectangle_walls(23.0, 15.5)
link = Link(0, 0, 1, (4.0, 0.0), (-4.0, 0.5))

# Synthetic idle channel: free-space spreading, a reflection loss per bounce
# and the carrier phase of each path length.
vis = visible_set(link, walls, max_order=1)
idle = idle_realization(link, vis.components, config, pulse)
for comp, a in zip(vis.components, idle.amplitudes):
    print(f"{'-'.join(comp.surfaces) or 'LoS':4s} d = {comp.length:7.3f} m  |alpha| = {abs(a):.4f}")

# Ten snapshots with independent noise, estimated and clustered by delay.
stats = initialize_link(idle, pulse, config.t_ini_s, config.t_g_s, rng_seed=1)
print("estimated path lengths:", np.round(stats.estimated_path_lengths, 3).tolist())

# Association pairs estimates with geometric predictions, at most one
# resolution cell (c / B) apart.
result = associate(vis.components, stats.estimated_path_lengths, SPEED_OF_LIGHT / config.bandwidth_hz)
for i, j in result.pairs:
    name = "-".join(vis.components[i].surfaces) or "LoS"
    print(f"matched {name:4s} residual {stats.estimated_path_lengths[j] - vis.components[i].length:+.4f} m")
# The side-wall reflections have the same length here and arrive at the
# same delay, so the estimator sees one component and only one of them can
# be matched.
print("unmatched expected:", ["-".join(vis.components[i].surfaces) for i in result.unmatched_expected])
