"""
Image sources and path visibility
=================================

A reflected path between a transmitter and a receiver can be unfolded by
mirroring the nodes across the walls it touches. This script walks through
a two-wall scene and shows which reflection sequences actually reach the
receiver.
"""

import numpy as np

from mdfl.geometry import Link, Surface, build_virtual_nodes, trace_visibility, visible_set

# A 2 m link below a long horizontal wall, with a short vertical screen on the right.
link = Link(0, 0, 1, (0.0, 0.0), (2.0, 0.0))
walls = [Surface("s1", (-1.0, 2.0), (6.0, 2.0)), Surface("s2", (4.0, 1.0), (4.0, 3.0))]

# Every candidate sequence yields one virtual transmitter/receiver pair per
# segment of the path. All pairs of a sequence are equally far apart, and
# that distance is the length of the reflected path.
for seq in [(), ("s1",), ("s1", "s2")]:
    pairs = build_virtual_nodes(link, seq, walls)
    print(f"{'-'.join(seq) or 'LoS':6s}", [round(p.distance, 4) for p in pairs])

# Not every sequence is physical. The reflection points have to land on the
# finite walls and no leg may be cut by another wall.
for seq in [("s2",), ("s1", "s2"), ("s2", "s1")]:
    res = trace_visibility(link, seq, walls)
    print(f"{'-'.join(seq):6s}", res.status.name, np.round(res.reflection_points, 3).tolist())

# visible_set enumerates all sequences up to the requested order and keeps
# the physical ones, line of sight first.
vs = visible_set(link, walls, max_order=2)
for seq, d in zip(vs.sequences, vs.path_lengths):
    print(f"visible: {'-'.join(seq) or 'LoS':6s} path length {d:.3f} m")
