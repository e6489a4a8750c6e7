"""
The exponential shadowing model
===============================

A person standing near a propagation path attenuates it. The model used
here lets the dB change decay exponentially with the excess path length of
the detour transmitter -> person -> receiver, evaluated for every segment of
a reflected path.
"""

import numpy as np

from mdfl.geometry import Link, Surface, build_component
from mdfl.measurement import MeasurementModel, ModelParams, power_change

params = ModelParams(phi_db=-2.5, kappa_m=0.05, sigma_db=1.5)
link = Link(0, 0, 1, (0.0, 0.0), (4.0, 0.0))
wall = Surface("w", (-10.0, 5.0), (10.0, 5.0))
los = build_component(link, (), [wall])
reflected = build_component(link, ("w",), [wall])
model = MeasurementModel([los, reflected], params)

# Walk upward through the middle of the link. The LoS response fades within
# a few centimetres, while the reflected path lights up near both of its
# legs and doubles at the reflection point on the wall.
ys = np.array([0.0, 0.02, 0.05, 0.1, 0.5, 2.5, 4.9, 5.0])
h = model.predict(np.column_stack([np.full_like(ys, 2.0), ys]))
for y, (h_los, h_ref) in zip(ys, h):
    print(f"y = {y:4.2f} m   LoS {h_los:7.3f} dB   reflection {h_ref:7.3f} dB")

# The gradient is what makes a path informative about position. It is zero
# exactly on the path and largest a little off it.
print("gradient at (2, 0.02):", np.round(model.jacobian(np.array([2.0, 0.02])), 3))

# Measurements are the model plus Gaussian noise in dB.
rng = np.random.default_rng(0)
print("three noisy draws at (2, 0.02):", np.round(model.sample(np.array([2.0, 0.02]), 3, rng), 2).tolist())

# On real signals the dB change is the ratio of the current to the idle amplitude.
print("half amplitude ->", round(power_change(0.5, 1.0), 4), "dB")
