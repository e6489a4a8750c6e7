"""Multipath-enhanced device-free localization: geometry, measurement model and CRLB analysis."""

from .association import AssociationResult, associate, build_union
from .channel import ChannelConfig, ChannelRealization, IdleChannelStats, Pulse
from .crlb import FimResult, GridSpec, expected_rmse, fim, jacobian_row, rmse_bound_grid
from .geometry import (
    Component,
    Link,
    Surface,
    Visibility,
    VisibleSet,
    build_virtual_nodes,
    enumerate_sequences,
    excess_path_length,
    mirror_point,
    path_length,
    trace_visibility,
    visible_set,
)
from .measurement import MeasurementModel, ModelParams, model_h, power_change, predict_vector
from .scenario import Scenario, load_scenario, make_circle_network, make_paper_room, save_scenario

__version__ = "0.1.0"
