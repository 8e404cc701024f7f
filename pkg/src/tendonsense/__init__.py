"""Simulation of a tendon-routed shoulder sensing sleeve.

Tendon paths over a two-angle shoulder, sensor emulation, synthetic motion,
MLP joint/sensor mappings and the evaluation tools that tie them together.
"""

__version__ = "0.1.0"

from .config import ConfigError, ExperimentConfig, load_config
from .dataset import Dataset, DatasetFormatError, protocol_dataset, read_dataset, synthesize, write_dataset
from .evaluation import (AblationReport, ChannelMetrics, MonotonicityReport, ablate, canonical_movements,
                         compare_channels, forward_surface, monotonicity_screen)
from .geometry import Frame, JointPose, ShoulderModel, WorkspaceWarning, arm_axis, humerus_rotation, transform_point
from .mapping import (Direction, MlpModel, TrainConfig, TrainReport, gradient_check, load_model, loss_and_grad,
                      save_model, train)
from .motion import MotionKind, Trajectory, TrajectoryError, TrajectorySpec, generate, protocol_suite
from .sensor import (ConfigurationError, EmulatorState, NeutralReference, SensorEmulation, SensorFrame,
                     delta_length, delta_lengths, emulate, emulate_stream, quantization_step)
from .tendon import (InvalidPathError, PathPolicy, RoutingElement, TendonLayout, TendonPath, arc_length,
                     default_layout, layout_lengths, tendon_length)

__all__ = [
    "AblationReport",
    "ChannelMetrics",
    "ConfigError",
    "ConfigurationError",
    "Dataset",
    "DatasetFormatError",
    "Direction",
    "EmulatorState",
    "ExperimentConfig",
    "Frame",
    "InvalidPathError",
    "JointPose",
    "MlpModel",
    "MonotonicityReport",
    "MotionKind",
    "NeutralReference",
    "PathPolicy",
    "RoutingElement",
    "SensorEmulation",
    "SensorFrame",
    "ShoulderModel",
    "TendonLayout",
    "TendonPath",
    "TrainConfig",
    "TrainReport",
    "Trajectory",
    "TrajectoryError",
    "TrajectorySpec",
    "WorkspaceWarning",
    "ablate",
    "arc_length",
    "arm_axis",
    "canonical_movements",
    "compare_channels",
    "default_layout",
    "delta_length",
    "delta_lengths",
    "emulate",
    "emulate_stream",
    "forward_surface",
    "generate",
    "gradient_check",
    "humerus_rotation",
    "layout_lengths",
    "load_config",
    "load_model",
    "loss_and_grad",
    "monotonicity_screen",
    "protocol_dataset",
    "protocol_suite",
    "quantization_step",
    "read_dataset",
    "save_model",
    "synthesize",
    "tendon_length",
    "train",
    "transform_point",
    "write_dataset",
]
