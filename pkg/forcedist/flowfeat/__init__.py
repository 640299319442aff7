from .dis import FlowConfig, FlowField, dense_flow, usable_levels
from .images import GrayImage, quantize, read_image, write_image
from .io import read_features_csv, read_flow, write_features_csv, write_flow
from .pooling import FeatureVector, average_features, pool_features
from .render import (
    DisplacementField,
    IndentationDisplacement,
    ParticleScene,
    RadialSqueeze,
    UniformDisplacement,
    random_scene,
    render_scene,
)

__all__ = [
    "DisplacementField",
    "FeatureVector",
    "FlowConfig",
    "FlowField",
    "GrayImage",
    "IndentationDisplacement",
    "ParticleScene",
    "RadialSqueeze",
    "UniformDisplacement",
    "average_features",
    "dense_flow",
    "pool_features",
    "quantize",
    "random_scene",
    "read_features_csv",
    "read_flow",
    "read_image",
    "render_scene",
    "usable_levels",
    "write_features_csv",
    "write_flow",
    "write_image",
]
