"""Layers of the network: parameters, ghost modules and attention."""

from .blocks import (
    CSAM,
    GRAB,
    ChannelAttention,
    Conv2d,
    GhostModule,
    SpatialAttention,
    build_attention,
)
from .module import Module, ModuleList, Parameter, initialize

__all__ = [
    "CSAM",
    "GRAB",
    "ChannelAttention",
    "Conv2d",
    "GhostModule",
    "Module",
    "ModuleList",
    "Parameter",
    "SpatialAttention",
    "build_attention",
    "initialize",
]
