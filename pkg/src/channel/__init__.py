"""Modelo de canal multipercurso"""
from .propagation import (
    ChannelParams,
    ChannelVector,
    channel_gain,
    channel_matrix,
    direct_path_gain,
    effective_channel,
)
from .room import SURFACES, PathSet, RoomEnv, free_space, image_reflection_paths
