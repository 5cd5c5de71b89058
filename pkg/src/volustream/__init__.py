"""Rate-utility optimized streaming of volumetric media over a sliding buffer window."""

from .cbm import (
    ALGORITHMS,
    Client,
    ClientConfig,
    StreamObject,
    ThroughputEstimator,
    bba_select,
    stripped_wba_select,
    tba_select,
    tiles_in_window,
    update_throughput,
)
from .geometry import Viewpoint, distinguishable_voxels, is_visible, visible_mask
from .media import (
    ObjectManifest,
    Representation,
    SegmentIndex,
    index_bitrate,
    morton_decode,
    morton_encode,
    parse_index,
    serialize_index,
    synth_object,
    tile_bit_count,
)
from .network import NetworkProfile, PacketLink, download_time, preset
from .optimizer import TileChoice, brute_force_allocate, greedy_allocate, max_lambda
from .scenario import Scenario, ScenarioError, run, write_outputs
from .utility import p_err, tile_utility
from .window import BufferStore, MissingIndexError, WindowState, window_size

__all__ = [
    "ALGORITHMS", "BufferStore", "Client", "ClientConfig", "MissingIndexError", "NetworkProfile",
    "ObjectManifest", "PacketLink", "Representation", "Scenario", "ScenarioError", "SegmentIndex",
    "StreamObject", "ThroughputEstimator", "TileChoice", "Viewpoint", "WindowState", "bba_select",
    "brute_force_allocate", "download_time", "greedy_allocate", "index_bitrate", "is_visible", "distinguishable_voxels",
    "max_lambda", "morton_decode", "morton_encode", "p_err", "parse_index", "preset", "run",
    "serialize_index", "stripped_wba_select", "synth_object", "tba_select", "tile_bit_count",
    "tile_utility", "tiles_in_window", "update_throughput", "visible_mask", "window_size", "write_outputs",
]
