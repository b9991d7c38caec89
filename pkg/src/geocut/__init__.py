"""Streaming Max-Cut estimation for dynamic geometric point streams.

Points from an integer grid arrive as insertions and deletions; the
library maintains small linear sketches over a randomly shifted
quadtree, draws importance-weighted point samples at the end of the
stream, and estimates the Max-Cut value from the weighted sample set.
"""

from .core import (
    GridConfig,
    StreamUpdate,
    apply_stream,
    decode_point,
    encode_point,
    lp_distance,
    read_stream,
    stream_from_points,
    write_stream,
)
from .importance_sampler import (
    SampleOutcome,
    SamplerConfig,
    SamplerState,
    sampler_finalize,
    sampler_init,
    sampler_update,
)
from .jl import JLMap, jl_dimension, jl_project, verify_maxcut_preservation
from .light_sampler import LightSample, LightSampler
from .maxcut import (
    EstimateResult,
    WeightedSample,
    cut_value,
    estimate_max_cut,
    max_cut_exact,
)
from .quadtree import ShiftVector, q_tree, random_shift, tree_distance
from .sketches import L0Estimator, L0Sampler, SamplerBank, sketch_merge

__version__ = "0.1.0"

__all__ = [
    "GridConfig",
    "StreamUpdate",
    "apply_stream",
    "decode_point",
    "encode_point",
    "lp_distance",
    "read_stream",
    "stream_from_points",
    "write_stream",
    "SampleOutcome",
    "SamplerConfig",
    "SamplerState",
    "sampler_finalize",
    "sampler_init",
    "sampler_update",
    "JLMap",
    "jl_dimension",
    "jl_project",
    "verify_maxcut_preservation",
    "LightSample",
    "LightSampler",
    "EstimateResult",
    "WeightedSample",
    "cut_value",
    "estimate_max_cut",
    "max_cut_exact",
    "ShiftVector",
    "q_tree",
    "random_shift",
    "tree_distance",
    "L0Estimator",
    "L0Sampler",
    "SamplerBank",
    "sketch_merge",
    "__version__",
]
