"""Random walks on stationary random rooted graphs."""
__version__ = "0.1.0"

from ._accel import backend_name
from .graph_core import (
    BallSignature,
    CSRGraph,
    FiniteGraph,
    GraphError,
    HorizonExceeded,
    RootedMultigraph,
    ball,
    ball_signature,
    graph_distance,
    local_matching_radius,
)
from .seeds import derive_seed, make_rng
