"""Expander-graph interconnect toolkit: topology builders, structural and
spectral metrics, routing, a network simulator and machine-room layout."""

from .errors import (ConstructionError, DeadlockError, DisconnectedGraphError,
                     ParameterError, RoutingError)
from .graph import Graph
from .topology import TopologySpec, build

__version__ = "0.1.0"

__all__ = [
    "ConstructionError", "DeadlockError", "DisconnectedGraphError", "Graph",
    "ParameterError", "RoutingError", "TopologySpec", "build", "__version__",
]
