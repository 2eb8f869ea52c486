"""FDTD solver for the two-excitation delay PDE of a qubit in front of a mirror."""

from .exact import AmplitudeSeries, BoundarySolution, TwoPhotonInitial
from .grid import GridField, initialize
from .kernel import march_serial, update_cell
from .params import SimParams, load, parse_input, validate
from .schedulers import run_swarm, run_wavefront

__all__ = [
    "AmplitudeSeries",
    "BoundarySolution",
    "GridField",
    "SimParams",
    "TwoPhotonInitial",
    "initialize",
    "load",
    "march_serial",
    "parse_input",
    "run_swarm",
    "run_wavefront",
    "update_cell",
    "validate",
]
