"""Support functions, Koszul descent and integral kernels for bumped pseudoconvex model domains."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .realpoly import CQ, MixedPoly  # noqa: F401
from .params import BumpParams  # noqa: F401
from .lines import SolverConfig, find_harmonic_lines  # noqa: F401
from .bumpgraph import build_graph  # noqa: F401
