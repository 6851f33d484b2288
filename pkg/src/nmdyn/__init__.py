"""Open-system dynamics of an (N+1)-level system in a zero-temperature Lorentzian reservoir.

The exact (pseudomode) solution is compared with the Born, Redfield and
GKSL approximations through their decay rates and trajectories.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from ._kernels import BACKEND
from .born import born_rates, born_sigma, evolve_born, solve_cubic
from .classify import closeness_map, compare_direct, region_map, triple_point
from .exact import dilation_check, evolve_exact, exact_amplitudes, exact_rates
from .model import (
    GlobalBasis,
    InitialState,
    ModelConfig,
    ReservoirSpec,
    SystemSpec,
    ValidationError,
    diagonalize,
    load_config,
    parse_config,
)
from .redfield import evolve_redfield, gksl_rates, redfield_rates

__all__ = [
    "BACKEND",
    "GlobalBasis",
    "InitialState",
    "ModelConfig",
    "ReservoirSpec",
    "SystemSpec",
    "ValidationError",
    "born_rates",
    "born_sigma",
    "closeness_map",
    "compare_direct",
    "diagonalize",
    "dilation_check",
    "evolve_born",
    "evolve_exact",
    "evolve_redfield",
    "exact_amplitudes",
    "exact_rates",
    "gksl_rates",
    "load_config",
    "parse_config",
    "redfield_rates",
    "region_map",
    "solve_cubic",
    "triple_point",
]
