"""Sequential model-based optimization with a benchmark harness.

GP-based Bayesian optimization and tree-structured Parzen estimation over
mixed search spaces, plus grid/random baselines, raced against pluggable
objectives with time-to-threshold and efficiency reporting.
"""

from .acquisition import AcquisitionSpec, ei, propose, ucb
from .engine import OptimizerSpec, RunResult, race, run
from .exceptions import HporaceError
from .gp import GpPosterior, KernelParams, fit
from .metrics import ConfusionCounts, bca, build_report, efficiency, threshold_times
from .objectives import (
    Branin2d,
    ExternalObjective,
    MockSer,
    ObjectiveRequest,
    ObjectiveResponse,
    Quadratic1d,
)
from .space import Config, ParamDef, SearchSpace, decode, encode, grid, load_space, sample, table2_space
from .tpe import TpeModel, fit_densities, propose_tpe, split
from .trials import History, Trial, load_history

__all__ = [
    "AcquisitionSpec",
    "Branin2d",
    "Config",
    "ConfusionCounts",
    "ExternalObjective",
    "GpPosterior",
    "History",
    "HporaceError",
    "KernelParams",
    "MockSer",
    "ObjectiveRequest",
    "ObjectiveResponse",
    "OptimizerSpec",
    "ParamDef",
    "Quadratic1d",
    "RunResult",
    "SearchSpace",
    "TpeModel",
    "Trial",
    "bca",
    "build_report",
    "decode",
    "efficiency",
    "ei",
    "encode",
    "fit",
    "fit_densities",
    "grid",
    "load_history",
    "load_space",
    "propose",
    "propose_tpe",
    "race",
    "run",
    "sample",
    "split",
    "table2_space",
    "threshold_times",
    "ucb",
]

__version__ = "0.1.0"
