"""Structure-preserving spline particle-in-cell solver on mapped domains.

Library layout follows the discretization pipeline: 1D spline bases
(:mod:`gempic.splines`), coordinate maps (:mod:`gempic.mapping`), the
discrete form spaces and derivative operators (:mod:`gempic.derham`),
metric-weighted operator assembly (:mod:`gempic.assembly`), solvers and
preconditioning (:mod:`gempic.linsolve`), particles (:mod:`gempic.particles`),
time integrators (:mod:`gempic.integrators`) and the batch driver/CLI
(:mod:`gempic.driver`, :mod:`gempic.cli`).
"""

from .config import RunConfig, list_presets, load_config, preset_config
from .derham import DeRhamSequence, build_sequence
from .driver import Simulation, run
from .mapping import Mapping, MapFamily, builtin_map
from .splines import Boundary, SplineBasis1D, build_basis

__all__ = [
    "Boundary",
    "DeRhamSequence",
    "Mapping",
    "MapFamily",
    "RunConfig",
    "Simulation",
    "SplineBasis1D",
    "build_basis",
    "build_sequence",
    "builtin_map",
    "list_presets",
    "load_config",
    "preset_config",
    "run",
]

__version__ = "0.1.0"
