"""Atom-laser outcoupling simulator: squeezing transfer and twin-beam entanglement."""

import os as _os

# Byte-identical output is part of the CLI contract; pin BLAS thread pools
# before numpy is first imported unless the user already chose a setting.
for _var in ("OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "OMP_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

from .grids import (ConcatGrid, GridError, GridField, MomentumGrid, PositionGrid,
                    integrate, spectral_derivative, to_momentum, to_position)
from .model import (OpoModel, PhysicalParams, ReducedModel, condensate_phi0,
                    default_params, opo_params, optimal_omega_estimate,
                    single_probe_grid)
from .optics import OpticalStateMoments, coherent, fock, squeezed
from .prop_single import (IntegrationError, SingleModeSolution, evolve,
                          initial_solution, step, unitarity_defect, unitary_matrix)

__all__ = [
    "ConcatGrid", "GridError", "GridField", "MomentumGrid", "PositionGrid",
    "integrate", "spectral_derivative", "to_momentum", "to_position",
    "OpoModel", "PhysicalParams", "ReducedModel", "condensate_phi0",
    "default_params", "opo_params", "optimal_omega_estimate", "single_probe_grid",
    "OpticalStateMoments", "coherent", "fock", "squeezed",
    "IntegrationError", "SingleModeSolution", "evolve", "initial_solution",
    "step", "unitarity_defect", "unitary_matrix",
]
