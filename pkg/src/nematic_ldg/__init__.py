"""Landau-de Gennes Q-tensor energies and their vanishing-elastic-constant limit."""

__version__ = "0.1.0"

from .bulk import MaterialParams, derive_params  # noqa: E402
from .field import DirectorField, Grid3, QField  # noqa: E402
from .solve import SolverOptions, limiting_map, minimize_director, minimize_q  # noqa: E402

__all__ = [
    "MaterialParams",
    "derive_params",
    "Grid3",
    "QField",
    "DirectorField",
    "SolverOptions",
    "minimize_q",
    "minimize_director",
    "limiting_map",
]
