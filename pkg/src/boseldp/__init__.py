"""Large-deviation thermodynamics of Bose-gas cycle models.

Four grand-canonical models of cycle counts are covered: the ideal gas,
the cycle-mean-field (CMF), particle-mean-field (PMF) and
Huang-Yang-Luttinger (HYL) models.  The package computes rate-function
zeros, pressures, free energies and condensate densities, and checks them
against Monte Carlo sampling of the cycle counts.
"""

__version__ = "0.1.0"

from .errors import DomainError, NonConvergenceError, SizeError
from .extended import UNDEFINED, is_undefined
from .kernels import BACKEND
from .minimize import (HylSolverConfig, MinimizerSolution, hyl_solutions, zero,
                       zero_cmf, zero_hyl, zero_ideal, zero_pmf)
from .model import CycleCounts, Model, ModelParams, Weights
from .specfun import bose_g, lambert_w, zeta
from .thermo import (Regime, ThermoPoint, condensate, critical_density, dpressure_dmu,
                     free_energy, pressure, sweep)

__all__ = [
    "BACKEND", "CycleCounts", "DomainError", "HylSolverConfig", "MinimizerSolution",
    "Model", "ModelParams", "NonConvergenceError", "Regime", "SizeError", "ThermoPoint",
    "UNDEFINED", "Weights", "bose_g", "condensate", "critical_density", "dpressure_dmu",
    "free_energy", "hyl_solutions", "is_undefined", "lambert_w", "pressure", "sweep",
    "zero", "zero_cmf", "zero_hyl", "zero_ideal", "zero_pmf", "zeta",
]
