"""Spatial model of a self-repressing gene: simulation, stationary states,
linear stability and Hopf normal forms."""

from .errors import *  # noqa: F401,F403
from .model import ModelParams, DiffusionRange, hill, hill_derivs, cyto_indicator, dirac_eps
from .greens import KernelContext, green, principal_sqrt
from .grid import SpatialGrid
from .steady import SteadyStateSolution, solve_p_at_gene, reconstruct_profiles, solve_eps_fixed_point
from .spectral import (CharacteristicContext, RootSet, TransversalityData, char_fn,
                       char_fn_deriv, find_roots, max_real_part, dpstar_dD, dlambda_dD)
from .simulator import ConcentrationState, Trajectory, AttractorClass, step, simulate, classify, late_time_profile
from .hopf import (HopfPoint, NormalFormIntermediates, AmplitudeParams, find_critical,
                   normal_form_intermediates, hopf_coefficient_b, analyze_hopf,
                   amplitude_evolve, predict_vs_simulate)

__version__ = "0.1.0"
