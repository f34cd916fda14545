"""Spectral laboratory for the Choquard equation ``-Lap u + u = (I_alpha * |u|^p) |u|^(p-2) u``."""

from .grid import Field, GridMismatchError, GridSpec, read_field, write_field
from .riesz import RieszKernelSpec, hls_constant, hls_constant_unnormalized, riesz_constant, riesz_convolve
from .functionals import ChoquardParams, NehariError, NodalScales, action_choquard, nehari_scale, nodal_scales
from .limits import gamma_level, kappa_level, limit_groundstate_V, nls_groundstate, nondegeneracy_spectrum
from .solvers import (
    CollapseError,
    MaxIterationsError,
    SolveResult,
    SolverConfig,
    SolverError,
    fit_two_bumps,
    solve_groundstate,
    solve_nodal,
    symmetry_defect,
    two_bump_init,
)
from .sweep import ExperimentReport, SweepConfig, run_sweep, run_sweep_alpha0, run_sweep_alphaN

__version__ = "0.1.0"
