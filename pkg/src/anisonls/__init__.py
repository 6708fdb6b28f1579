"""Pseudospectral lab for long-range scattering of the anisotropic fourth-order NLS

    i u_t + (1/2) Laplacian u - (1/4) d_{x1}^4 u = lam |u|^{p-1} u.
"""

from .amplitudes import CallableAmplitude, GaussianAmplitude, GridAmplitude, InterpolationError
from .analysis import FitError, PowerLawFit, critical_predicate, fit_power_law, glassey_diagnostic
from .config import Config, ConfigError, dump_config, load_config, parse_config
from .grid import Domain, Field, GridSpec, NormSpec, inner, mass, norm, read_snapshot, write_snapshot
from .integrator import (
    FinalStateDivergence,
    MassDriftError,
    NumericalError,
    SolverConfig,
    TrajectoryRecord,
    picard_refine,
    solve_final_state,
    solve_ivp,
    strang_step,
)
from .kernels import BACKEND
from .profile import ProfileSpec, modified_free_data, modified_profile, phase_correction, residual_source
from .propagator import OracleFailure, QuadSpec, kernel_quadrature, plan_grid, propagate, sup_decay_series
from .stationary import leading_term, remainder_field, stationary_point

__version__ = "0.1.0"
