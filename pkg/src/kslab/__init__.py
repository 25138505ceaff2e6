"""Numerical laboratory for the Kudryashov-Sinelshchikov equation and its
vanishing-viscosity, vanishing-dispersion limit to the Burgers equation."""

__version__ = "0.1.0"

from .burgers import (EntropyPair, TestFunction, burgers_solve, entropy_report,
                      entropy_residual, godunov_flux, make_entropy_pair, riemann_exact,
                      weak_form_residual)
from .estimates import (check_estimates, dissipation_budget, entropy_production_terms,
                        estimate_report, linf_bound_check, rate_quantities)
from .grid import (Field, Grid, InitialDatum, SupportError, make_grid, mollify, norm,
                   product_integral, read_field_csv, spectral_derivative, write_field_csv)
from .limit import (ConvergenceTable, SweepConfig, Window, empirical_order, lp_window_error,
                    run_sweep)
from .params import (AppendixProblem, KSParams, NoRealRootsError, RootFindingError,
                     alpha_threshold, appendix_roots, coupling_beta,
                     energy_preserving_coefficients, odd_exponent_check,
                     two_roots_certificate, verify_constraint_system)
from .solver import (BlowUpError, NonConservativeError, SolverConfig, Trajectory, ks_rhs,
                     select_timestep, simulate, step)

__all__ = [name for name in dir() if not name.startswith("_")]
