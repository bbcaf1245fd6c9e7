"""Boundary-integral toolkit for Neumann-Poincare spectra and plasmonics."""

from .geometry import (Curve, MarkedPoint, curvature, make_bump_family,
                       make_circle, make_ellipse, make_exp_sin_star,
                       make_multi_bump, make_radial, profile, scale_curve)
from .quadrature import PanelMesh, build_mesh, default_panels, integrate
from .layerpot import (DenseOperator, assemble_np, assemble_np_k, assemble_sl,
                       assemble_sl_k)
from .spectral import (EigenPair, check_half_eigen, eigendecompose,
                       eigenvalue_to_permittivity, ellipse_oracle,
                       match_oracle, permittivity_to_eigenvalue,
                       spectrum_to_csv)
from .fieldeval import (BoundaryTrace, FieldGrid, conormal_derivative,
                        eval_single_layer, grid_to_csv, grid_to_pgm,
                        harmonicity_check, points_inside, render_field,
                        trace_to_csv)
from .sweep import (RegressionFit, SweepRecord, ellipse_family, fit_power_law,
                    run_sweep, sweep_to_csv, table_report)
from .scatter import (ScatterConfig, ScatterSolution, boundary_enhancement,
                      energy_proxy, incident_field, interior_wavenumber,
                      localization_experiment, scatter_summary_csv,
                      solve_transmission, star_demo, total_field_grid)
from .cli import main, parse_scenario_text, run_scenario

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
