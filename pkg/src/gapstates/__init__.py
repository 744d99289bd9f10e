"""Spectral gaps and weak-coupling gap states of periodic Schrodinger
operators -Laplacian + V + gamma W.

Pipeline: Floquet band structure (fiber) -> gap location and edge
geometry (bands) -> weighted-Bloch edge models (edge_model, synthetic)
-> closed-form weak-coupling predictions (predictor), cross-checked
against the Birman-Schwinger pencil (birman_schwinger) and a
direct-diagonalization oracle (oracle) on a shared truncated box, with
Green-kernel identities (green) as independent resolvent tests.
"""

__version__ = "0.1.0"

from .bands import BandStructure, GapEdge, SpectralGap, find_gaps, \
    refine_edge, sweep_bands
from .birman_schwinger import BranchTable, TruncatedH0, assemble_bs, \
    build_truncated_h0, characteristic_branches, edge_lambda_grid, \
    indefinite_split, multiplicity_bound_check, solve_pencil
from .config import ConfigError, Numerics, RunConfig, load_config, parse_config
from .edge_model import DegenerateEdgeModel, NonDegenerateEdgeModel, \
    degenerate_gw, gram_and_nu, w_quadrature, weighted_bloch
from .fiber import BlochFunction, PlaneWaveBasis, bloch_function, \
    default_cutoff, fiber_spectrum, sweep_fibers
from .green import fundamental_solution, lattice_green, \
    lattice_green_1d_closed, plane_wave_green, scaling_check
from .lattice import Lattice, MomentumGrid, PerturbationSpec, PotentialSpec, \
    evaluate_perturbation, evaluate_potential
from .oracle import OracleResult, convergence_study, eigenfunction_compare, \
    gap_spectrum, symbol_spectrum
from .predictor import Prediction, asymptotic_multiplicity, \
    lieb_thirring_sum, limiting_eigenfunction, predict_d1, predict_d2, \
    predict_degenerate, psi_scale, threshold_verdict
from .synthetic import SymbolHamiltonian, SyntheticDispersion, synthetic_edge
