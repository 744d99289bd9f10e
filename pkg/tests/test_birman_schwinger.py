import numpy as np
import pytest

import gapstates as gs
from gapstates.lattice import PerturbationSpec, PotentialSpec


@pytest.fixture(scope="module")
def free_box():
    h0 = gs.build_truncated_h0(PotentialSpec.zero(1), 20, 1 / 32, d=1)
    h0.verify_gap(-np.inf, 0.0)
    return h0


W_BOX = PerturbationSpec.box(1, amplitude=1.0, half_width=0.5)


def test_build_validation():
    V = PotentialSpec.zero(1)
    with pytest.raises(ValueError):
        gs.build_truncated_h0(V, 10.5, 1 / 32, d=1)    # fractional cells
    with pytest.raises(ValueError):
        gs.build_truncated_h0(V, 10, 0.013, d=1)       # h does not divide 1


def test_verify_gap_rejects_false_gap(free_box):
    with pytest.raises(ArithmeticError):
        gs.build_truncated_h0(PotentialSpec.zero(1), 20, 1 / 32,
                              d=1).verify_gap(2.0, 3.0)


def test_bs_operator_symmetric_for_definite_w(free_box):
    X = gs.assemble_bs(free_box, W_BOX, -0.05)
    assert X.definite
    assert X.symmetry_defect <= 1e-10


def test_lambda_outside_gap_rejected(free_box):
    with pytest.raises(ValueError):
        gs.assemble_bs(free_box, W_BOX, 1.0)


def test_resolvent_identity(free_box):
    # (H0 - lam)^(-1) applied to a random load satisfies the equation
    rng = np.random.default_rng(1)
    b = rng.standard_normal(free_box.n_points)
    u = free_box.solve(-0.3, b)
    resid = np.linalg.norm(free_box.matvec(u) + 0.3 * u - b)
    assert resid <= 1e-10 * np.linalg.norm(b)


def test_pencil_root_is_direct_eigenvalue(free_box):
    grid = gs.edge_lambda_grid(0.0, 1.0, n=17)
    table = gs.characteristic_branches(free_box, W_BOX, grid, n_branches=2)
    roots = gs.solve_pencil(table, -0.4)
    assert roots
    rho = roots[0][0]
    # rho must be an eigenvalue of H0 + gamma W on the same grid
    w = np.zeros(free_box.n_points)
    from gapstates.lattice import evaluate_perturbation_cells
    w = evaluate_perturbation_cells(W_BOX, free_box.grid_points(), free_box.h)
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla
    H = free_box.matrix + sp.diags(-0.4 * w)
    ev = spla.eigsh(H.tocsc(), k=1, sigma=rho, return_eigenvectors=False)
    assert abs(ev[0] - rho) <= 1e-9


def test_branches_monotone(free_box):
    grid = gs.edge_lambda_grid(0.0, 1.0, n=17)
    table = gs.characteristic_branches(free_box, W_BOX, grid, n_branches=3)
    assert np.all(np.diff(table.positive, axis=0) >= -1e-9)
    # definite W >= 0: no negative branches
    assert np.all(table.negative == 0.0)


def test_indefinite_split_residual(free_box):
    W = PerturbationSpec.box(1, 1.0, 0.25, center=(-0.3,)).plus(
        PerturbationSpec.box(1, -0.5, 0.1, center=(0.3,)))
    out = gs.indefinite_split(free_box, W, -0.1)
    assert out["residual"] <= 1e-10
    n = out["re_xw"].shape[0]
    assert out["x_wplus"].shape == (n, n)
