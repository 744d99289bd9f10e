import numpy as np
import pytest

from gapstates.lattice import PerturbationSpec, PotentialSpec, \
    evaluate_perturbation, evaluate_perturbation_cells, evaluate_potential, \
    perturbation_integrals


def test_potential_requires_hermitian_coefficients():
    with pytest.raises(ValueError):
        PotentialSpec(d=1, coefficients={(1,): 1.0})   # missing c_{-1}


def test_cosine_potential_values():
    V = PotentialSpec.cosine(1, amplitude=2.0)
    x = np.array([[0.0], [0.25], [0.5]])
    np.testing.assert_allclose(evaluate_potential(V, x), [2.0, 0.0, -2.0],
                               atol=1e-14)


def test_box_cell_average_preserves_integral():
    # cell averages remove the O(h) boundary double count: summing them
    # times h reproduces intW exactly for any grid offset
    W = PerturbationSpec.box(1, amplitude=1.0, half_width=0.5)
    for h in (1 / 64, 1 / 32):
        x = (-2 + h * np.arange(int(4 / h)))[:, None]
        w = evaluate_perturbation_cells(W, x, h)
        assert abs(np.sum(w) * h - 1.0) <= 1e-12
        # pointwise sampling double counts the boundary
        wp = np.array([evaluate_perturbation(W, xi) for xi in x])
        assert np.sum(wp) * h > 1.0 + h / 2


def test_gaussian_integral_and_support():
    W = PerturbationSpec.gaussian(2, amplitude=3.0, sigma=0.5)
    integrals = perturbation_integrals(W)
    assert abs(integrals["integral"] - 3.0 * 2 * np.pi * 0.25) <= 1e-10
    r = W.support_half_width(1e-14)
    assert evaluate_perturbation(W, np.array([[r + 0.5, 0.0]])) < 1e-13


def test_signed_split_reassembles():
    W = PerturbationSpec.box(1, 2.0, 0.25, center=(-0.3,)).plus(
        PerturbationSpec.box(1, -1.0, 0.1, center=(0.3,)))
    assert not W.definite
    x = np.linspace(-1, 1, 201)[:, None]
    w = np.array([evaluate_perturbation(W, xi) for xi in x])
    wp = np.array([evaluate_perturbation(W.positive_part(), xi) for xi in x])
    wm = np.array([evaluate_perturbation(W.negative_part(), xi) for xi in x])
    np.testing.assert_allclose(w, wp - wm, atol=1e-14)
    assert np.all(wp >= 0) and np.all(wm >= 0)


def test_scaled_perturbation():
    W = PerturbationSpec.box(1, amplitude=1.5, half_width=0.5)
    W2 = W.scaled(2.0)
    x = np.array([[0.1]])
    assert abs(evaluate_perturbation(W2, x[0])
               - 2.0 * evaluate_perturbation(W, x[0])) <= 1e-14
