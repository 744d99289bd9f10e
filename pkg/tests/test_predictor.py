import math

import numpy as np
import pytest

import gapstates as gs
from gapstates.edge_model import degenerate_gw
from gapstates.lattice import MomentumGrid, PerturbationSpec, PotentialSpec
from gapstates.predictor import (asymptotic_multiplicity, lieb_thirring_sum,
                                 predict_d1, predict_d2, predict_degenerate,
                                 psi_scale, threshold_verdict)
from gapstates.synthetic import SyntheticDispersion, synthetic_edge


@pytest.fixture(scope="module")
def free_model():
    V = PotentialSpec.zero(1)
    W = PerturbationSpec.box(1, amplitude=1.0, half_width=0.5)
    bs = gs.sweep_bands(V, gs.PlaneWaveBasis(1, 12), MomentumGrid(1, 33),
                        n_bands=3)
    gap = gs.find_gaps(bs)[0]
    edge = gs.refine_edge(bs, gap, "upper")
    return gs.gram_and_nu(edge, [gs.weighted_bloch(edge, 1, W)])


def test_d1_depth_closed_form(free_model):
    # free edge: m = 1/2, ||v||^2 = integral of W = 1, so depth = (gamma/2)^2
    for gamma in (-0.2, -0.05):
        pred = predict_d1(free_model, gamma)
        assert pred.law == "d1_sqrt" and pred.multiplicity == 1
        assert abs((-pred.rho[0]) - (gamma / 2.0) ** 2) <= 1e-12


def test_pairing_rules(free_model):
    with pytest.raises(ValueError):
        predict_d1(free_model, 0.1)     # gamma > 0 detaches from lambda_+
    with pytest.raises(ValueError):
        predict_d1(free_model, 0.0)


def test_validity_radius(free_model):
    finite = predict_d1(free_model, -0.1, gap_width=1.0)
    assert np.isfinite(finite.validity_radius) and finite.validity_radius > 0
    assert predict_d1(free_model, -0.1).validity_radius == np.inf
    # at gamma = validity_radius the depth reaches half the gap
    g = finite.validity_radius
    assert abs((-predict_d1(free_model, -g).rho[0]) - 0.5) <= 1e-12


def test_psi_scale_laws():
    s = np.array([1e-4, 1e-2])
    c1 = psi_scale(s, 2, 1)
    assert np.allclose(c1, (2 * np.pi) ** 2 / (math.sqrt(2) * np.pi) * np.sqrt(s))
    c2 = psi_scale(s, 2, 2)
    assert np.allclose(c2, 2 * np.pi / np.log(1.0 / s))
    with pytest.raises(ValueError):
        psi_scale(s, 3, 3)


def test_degenerate_prediction_inverts_psi():
    sd = SyntheticDispersion("radial_shell", 2)
    W = PerturbationSpec.gaussian(2, amplitude=0.6, sigma=2.0)
    edge = synthetic_edge(sd, 128)
    model = degenerate_gw(edge, W, nodes_per_unit=8)
    gamma = -0.05
    pred = predict_degenerate(model, gamma, n=4)
    depths = -pred.rho
    assert pred.law == "degenerate_psi" and pred.multiplicity == math.inf
    target = abs(gamma) * model.nu[:len(depths)]
    back = psi_scale(depths, 2, 1, model.psi_calibration)
    assert np.allclose(back, target, rtol=1e-10)
    assert np.all(np.diff(depths) <= 0)


def test_codim3_has_no_branch_model():
    # codimension 3 carries no virtual levels, so the kernel model refuses it
    sd = SyntheticDispersion("point", 3)
    W = PerturbationSpec.gaussian(3, amplitude=1.0, sigma=1.0)
    edge = synthetic_edge(sd, 8)
    with pytest.raises(ValueError):
        degenerate_gw(edge, W, nodes_per_unit=4)


def test_asymptotic_multiplicity_table(free_model):
    assert asymptotic_multiplicity(free_model.edge) == 1
    assert asymptotic_multiplicity(
        synthetic_edge(SyntheticDispersion("point", 2), 8)) == 1
    assert asymptotic_multiplicity(
        synthetic_edge(SyntheticDispersion("point", 3), 8)) == 0
    assert asymptotic_multiplicity(
        synthetic_edge(SyntheticDispersion("radial_shell", 2), 8)) == math.inf
    assert asymptotic_multiplicity(
        synthetic_edge(SyntheticDispersion("ring_in_3d", 3), 8)) == math.inf


def test_lieb_thirring_both_paths(free_model):
    # non-degenerate: |gamma|/(2 pi) * sum sqrt(m_k) ||v_k||^2
    got = lieb_thirring_sum(free_model, -0.3)
    assert abs(got - 0.3 / (2 * np.pi) * math.sqrt(0.5) * 1.0) <= 1e-10
    sd = SyntheticDispersion("radial_shell", 2)
    W = PerturbationSpec.gaussian(2, amplitude=0.6, sigma=2.0)
    model = degenerate_gw(synthetic_edge(sd, 128), W, nodes_per_unit=8)
    got = lieb_thirring_sum(model, -0.3)
    assert abs(got - 0.3 * model.trace_diagonal) <= 1e-12
    assert model.trace_diagonal > 0


def test_threshold_verdict_flags():
    W = PerturbationSpec.gaussian(3, amplitude=1.0, sigma=1.0)
    v = threshold_verdict(synthetic_edge(SyntheticDispersion("point", 3), 8), W)
    assert not v["has_virtuals"] and v["no_virtuals_for_small_gamma"]
    v = threshold_verdict(
        synthetic_edge(SyntheticDispersion("radial_shell", 2), 8),
        PerturbationSpec.gaussian(2, amplitude=1.0, sigma=1.0))
    assert v["has_virtuals"]
