import numpy as np
import pytest

from gapstates.bands import find_gaps, refine_edge, sweep_bands
from gapstates.fiber import PlaneWaveBasis
from gapstates.lattice import MomentumGrid, PotentialSpec


@pytest.fixture(scope="module")
def mathieu_bs():
    V = PotentialSpec.cosine(1, 1.0)
    return sweep_bands(V, PlaneWaveBasis(1, 16), MomentumGrid(1, 64),
                       n_bands=6)


def test_free_has_only_semi_infinite_gap():
    # Free bands touch only at the exact zone boundary, so a finite momentum
    # sample can show spurious finite "gaps"; they must shrink under grid
    # refinement while the semi-infinite gap persists with edge -> 0.
    V = PotentialSpec.zero(1)

    def spurious_width(n_p):
        bs = sweep_bands(V, PlaneWaveBasis(1, 8), MomentumGrid(1, n_p),
                         n_bands=4)
        gaps = find_gaps(bs)
        assert gaps[0].semi_infinite
        finite = [g.width for g in gaps if not g.semi_infinite]
        return max(finite, default=0.0), gaps[0].lam_plus

    w33, edge33 = spurious_width(33)
    w129, edge129 = spurious_width(129)
    assert w129 < 0.35 * w33
    assert 0.0 <= edge129 < edge33


def test_mathieu_finite_gaps(mathieu_bs):
    gaps = find_gaps(mathieu_bs)
    finite = [g for g in gaps if not g.semi_infinite]
    assert finite, "Mathieu potential must open finite gaps"
    first = finite[0]
    assert first.band_below == 1 and first.width > 0.1


def test_refined_edge_geometry(mathieu_bs):
    first = [g for g in find_gaps(mathieu_bs) if g.band_below == 1][0]
    upper = refine_edge(mathieu_bs, first, "upper")
    lower = refine_edge(mathieu_bs, first, "lower")
    # first Mathieu gap opens at the zone boundary p = pi
    assert abs(abs(upper.extrema[0].p[0]) - np.pi) <= 1e-6
    assert abs(abs(lower.extrema[0].p[0]) - np.pi) <= 1e-6
    assert upper.value > lower.value
    ex = upper.extrema[0]
    assert ex.simple and ex.morse and ex.mass > 0
    # effective mass consistency: second difference of the dispersion
    from gapstates.fiber import fiber_spectrum
    V = PotentialSpec.cosine(1, 1.0)
    basis = PlaneWaveBasis(1, 16)
    dp = 1e-3
    lam = [fiber_spectrum(np.array([ex.p[0] + s * dp]), V, basis,
                          upper.band).eigenvalues[upper.band - 1]
           for s in (-1, 0, 1)]
    second = (lam[0] - 2 * lam[1] + lam[2]) / dp ** 2
    assert abs(second - ex.hessian[0, 0]) <= 1e-3 * abs(second)


def test_refined_edge_value_below_grid_minimum(mathieu_bs):
    first = [g for g in find_gaps(mathieu_bs) if g.band_below == 1][0]
    upper = refine_edge(mathieu_bs, first, "upper")
    assert upper.value <= first.lam_plus + 1e-12
