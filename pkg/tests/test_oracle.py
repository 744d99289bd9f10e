import numpy as np
import pytest

import gapstates as gs
from gapstates.lattice import PerturbationSpec, PotentialSpec
from gapstates.oracle import (convergence_study, gap_spectrum,
                              radial_sector_spectrum)
from gapstates.synthetic import SyntheticDispersion


@pytest.fixture(scope="module")
def free_box():
    h0 = gs.build_truncated_h0(PotentialSpec.zero(1), 40, 1 / 32, d=1)
    h0.verify_gap(-np.inf, 0.0)
    return h0


W_BOX = PerturbationSpec.box(1, amplitude=1.0, half_width=0.5)


def test_window_required_without_verified_gap():
    h0 = gs.build_truncated_h0(PotentialSpec.zero(1), 10, 1 / 16, d=1)
    with pytest.raises(ValueError):
        gap_spectrum(h0, W_BOX, -0.2)


def test_certified_residuals_and_normalization(free_box):
    res = gap_spectrum(free_box, W_BOX, -0.2, window=(-np.inf, -1e-6),
                       n_want=2)
    assert res.n_levels >= 1
    assert np.all(res.residuals <= 1e-7)
    assert np.all(np.diff(res.eigenvalues) >= 0)
    # columns are unit vectors in the h-weighted L2 norm
    nrm = np.sqrt(res.cell_volume) * np.linalg.norm(res.eigenvectors[:, 0])
    assert abs(nrm - 1.0) <= 1e-8
    # the single shallow level sits near the closed-form depth (gamma/2)^2
    assert abs(res.eigenvalues[0] + 0.01) <= 0.002


def test_radial_sector_degeneracy_doubling():
    sd = SyntheticDispersion("radial_shell", 2)
    W = PerturbationSpec.gaussian(2, amplitude=0.6, sigma=2.0)
    res = radial_sector_spectrum(sd, W, -0.05, m_max=4, k_max=8.0, n_k=400,
                                 edge=-1e-12)
    evs = res.eigenvalues
    assert len(evs) >= 3
    # angular sectors +-m produce pairwise-degenerate levels; with the
    # deepest (m=0) level removed the rest cluster in pairs
    rest = np.sort(evs[1:])
    pairs = rest[: 2 * (len(rest) // 2)].reshape(-1, 2)
    assert np.all(np.abs(pairs[:, 0] - pairs[:, 1])
                  <= 1e-6 * np.abs(pairs[:, 0]))


def test_convergence_study_is_least_squares():
    g = np.array([-0.2, -0.1, -0.05])
    f = np.abs(g) * (3.0 + 0.5 * g)      # exact affine model in gamma
    out = convergence_study(g, f)
    assert abs(out["intercept"] - 3.0) <= 1e-12
    assert abs(out["slope"] - 0.5) <= 1e-12
    assert out["max_fit_error"] <= 1e-12
