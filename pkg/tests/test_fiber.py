import numpy as np

from gapstates.fiber import PlaneWaveBasis, cutoff_convergence, \
    fiber_spectrum, time_reversal_check
from gapstates.lattice import PotentialSpec


def test_free_fiber_eigenvalues_exact():
    V = PotentialSpec.zero(1)
    basis = PlaneWaveBasis(1, 8)
    p = np.array([0.7])
    fs = fiber_spectrum(p, V, basis, n_bands=5)
    ms = 2 * np.pi * np.arange(-8, 9)
    exact = np.sort((p[0] + ms) ** 2)[:5]
    np.testing.assert_allclose(fs.eigenvalues[:5], exact, atol=1e-10)


def test_free_fiber_d2():
    V = PotentialSpec.zero(2)
    basis = PlaneWaveBasis(2, 4)
    p = np.array([0.3, -0.9])
    fs = fiber_spectrum(p, V, basis, n_bands=3)
    assert abs(fs.eigenvalues[0] - (0.3 ** 2 + 0.9 ** 2)) <= 1e-10


def test_mathieu_gap_opens_at_zone_boundary():
    V = PotentialSpec.cosine(1, 1.0)
    basis = PlaneWaveBasis(1, 16)
    fs = fiber_spectrum(np.array([np.pi]), V, basis, n_bands=3)
    gap = fs.eigenvalues[1] - fs.eigenvalues[0]
    # first-order perturbation theory: gap ~ 2 |c_1| = 1 for A cos with A=1
    assert 0.8 <= gap <= 1.2


def test_symmetry_checks_small():
    V = PotentialSpec.cosine(1, 1.0)
    basis = PlaneWaveBasis(1, 12)
    ps = np.linspace(-3, 3, 7)[:, None]
    assert time_reversal_check(V, basis, ps, n_bands=4) <= 1e-10
    assert cutoff_convergence(V, basis, ps, n_bands=4) <= 1e-8
