import numpy as np
import pytest
import scipy.integrate
import scipy.special

from gapstates.green import (fundamental_solution, lattice_green,
                             lattice_green_1d_closed, plane_wave_green,
                             scaling_check)


def _fourier_oracle(r, gamma0, d):
    """E_d(x) from the radial Fourier integral, via adaptive quadrature."""
    if d == 1:
        # (1/pi) int_0^inf cos(k r) / (k^2 + g^2) dk
        val, _ = scipy.integrate.quad(
            lambda k: 1.0 / (np.pi * (k**2 + gamma0**2)),
            0, np.inf, weight="cos", wvar=r)
        return val
    if d == 2:
        # (1/(2 pi)) int_0^inf k J_0(k r) / (k^2 + g^2) dk = K_0(g r)/(2 pi)
        return scipy.special.k0(gamma0 * r) / (2.0 * np.pi)
    # (1/(2 pi^2 r)) int_0^inf k sin(k r) / (k^2 + g^2) dk
    val, _ = scipy.integrate.quad(
        lambda k: k / (2.0 * np.pi**2 * r * (k**2 + gamma0**2)),
        0, np.inf, weight="sin", wvar=r)
    return val


@pytest.mark.parametrize("d", [1, 2, 3])
def test_closed_forms_match_fourier_oracle(d):
    for g in (0.7, 1.3):
        for r in (0.3, 1.1):
            x = np.zeros(d)
            x[0] = r
            got = float(fundamental_solution(x, g, d))
            assert abs(got - _fourier_oracle(r, g, d)) <= 1e-9


@pytest.mark.parametrize("d", [1, 2, 3])
def test_scaling_identity(d):
    x = np.array([[0.4] + [0.1] * (d - 1), [1.2] + [0.2] * (d - 1)])
    assert scaling_check(x, 1.7, d) <= 1e-12


def test_domain_errors():
    with pytest.raises(ValueError):
        fundamental_solution(np.array([[0.5]]), -1.0, 1)
    with pytest.raises(ValueError):
        fundamental_solution(np.zeros((1, 3)), 1.0, 3)   # singular at 0
    with pytest.raises(ValueError):
        fundamental_solution(np.zeros((1, 4)), 1.0, 4)   # d >= 4 unsupported
    with pytest.raises(ValueError):
        fundamental_solution(np.zeros((1, 2)), 1.0, 3)   # wrong point shape


def test_lattice_sum_matches_1d_closed_form():
    for x in (0.25, 1.7, -0.4):
        for p in (0.0, 1.1, np.pi):
            a = lattice_green(np.array([x]), np.array([p]), 1.5, 1)
            b = lattice_green_1d_closed(x, p, 1.5)
            assert abs(a - b) <= 1e-12


def test_lattice_rejects_tiny_gamma0():
    with pytest.raises(ValueError):
        lattice_green(np.array([0.3]), np.array([0.0]), 1e-3, 1)


@pytest.mark.parametrize("d", [1, 2])
def test_cross_representation(d):
    # Poisson summation: plane-wave sum equals e^{-ip.u} * lattice sum
    g = 1.0
    u = np.full(d, 0.3)
    p = np.full(d, 0.7)
    # d=2: the adaptive cutoff bound is far too pessimistic (the sum
    # actually converges ~1/N^2 thanks to oscillation), so pin it
    pw = plane_wave_green(u, p, g, d, tol=1e-8) if d == 1 else \
        plane_wave_green(u, p, g, d, cutoff=800)
    direct = np.exp(-1j * p @ u) * lattice_green(u, p, g, d)
    assert abs(pw - direct) <= 1e-6
