import numpy as np
import pytest

from gapstates.synthetic import (SymbolHamiltonian, SyntheticDispersion,
                                 synthetic_edge)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        SyntheticDispersion("saddle", 2)
    with pytest.raises(ValueError):
        SyntheticDispersion("ring_in_3d", 2)


@pytest.mark.parametrize("kind,d", [("point", 2), ("point", 3),
                                    ("radial_shell", 2), ("radial_shell", 3),
                                    ("ring_in_3d", 3)])
def test_stated_manifold_is_the_minimum(kind, d):
    sd = SyntheticDispersion(kind, d)
    assert sd.minimum_residual(n_starts=6, seed=3) <= 1e-4
    pts, _, _ = sd.sample_manifold(32)
    assert np.max(np.abs(sd.symbol(pts) - sd.offset)) <= 1e-12


def test_manifold_weights_are_the_volume_form():
    circle = SyntheticDispersion("radial_shell", 2, k0=1.5)
    _, w, m = circle.sample_manifold(100)
    assert abs(w.sum() - 2 * np.pi * 1.5) <= 1e-12
    assert np.allclose(m, 0.5)

    sphere = SyntheticDispersion("radial_shell", 3, k0=2.0)
    _, w, _ = sphere.sample_manifold(400)
    assert abs(w.sum() - 4 * np.pi * 4.0) <= 1e-8

    ring = SyntheticDispersion("ring_in_3d", 3, k0=1.0)
    pts, w, m = ring.sample_manifold(64)
    assert pts.shape == (64, 3) and np.allclose(pts[:, 2], 0.0)
    assert abs(w.sum() - 2 * np.pi) <= 1e-12
    assert np.allclose(m, 0.25)


def test_synthetic_edge_classification():
    pt = synthetic_edge(SyntheticDispersion("point", 2), 16)
    assert not pt.degenerate and pt.manifold["codim"] == 2
    assert pt.extrema[0].simple and pt.extrema[0].morse

    shell = synthetic_edge(SyntheticDispersion("radial_shell", 3, offset=-1.0), 64)
    assert shell.degenerate and shell.value == -1.0
    assert shell.manifold["dim"] == 2 and shell.manifold["codim"] == 1


def test_symbol_hamiltonian_roundtrip():
    sd = SyntheticDispersion("radial_shell", 2)
    sh = SymbolHamiltonian(sd, L=4.0, n=32)
    assert sh.n_points == 32 ** 2
    rng = np.random.default_rng(7)
    x = rng.standard_normal(sh.n_points)
    # (a(D) + s)^(-1) inverts a(D) + s exactly on the resolved modes
    y = sh.solve_shifted(0.7, x)
    back = sh.apply_symbol(y) + 0.7 * y
    assert np.linalg.norm(back - x) <= 1e-10 * np.linalg.norm(x)


def test_symbol_floor_matches_dispersion_minimum():
    sd = SyntheticDispersion("radial_shell", 2, offset=0.5)
    sh = SymbolHamiltonian(sd, L=8.0, n=64)
    assert sh.symbol_grid.min() >= 0.5 - 1e-12
    # the discrete momenta come close to the shell radius
    assert sh.symbol_grid.min() - 0.5 <= (np.pi / 8.0) ** 2
