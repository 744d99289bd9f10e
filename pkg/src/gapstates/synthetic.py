"""Synthetic Fourier-multiplier dispersions with Morse-Bott minima.

Genuine periodic potentials in our catalog never produce a positive-
dimensional extremal manifold, so the degenerate edge machinery is
exercised on whole-space Hamiltonians a(D) + gamma*W whose symbol a(k)
attains its minimum on a circle or sphere.  The catalog:

    point        a(k) = |k|^2                      F = {0},      codim d
    radial_shell a(k) = (|k| - k0)^2               F = sphere,   codim 1
    ring_in_3d   a(k) = (|k_xy| - k0)^2 + k3^2     F = circle,   codim 2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .bands import GapEdge, EdgeExtremum

__all__ = ["SyntheticDispersion", "synthetic_edge", "SymbolHamiltonian"]

_KINDS = ("point", "radial_shell", "ring_in_3d")


@dataclass(frozen=True)
class SyntheticDispersion:
    """Radial-catalog symbol with a known minimum manifold."""

    kind: str
    d: int
    k0: float = 1.0
    offset: float = 0.0   # minimum value of the symbol (the edge)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown catalog kind {self.kind!r}")
        if self.kind == "radial_shell" and self.d not in (2, 3):
            raise ValueError("radial_shell needs d in {2, 3}")
        if self.kind == "ring_in_3d" and self.d != 3:
            raise ValueError("ring_in_3d needs d = 3")

    def symbol(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kind == "point":
            return self.offset + np.sum(k * k, axis=-1)
        if self.kind == "radial_shell":
            r = np.sqrt(np.sum(k * k, axis=-1))
            return self.offset + (r - self.k0) ** 2
        rho = np.sqrt(k[..., 0] ** 2 + k[..., 1] ** 2)
        return self.offset + (rho - self.k0) ** 2 + k[..., 2] ** 2

    @property
    def manifold_dim(self) -> int:
        return {"point": 0,
                "radial_shell": self.d - 1,
                "ring_in_3d": 1}[self.kind]

    @property
    def codim(self) -> int:
        return self.d - self.manifold_dim

    def normal_hessian_det(self) -> float:
        """det of the symbol Hessian restricted to normal directions."""
        if self.kind == "point":
            return 2.0 ** self.d
        if self.kind == "radial_shell":
            return 2.0
        return 4.0   # diag(2, 2) in the (radial, k3) normal plane

    @property
    def mass(self) -> float:
        return 1.0 / self.normal_hessian_det()

    def sample_manifold(self, n_samples: int):
        """Uniform samples, volume-form weights and normal masses on F."""
        if self.kind == "point":
            return (np.zeros((1, self.d)), np.ones(1), np.array([self.mass]))
        if self.kind == "radial_shell" and self.d == 2 or self.kind == "ring_in_3d":
            th = 2.0 * np.pi * np.arange(n_samples) / n_samples
            xy = self.k0 * np.stack([np.cos(th), np.sin(th)], axis=-1)
            pts = xy if self.d == 2 else np.concatenate(
                [xy, np.zeros((n_samples, 1))], axis=-1)
            w = np.full(n_samples, 2.0 * np.pi * self.k0 / n_samples)
            return pts, w, np.full(n_samples, self.mass)
        # sphere in d=3: Gauss-Legendre in cos(theta) x uniform in phi
        n_th = max(2, int(np.sqrt(n_samples)))
        n_ph = max(2, n_samples // n_th)
        nodes, gw = np.polynomial.legendre.leggauss(n_th)
        ph = 2.0 * np.pi * np.arange(n_ph) / n_ph
        ct, phm = np.meshgrid(nodes, ph, indexing="ij")
        st = np.sqrt(1.0 - ct**2)
        pts = self.k0 * np.stack(
            [st * np.cos(phm), st * np.sin(phm), ct], axis=-1).reshape(-1, 3)
        w = (self.k0**2 * np.outer(gw, np.full(n_ph, 2.0 * np.pi / n_ph))).ravel()
        m = np.full(len(pts), self.mass)
        return pts, w, m

    def minimum_residual(self, n_starts: int = 8, seed: int = 0) -> float:
        """Max distance of minimized points from the stated manifold."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_starts):
            x0 = rng.uniform(-2.0, 2.0, self.d)
            res = optimize.minimize(lambda k: self.symbol(k), x0, method="Nelder-Mead",
                                    options={"xatol": 1e-12, "fatol": 1e-15,
                                             "maxiter": 4000})
            k = res.x
            if self.kind == "point":
                dist = float(np.linalg.norm(k))
            elif self.kind == "radial_shell":
                dist = abs(float(np.linalg.norm(k)) - self.k0)
            else:
                dist = float(np.hypot(np.hypot(k[0], k[1]) - self.k0, k[2]))
            worst = max(worst, dist)
        return worst


def synthetic_edge(sd: SyntheticDispersion, n_samples: int = 64) -> GapEdge:
    """GapEdge view of a synthetic symbol's minimum (an upper gap edge).

    The symbol's minimum value bounds the essential spectrum from below,
    so the edge plays the role of lambda_+ of the semi-infinite gap.
    """
    pts, wts, masses = sd.sample_manifold(n_samples)
    if sd.kind == "point":
        extile = (EdgeExtremum(
            p=np.zeros(sd.d), value=sd.offset,
            hessian=2.0 * np.eye(sd.d), mass=sd.mass,
            simplicity_margin=np.inf, simple=True, morse=True),)
        return GapEdge(side="upper", band=1, value=sd.offset, extrema=extile,
                       degenerate=False, synthetic=sd,
                       manifold={"points": pts, "weights": wts, "masses": masses,
                                 "dim": 0, "codim": sd.codim})
    return GapEdge(
        side="upper", band=1, value=sd.offset, extrema=(),
        degenerate=True, synthetic=sd,
        manifold={"points": pts, "weights": wts, "masses": masses,
                  "dim": sd.manifold_dim, "codim": sd.codim},
    )


class SymbolHamiltonian:
    """a(D) + gamma*W on a periodic box, with FFT-applied symbol.

    The grid covers [-L, L)^d with n points per axis; discrete momenta
    are the FFT frequencies, so a(D) is exact on the resolved modes.
    """

    def __init__(self, sd: SyntheticDispersion, L: float, n: int):
        self.sd = sd
        self.L = float(L)
        self.n = int(n)
        self.h = 2.0 * self.L / self.n
        ax = -self.L + self.h * np.arange(self.n)
        self.axes = (ax,) * sd.d
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)
        mesh = np.meshgrid(*([k1] * sd.d), indexing="ij")
        kvec = np.stack(mesh, axis=-1)
        self.symbol_grid = sd.symbol(kvec)
        self.shape = self.symbol_grid.shape

    @property
    def n_points(self) -> int:
        return self.n ** self.sd.d

    def grid_points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def apply_symbol(self, psi_flat: np.ndarray) -> np.ndarray:
        psi = psi_flat.reshape(self.shape)
        return np.fft.ifftn(self.symbol_grid * np.fft.fftn(psi)).real.ravel()

    def solve_shifted(self, shift: float, rhs_flat: np.ndarray) -> np.ndarray:
        """(a(D) + shift)^(-1) rhs;  shift must avoid -symbol values."""
        rhs = rhs_flat.reshape(self.shape)
        return np.fft.ifftn(np.fft.fftn(rhs) / (self.symbol_grid + shift)).real.ravel()
