"""Plane-wave discretization of the fiber operators.

For a quasi-momentum p in [-pi, pi]^d the operator
sum_j (D_j + i p_j)^2 + V is diagonal-plus-convolution in the Fourier
basis exp(2*pi*i m.x): kinetic diagonal |2*pi*m + p|^2 and off-diagonal
entries V_hat(m - m').  Fiber matrices are small, so everything is a
dense Hermitian eigensolve.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass

import numpy as np

from .lattice import PotentialSpec

__all__ = [
    "PlaneWaveBasis",
    "FiberSpectrum",
    "BlochFunction",
    "assemble_fiber",
    "fiber_spectrum",
    "bloch_function",
    "time_reversal_check",
    "cutoff_convergence",
    "default_cutoff",
]

_DEFAULT_CUTOFF = {1: 16, 2: 8, 3: 4}


def default_cutoff(d: int) -> int:
    return _DEFAULT_CUTOFF[d]


@dataclass(frozen=True)
class PlaneWaveBasis:
    """Frequencies {m in Z^d : |m|_inf <= N} with a fixed row ordering."""

    d: int
    cutoff: int

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")

    @property
    def size(self) -> int:
        return (2 * self.cutoff + 1) ** self.d

    def frequencies(self) -> np.ndarray:
        """Integer frequencies, shape (size, d), lexicographic order."""
        rng = np.arange(-self.cutoff, self.cutoff + 1)
        mesh = np.meshgrid(*([rng] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index_of(self, m) -> int:
        m = np.atleast_1d(np.asarray(m, dtype=int))
        idx = 0
        for mi in m:
            if abs(mi) > self.cutoff:
                raise KeyError(f"frequency {tuple(m)} outside cutoff {self.cutoff}")
            idx = idx * (2 * self.cutoff + 1) + (mi + self.cutoff)
        return int(idx)

    def doubled(self) -> "PlaneWaveBasis":
        return PlaneWaveBasis(d=self.d, cutoff=2 * self.cutoff)


def assemble_fiber(p, V: PotentialSpec, basis: PlaneWaveBasis) -> np.ndarray:
    """Hermitian fiber matrix at quasi-momentum p."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if p.shape != (basis.d,):
        raise ValueError("quasi-momentum has wrong dimension")
    if V.max_frequency > 2 * basis.cutoff:
        raise ValueError(
            f"basis cutoff {basis.cutoff} too small for potential frequencies "
            f"up to {V.max_frequency}"
        )
    freqs = basis.frequencies()
    k = 2.0 * np.pi * freqs + p
    H = np.zeros((basis.size, basis.size), dtype=complex)
    np.fill_diagonal(H, np.sum(k * k, axis=1))
    for m, c in V.coefficients.items():
        diff = freqs[:, None, :] - freqs[None, :, :]
        mask = np.all(diff == np.asarray(m, dtype=int), axis=-1)
        H[mask] += c
    return H


@dataclass(frozen=True)
class FiberSpectrum:
    """Lowest eigenpairs of one fiber matrix."""

    p: np.ndarray
    basis: PlaneWaveBasis
    eigenvalues: np.ndarray          # ascending, shape (n_bands,)
    eigenvectors: np.ndarray         # Fourier coefficients, shape (size, n_bands)

    @property
    def n_bands(self) -> int:
        return len(self.eigenvalues)


def fiber_spectrum(p, V: PotentialSpec, basis: PlaneWaveBasis,
                   n_bands: int) -> FiberSpectrum:
    """Diagonalize the fiber at p and keep the lowest n_bands eigenpairs."""
    if n_bands > basis.size:
        raise ValueError("n_bands exceeds basis size")
    H = assemble_fiber(p, V, basis)
    try:
        vals, vecs = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"fiber eigensolve failed at p={p}") from exc
    return FiberSpectrum(
        p=np.atleast_1d(np.asarray(p, dtype=float)),
        basis=basis,
        eigenvalues=vals[:n_bands].copy(),
        eigenvectors=vecs[:, :n_bands].copy(),
    )


@dataclass(frozen=True)
class BlochFunction:
    """Bloch function b(x, p) = exp(i p.x) sum_m c_m exp(2*pi*i m.x).

    ``values`` holds samples on a uniform grid over the unit cell; the
    coefficient representation allows evaluation anywhere in R^d via the
    quasi-periodic extension rule b(x + l) = exp(i p.l) b(x).
    """

    p: np.ndarray
    band: int
    basis: PlaneWaveBasis
    coefficients: np.ndarray
    grid_axes: tuple
    values: np.ndarray

    def __call__(self, x) -> np.ndarray:
        """Evaluate b anywhere in R^d (quasi-periodic by construction)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape[-1] != self.basis.d:
            if self.basis.d == 1:
                x = x[..., None]
            else:
                raise ValueError("point has wrong dimension")
        freqs = self.basis.frequencies()
        phases = np.exp(1j * (x @ self.p)) * (
            np.exp(2j * np.pi * (x @ freqs.T)) @ self.coefficients
        )
        return phases


def _cell_axes(d: int, n: int) -> tuple:
    ax = -0.5 + np.arange(n) / n
    return tuple(ax for _ in range(d))


def bloch_function(fs: FiberSpectrum, band: int, grid_points: int = 64) -> BlochFunction:
    """Normalized, phase-fixed Bloch function for one computed band.

    Bands are 1-based.  The L2(cell) norm is 1; the global phase is fixed
    so the value at the first grid point with |b| > 0.1*max|b| is real
    positive (all downstream quantities are phase-invariant, the fix only
    makes output files reproducible).
    """
    if not 1 <= band <= fs.n_bands:
        raise ValueError(f"band {band} not computed (have {fs.n_bands})")
    c = fs.eigenvectors[:, band - 1].copy()
    # Fourier coefficients are orthonormal in l2 <=> unit L2 norm on the cell.
    c /= np.linalg.norm(c)
    axes = _cell_axes(fs.basis.d, grid_points)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    freqs = fs.basis.frequencies()
    vals = np.exp(1j * (pts @ fs.p)) * (np.exp(2j * np.pi * (pts @ freqs.T)) @ c)
    amax = np.max(np.abs(vals))
    anchor = np.argmax(np.abs(vals) > 0.1 * amax)
    phase = vals[anchor] / abs(vals[anchor])
    c /= phase
    vals /= phase
    return BlochFunction(
        p=fs.p,
        band=band,
        basis=fs.basis,
        coefficients=c,
        grid_axes=axes,
        values=vals.reshape([grid_points] * fs.basis.d),
    )


def time_reversal_check(V: PotentialSpec, basis: PlaneWaveBasis,
                        p_samples: np.ndarray, n_bands: int = 4) -> float:
    """max over samples and bands of |lambda_n(p) - lambda_n(-p)|."""
    worst = 0.0
    for p in np.atleast_2d(p_samples):
        lp = fiber_spectrum(p, V, basis, n_bands).eigenvalues
        lm = fiber_spectrum(-p, V, basis, n_bands).eigenvalues
        worst = max(worst, float(np.max(np.abs(lp - lm))))
    return worst


def cutoff_convergence(V: PotentialSpec, basis: PlaneWaveBasis,
                       p_samples: np.ndarray, n_bands: int) -> float:
    """max change of the tracked bands when the cutoff doubles."""
    big = basis.doubled()
    worst = 0.0
    for p in np.atleast_2d(p_samples):
        a = fiber_spectrum(p, V, basis, n_bands).eigenvalues
        b = fiber_spectrum(p, V, big, n_bands).eigenvalues
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


def sweep_fibers(ps: np.ndarray, V: PotentialSpec, basis: PlaneWaveBasis,
                 n_bands: int, threads: int = 1) -> np.ndarray:
    """Eigenvalues over a list of momenta; parallel map, deterministic order."""
    ps = np.atleast_2d(np.asarray(ps, dtype=float))
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            specs = list(ex.map(
                lambda p: fiber_spectrum(p, V, basis, n_bands).eigenvalues, ps))
    else:
        specs = [fiber_spectrum(p, V, basis, n_bands).eigenvalues for p in ps]
    return np.array(specs)
