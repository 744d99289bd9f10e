"""Band sweeps, gap detection and band-edge geometry.

Extremal sets of the edge dispersion functions are located on a coarse
momentum grid and refined by Newton iteration on the fiber eigenvalue
with finite-difference derivatives (fiber solves are cheap, so no
Hellmann-Feynman machinery).  Effective masses come from Richardson-
extrapolated finite-difference Hessians.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fiber import PlaneWaveBasis, bloch_function, fiber_spectrum, sweep_fibers
from .lattice import MomentumGrid, PotentialSpec

__all__ = [
    "GAP_TOLERANCE",
    "REFINE_TOL",
    "SIMPLE_TOL",
    "MORSE_TOL",
    "BandStructure",
    "SpectralGap",
    "EdgeExtremum",
    "GapEdge",
    "sweep_bands",
    "find_gaps",
    "refine_edge",
    "hessian_fd",
]

GAP_TOLERANCE = 1e-6
REFINE_TOL = 1e-9
SIMPLE_TOL = 1e-4
MORSE_TOL = 1e-6


@dataclass(frozen=True)
class BandStructure:
    """Dispersion table lambda_n(p) over a momentum grid."""

    V: PotentialSpec
    basis: PlaneWaveBasis
    grid: MomentumGrid
    bands: np.ndarray  # shape (len(grid), n_bands), ascending per row

    @property
    def n_bands(self) -> int:
        return self.bands.shape[1]


def sweep_bands(V: PotentialSpec, basis: PlaneWaveBasis, grid: MomentumGrid,
                n_bands: int, threads: int = 1) -> BandStructure:
    table = sweep_fibers(grid.points(), V, basis, n_bands, threads=threads)
    return BandStructure(V=V, basis=basis, grid=grid, bands=table)


@dataclass(frozen=True)
class SpectralGap:
    """Gap between band j and band j+1; j=0 is the semi-infinite gap."""

    band_below: int     # j; 0 means (-inf, min lambda_1)
    lam_minus: float    # -inf for the semi-infinite gap
    lam_plus: float

    @property
    def width(self) -> float:
        return self.lam_plus - self.lam_minus

    @property
    def semi_infinite(self) -> bool:
        return self.band_below == 0


def find_gaps(bs: BandStructure, gap_tolerance: float = GAP_TOLERANCE) -> list:
    """All gaps above gap_tolerance, semi-infinite one first."""
    gaps = [SpectralGap(band_below=0, lam_minus=-np.inf,
                        lam_plus=float(np.min(bs.bands[:, 0])))]
    for j in range(1, bs.n_bands):
        lo = float(np.max(bs.bands[:, j - 1]))
        hi = float(np.min(bs.bands[:, j]))
        if hi - lo > gap_tolerance:
            gaps.append(SpectralGap(band_below=j, lam_minus=lo, lam_plus=hi))
    return gaps


def hessian_fd(evaluator, p0: np.ndarray, h: float = 1e-3) -> np.ndarray:
    """Richardson-extrapolated central-difference Hessian of a scalar field."""

    def raw(step: float) -> np.ndarray:
        d = len(p0)
        H = np.zeros((d, d))
        f0 = evaluator(p0)
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = step
            H[i, i] = (evaluator(p0 + ei) - 2.0 * f0 + evaluator(p0 - ei)) / step**2
            for j in range(i + 1, d):
                ej = np.zeros(d)
                ej[j] = step
                H[i, j] = (
                    evaluator(p0 + ei + ej) - evaluator(p0 + ei - ej)
                    - evaluator(p0 - ei + ej) + evaluator(p0 - ei - ej)
                ) / (4.0 * step**2)
                H[j, i] = H[i, j]
        return H

    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    H = (4.0 * raw(h / 2.0) - raw(h)) / 3.0
    asym = np.max(np.abs(H - H.T))
    if asym > 1e-6:
        warnings.warn(f"Hessian asymmetry {asym:.2e} beyond 1e-6")
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class EdgeExtremum:
    """One refined extremal quasi-momentum of an edge dispersion."""

    p: np.ndarray
    value: float
    hessian: np.ndarray
    mass: float                 # 1/|det hessian|
    simplicity_margin: float    # spectral distance to the next band at p
    simple: bool
    morse: bool


@dataclass(frozen=True)
class GapEdge:
    """A gap edge with its extremal set and per-extremum geometry."""

    side: str                   # "upper" (lambda_+) or "lower" (lambda_-)
    band: int                   # 1-based dispersion index of the edge band
    value: float                # refined edge value
    extrema: tuple              # EdgeExtremum, ...
    V: PotentialSpec = None
    basis: PlaneWaveBasis = None
    degenerate: bool = False
    synthetic: object = None    # SyntheticDispersion for the degenerate backend
    manifold: dict = field(default_factory=dict)

    @property
    def n_extrema(self) -> int:
        return len(self.extrema)

    @property
    def all_simple_morse(self) -> bool:
        return all(e.simple and e.morse for e in self.extrema)

    def bloch(self, k: int, grid_points: int = 64):
        """Bloch function at the k-th extremum (1-based)."""
        if self.synthetic is not None:
            raise ValueError("synthetic edges carry plane-wave eigenkernels, "
                             "not Bloch functions")
        ex = self.extrema[k - 1]
        fs = fiber_spectrum(ex.p, self.V, self.basis, self.band)
        return bloch_function(fs, self.band, grid_points=grid_points)


def _wrap_torus(p: np.ndarray) -> np.ndarray:
    return (p + np.pi) % (2.0 * np.pi) - np.pi


def _torus_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = _wrap_torus(a - b)
    return float(np.linalg.norm(diff))


def _grid_local_minima(bs: BandStructure, column: np.ndarray) -> list:
    """Indices of grid points that are <= all periodic neighbors."""
    shape = bs.grid.counts
    arr = column.reshape(shape)
    mask = np.ones_like(arr, dtype=bool)
    for ax in range(len(shape)):
        mask &= arr <= np.roll(arr, 1, axis=ax)
        mask &= arr <= np.roll(arr, -1, axis=ax)
    return list(np.flatnonzero(mask.ravel()))


def _refine_newton(evaluator, p0: np.ndarray, grid_step: float,
                   refine_tol: float, max_iter: int = 60) -> np.ndarray:
    """Quadratic-model (FD Newton) iteration towards a local minimum."""
    p = np.array(p0, dtype=float)
    fd = 1e-4
    for _ in range(max_iter):
        d = len(p)
        g = np.zeros(d)
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = fd
            g[i] = (evaluator(p + ei) - evaluator(p - ei)) / (2.0 * fd)
        H = hessian_fd(evaluator, p, h=min(1e-3, grid_step / 4.0))
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g
        # trust region: never jump more than one coarse cell
        norm = np.linalg.norm(step)
        if norm > grid_step:
            step *= grid_step / norm
            norm = grid_step
        p = p + step
        if norm < refine_tol:
            break
    return _wrap_torus(p)


def refine_edge(bs: BandStructure, gap: SpectralGap, side: str,
                refine_tol: float = REFINE_TOL,
                simple_tol: float = SIMPLE_TOL,
                morse_tol: float = MORSE_TOL) -> GapEdge:
    """Locate, refine and classify the extremal set of one gap edge.

    Extrema at +-p0 off the symmetry points are kept as two distinct
    points (they carry conjugate Bloch data); the dedup radius is two
    coarse grid steps on the torus.
    """
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    if side == "lower" and gap.semi_infinite:
        raise ValueError("the semi-infinite gap has no finite lower edge")
    band = gap.band_below + 1 if side == "upper" else gap.band_below
    sign = 1.0 if side == "upper" else -1.0

    V, basis = bs.V, bs.basis
    # enough bands for the simplicity margin at the edge band
    n_need = band + 1

    def lam(p):
        return sign * float(
            fiber_spectrum(p, V, basis, n_need).eigenvalues[band - 1])

    column = sign * bs.bands[:, band - 1]
    pts = bs.grid.points()
    grid_step = 2.0 * np.pi / max(bs.grid.counts)

    refined = []
    for idx in _grid_local_minima(bs, column):
        p_star = _refine_newton(lam, pts[idx], grid_step, refine_tol)
        refined.append((p_star, lam(p_star)))

    edge_val = min(v for _, v in refined)
    # keep only candidates at the edge value, dedup on the torus
    keep = []
    for p_star, v in sorted(refined, key=lambda t: t[1]):
        if v - edge_val > 1e-8 * max(1.0, abs(edge_val)):
            continue
        if any(_torus_distance(p_star, q) < 2.0 * grid_step for q, _ in keep):
            continue
        keep.append((p_star, v))

    extrema = []
    for p_star, v in keep:
        fs = fiber_spectrum(p_star, V, basis, n_need)
        if side == "upper":
            margin = float(fs.eigenvalues[band] - fs.eigenvalues[band - 1])
        else:
            margin = float(fs.eigenvalues[band - 1] - fs.eigenvalues[band - 2]) \
                if band >= 2 else np.inf
        H = hessian_fd(lam, p_star, h=min(1e-3, grid_step / 4.0))
        det = float(np.linalg.det(H))
        eigH = np.linalg.eigvalsh(H)
        morse = bool(np.min(np.abs(eigH)) > morse_tol and np.all(eigH > 0))
        simple = bool(margin > simple_tol)
        extrema.append(EdgeExtremum(
            p=p_star,
            value=sign * v,
            hessian=sign * H,
            mass=1.0 / abs(det) if abs(det) > morse_tol else np.inf,
            simplicity_margin=margin,
            simple=simple,
            morse=morse,
        ))

    degenerate = any(not e.morse for e in extrema)
    return GapEdge(
        side=side,
        band=band,
        value=sign * edge_val,
        extrema=tuple(extrema),
        V=V,
        basis=basis,
        degenerate=degenerate,
    )
