"""Edge data feeding the weak-coupling laws.

Non-degenerate edges: weighted Bloch vectors v_k = sqrt(W) b_k, the Gram
matrix ((m_k m_l)^(1/4) (v_l, v_k)) and its eigenvalues nu_k.

Degenerate (Morse-Bott) edges, synthetic backend only: the integral
operator with kernel

    G_W(x, s) = integral over F of Q_W(x, s, p) sqrt(m(p)) dF(p),

with plane-wave eigenkernels Q(x, s, p) = (2 pi)^(-d) exp(i p.(x-s)).
The kernel has rank n_samples after quadrature over the manifold, so its
spectrum comes from a small dense problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bands import GapEdge
from .lattice import PerturbationSpec, evaluate_perturbation

__all__ = [
    "W_FLOOR",
    "WQuadrature",
    "WeightedBloch",
    "NonDegenerateEdgeModel",
    "DegenerateEdgeModel",
    "w_quadrature",
    "weighted_bloch",
    "gram_and_nu",
    "degenerate_gw",
]

W_FLOOR = 1e-14

_DEFAULT_NODES_PER_UNIT = {1: 128, 2: 64, 3: 32}


@dataclass(frozen=True)
class WQuadrature:
    """Quadrature rule for integrals of the form int W(x) f(x) dx.

    Per-bump trapezoid subgrids (box edges land on nodes with half
    weights; gaussian tails are cut where they fall below a mass floor),
    with the value of W folded into the weights.
    """

    W: PerturbationSpec
    points: np.ndarray   # (N, d)
    weights: np.ndarray  # (N,), include W(x) and the volume element

    def integrate(self, f_values: np.ndarray) -> complex:
        return np.sum(self.weights * f_values)


def _axis_nodes(lo: float, hi: float, spacing: float):
    n = max(2, int(np.ceil((hi - lo) / spacing)) + 1)
    x = np.linspace(lo, hi, n)
    w = np.full(n, x[1] - x[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    return x, w


def w_quadrature(W: PerturbationSpec, nodes_per_unit: int | None = None,
                 mass_floor: float = 1e-16) -> WQuadrature:
    if nodes_per_unit is None:
        nodes_per_unit = _DEFAULT_NODES_PER_UNIT[W.d]
    spacing = 1.0 / nodes_per_unit
    pts_all, wts_all = [], []
    for b in W.bumps:
        r = b.radius_for_mass(mass_floor)
        axes, axws = [], []
        for c in b.center:
            x, w = _axis_nodes(c - r, c + r, spacing)
            axes.append(x)
            axws.append(w)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vol = np.ones(len(pts))
        wmesh = np.meshgrid(*axws, indexing="ij")
        for wm in wmesh:
            vol = vol * wm.ravel()
        pts_all.append(pts)
        wts_all.append(vol * b(pts))
    return WQuadrature(
        W=W,
        points=np.concatenate(pts_all),
        weights=np.concatenate(wts_all),
    )


@dataclass(frozen=True)
class WeightedBloch:
    """v_k = sqrt(W) b_k, represented through the W-quadrature rule."""

    quad: WQuadrature
    bloch: object                # BlochFunction, or None for b == 1
    bloch_values: np.ndarray     # b at quadrature nodes
    norm_sq: float
    extremum_index: int

    def evaluate_v(self, x: np.ndarray) -> np.ndarray:
        """sqrt(W(x)) * b(x) at arbitrary points (W >= 0 on this path)."""
        w = np.sqrt(np.maximum(evaluate_perturbation(self.quad.W, x), 0.0))
        b = np.ones_like(w, dtype=complex) if self.bloch is None else self.bloch(x)
        return w * b


def weighted_bloch(edge: GapEdge, k: int, W: PerturbationSpec,
                   quad: WQuadrature | None = None,
                   grid_points: int = 64) -> WeightedBloch:
    """Weighted Bloch function at the k-th extremum of a non-degenerate edge."""
    if not W.definite:
        raise ValueError("indefinite W: use the Birman-Schwinger splitting path")
    if quad is None:
        quad = w_quadrature(W)
    b = edge.bloch(k, grid_points=grid_points)
    bv = b(quad.points)
    norm_sq = float(np.real(quad.integrate(np.abs(bv) ** 2)))
    return WeightedBloch(quad=quad, bloch=b, bloch_values=bv,
                         norm_sq=norm_sq, extremum_index=k)


def check_box_doubling(edge: GapEdge, k: int, W: PerturbationSpec) -> float:
    """Relative change of ||v_k||^2 when the gaussian tail cut is pushed out."""
    tight = weighted_bloch(edge, k, W, quad=w_quadrature(W, mass_floor=1e-16))
    wide = weighted_bloch(edge, k, W, quad=w_quadrature(W, mass_floor=1e-24))
    return abs(wide.norm_sq - tight.norm_sq) / max(tight.norm_sq, 1e-300)


@dataclass(frozen=True)
class NonDegenerateEdgeModel:
    """Gram matrix, nu_k spectrum and limiting eigenfunction data."""

    edge: GapEdge
    vs: tuple                  # WeightedBloch per extremum
    masses: np.ndarray
    gram: np.ndarray
    nu: np.ndarray             # descending, one per extremum
    g_coeff: np.ndarray        # column k: expansion of g_k over the v_l

    @property
    def n(self) -> int:
        return len(self.vs)

    def g_values(self, k: int, x: np.ndarray) -> np.ndarray:
        """Limiting eigenfunction g_k at arbitrary points, unit L2 norm."""
        return sum(self.g_coeff[l, k - 1] * v.evaluate_v(x)
                   for l, v in enumerate(self.vs))

    def g_bloch_values(self, k: int, x: np.ndarray) -> np.ndarray:
        """Bloch part of g_k (the sqrt(W) weight factored out).

        Useful when the caller carries its own discretization of sqrt(W),
        e.g. cell-averaged weights on a finite-difference grid.
        """
        out = np.zeros(len(x), dtype=complex)
        for l, v in enumerate(self.vs):
            b = (np.ones(len(x), dtype=complex) if v.bloch is None
                 else v.bloch(x))
            out += self.g_coeff[l, k - 1] * b
        return out

    @property
    def gram_condition_number(self) -> float:
        ev = np.linalg.eigvalsh(self.gram)
        return float(ev[-1] / ev[0])


def gram_and_nu(edge: GapEdge, vs: list) -> NonDegenerateEdgeModel:
    """Assemble the Gram matrix and diagonalize the finite-rank operator."""
    if not edge.all_simple_morse:
        raise ValueError("edge extrema must all be simple and Morse for this path")
    n = len(vs)
    masses = np.array([e.mass for e in edge.extrema[:n]])
    quad = vs[0].quad
    inner = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            # (v_l, v_k) = int W b_l conj(b_k)
            inner[k, l] = quad.integrate(vs[l].bloch_values
                                         * np.conj(vs[k].bloch_values))
    scale = masses ** 0.25
    A = scale[:, None] * scale[None, :] * inner
    A = 0.5 * (A + A.conj().T)
    nu, y = np.linalg.eigh(A)
    if nu[0] <= 0:
        raise ArithmeticError(
            "weighted Bloch functions numerically dependent - refine grid")
    order = np.argsort(nu)[::-1]
    nu = nu[order]
    y = y[:, order]
    # g_k proportional to sum_l m_l^(1/4) y_lk v_l; normalize in L2
    g_coeff = (masses[:, None] ** 0.25) * y
    for k in range(n):
        gv = sum(g_coeff[l, k] * vs[l].bloch_values for l in range(n))
        # ||g||^2 = int W |sum_l c_l b_l|^2
        nrm = np.sqrt(float(np.real(quad.integrate(np.abs(gv) ** 2))))
        g_coeff[:, k] /= nrm
    return NonDegenerateEdgeModel(edge=edge, vs=tuple(vs), masses=masses,
                                  gram=A, nu=nu, g_coeff=g_coeff)


@dataclass(frozen=True)
class DegenerateEdgeModel:
    """Quadrature model of the Morse-Bott edge operator G_W."""

    edge: GapEdge              # synthetic, with manifold samples
    W: PerturbationSpec
    quad: WQuadrature
    manifold_points: np.ndarray   # (n_samples, d)
    manifold_weights: np.ndarray  # volume-form weights
    masses: np.ndarray            # normal-mass m(p) per sample
    nu: np.ndarray                # descending positive eigenvalues
    trace_diagonal: float
    psi_calibration: float        # whole-space vs torus constant, see module doc

    @property
    def trace_eigensum(self) -> float:
        return float(np.sum(self.nu))


def degenerate_gw(edge: GapEdge, W: PerturbationSpec,
                  n_samples: int | None = None,
                  nodes_per_unit: int | None = None) -> DegenerateEdgeModel:
    """Discretize G_W for a synthetic degenerate edge and diagonalize it.

    The quadrature kernel is a rank-n_samples operator
    sum_j c_j e_j e_j^* with e_j(x) = sqrt(W(x)) exp(i p_j.x) and
    c_j = w_j sqrt(m_j) (2 pi)^(-d), so its positive spectrum equals that
    of the small matrix C^(1/2) B C^(1/2), B_jk = int W exp(i(p_k-p_j).x).
    """
    sd = edge.synthetic
    if sd is None:
        raise ValueError("degenerate path requires a synthetic edge")
    if not W.definite:
        raise ValueError("W must be definite on the degenerate path")
    if sd.codim not in (1, 2):
        raise ValueError(f"codimension {sd.codim} not in {{1, 2}}")
    if n_samples is None:
        n_samples = len(edge.manifold["points"])
        pts = edge.manifold["points"]
        wts = edge.manifold["weights"]
        masses = edge.manifold["masses"]
    else:
        pts, wts, masses = sd.sample_manifold(n_samples)
    quad = w_quadrature(W, nodes_per_unit=nodes_per_unit)
    d = W.d
    c = wts * np.sqrt(masses) / (2.0 * np.pi) ** d
    # B_jk = sum_q weights_q exp(i (p_k - p_j) . x_q)  ~  int W e^{i(pk-pj)x}
    phase = np.exp(1j * (quad.points @ pts.T))        # (N, n_samples)
    B = (phase.conj() * quad.weights[:, None]).T @ phase
    B = 0.5 * (B + B.conj().T)
    sqc = np.sqrt(c)
    S = sqc[:, None] * B * sqc[None, :]
    nu = np.linalg.eigvalsh(S)[::-1]
    nu = np.clip(nu.real, 0.0, None)
    trace_diag = float(np.sum(quad.weights).real * np.sum(c))
    return DegenerateEdgeModel(
        edge=edge, W=W, quad=quad,
        manifold_points=pts, manifold_weights=wts, masses=masses,
        nu=nu, trace_diagonal=trace_diag,
        psi_calibration=(2.0 * np.pi) ** (-d),
    )
