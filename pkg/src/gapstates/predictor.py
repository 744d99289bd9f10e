"""Closed-form weak-coupling laws for gap eigenvalues.

Leading-order laws near an upper edge lambda_+ with coupling gamma < 0
(the lower edge mirrors with gamma > 0):

    d=1:  sqrt(lambda_+ - rho_1) = |gamma| sqrt(m_1) ||v_1||^2 / sqrt(2)
    d=2:  (ln(1/(lambda_+ - rho_k)))^{-1} = |gamma| nu_k / (2 pi)
    Morse-Bott edges:  Psi(lambda_+ - rho_n) = |gamma| nu_n,
        with Psi the square-root (codim 1) or log (codim 2) scale
        function, times the stored backend calibration factor.

Only leading order is evaluated; O(gamma) remainders are measured by the
oracle-comparison machinery, not modeled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bands import GapEdge
from .edge_model import DegenerateEdgeModel, NonDegenerateEdgeModel
from .lattice import PerturbationSpec, perturbation_integrals

__all__ = [
    "Prediction",
    "asymptotic_multiplicity",
    "predict_d1",
    "predict_d2",
    "predict_degenerate",
    "lieb_thirring_sum",
    "limiting_eigenfunction",
    "threshold_verdict",
]


@dataclass(frozen=True)
class Prediction:
    side: str
    gamma: float
    rho: np.ndarray          # predicted gap eigenvalues, deepest first
    law: str                 # d1_sqrt | d2_log | degenerate_psi | threshold_none
    multiplicity: object     # int or math.inf
    validity_radius: float   # |gamma| at which the deepest level spans half the gap


def _check_pairing(side: str, gamma: float) -> None:
    """W >= 0 attaches gamma<0 predictions to lambda_+ and gamma>0 to lambda_-."""
    if gamma == 0:
        raise ValueError("gamma must be nonzero")
    if side == "upper" and gamma > 0:
        raise ValueError("gamma > 0 with W >= 0 produces no levels at lambda_+; "
                         "use the lower edge")
    if side == "lower" and gamma < 0:
        raise ValueError("gamma < 0 with W >= 0 produces no levels at lambda_-; "
                         "use the upper edge")


def asymptotic_multiplicity(edge: GapEdge):
    """Number of virtual-eigenvalue branches at the edge (0, n, or inf)."""
    if edge.synthetic is not None:
        codim = edge.manifold["codim"]
        if edge.manifold["dim"] == 0:
            # point minimum: same table as the non-degenerate periodic case
            d = edge.synthetic.d
            return {1: 1, 2: 1}.get(d, 0)
        return math.inf if codim in (1, 2) else 0
    if edge.degenerate:
        raise ValueError("degenerate periodic edges are out of catalog reach; "
                         "classify through the synthetic backend")
    if not edge.all_simple_morse:
        raise ValueError("edge not classified: non-simple extremum")
    d = len(edge.extrema[0].p)
    if d == 1:
        return 1
    if d == 2:
        return edge.n_extrema
    return 0


def _depth_to_rho(edge_value: float, side: str, depths: np.ndarray) -> np.ndarray:
    return edge_value - depths if side == "upper" else edge_value + depths


def predict_d1(model: NonDegenerateEdgeModel, gamma: float,
               gap_width: float = np.inf) -> Prediction:
    """Unique d=1 branch: depth = gamma^2 m ||v||^4 / 2."""
    edge = model.edge
    _check_pairing(edge.side, gamma)
    if model.n != 1:
        raise ValueError("d=1 edges carry a single extremum")
    m = model.masses[0]
    nsq = model.vs[0].norm_sq
    slope = math.sqrt(m) * nsq / math.sqrt(2.0)
    depth = (abs(gamma) * slope) ** 2
    validity = math.sqrt(gap_width / 2.0) / slope if np.isfinite(gap_width) else np.inf
    return Prediction(side=edge.side, gamma=gamma,
                      rho=_depth_to_rho(edge.value, edge.side, np.array([depth])),
                      law="d1_sqrt", multiplicity=1, validity_radius=validity)


def predict_d2(model: NonDegenerateEdgeModel, gamma: float,
               gap_width: float = np.inf) -> Prediction:
    """n extrema branches in d=2: depth_k = exp(-2 pi / (|gamma| nu_k))."""
    edge = model.edge
    _check_pairing(edge.side, gamma)
    depths = np.exp(-2.0 * np.pi / (abs(gamma) * model.nu))
    if np.isfinite(gap_width):
        validity = 2.0 * np.pi / (model.nu[0] * math.log(2.0 / gap_width)) \
            if gap_width < 2.0 else np.inf
    else:
        validity = np.inf
    return Prediction(side=edge.side, gamma=gamma,
                      rho=_depth_to_rho(edge.value, edge.side, depths),
                      law="d2_log", multiplicity=len(model.nu),
                      validity_radius=validity)


def psi_scale(s, d: int, codim: int, calibration: float = 1.0):
    """The Psi scale function of the Morse-Bott law (times calibration)."""
    s = np.asarray(s, dtype=float)
    if codim == 1:
        out = (2.0 * np.pi) ** d / (math.sqrt(2.0) * np.pi) * np.sqrt(s)
    elif codim == 2:
        out = (2.0 * np.pi) ** (d - 1) / np.log(1.0 / s)
    else:
        raise ValueError("Psi is defined for codimension 1 and 2")
    return calibration * out


def _psi_invert(target, d: int, codim: int, calibration: float):
    if codim == 1:
        return (target * math.sqrt(2.0) * np.pi
                / (calibration * (2.0 * np.pi) ** d)) ** 2
    return np.exp(-calibration * (2.0 * np.pi) ** (d - 1) / target)


def predict_degenerate(model: DegenerateEdgeModel, gamma: float,
                       n: int | None = None,
                       gap_width: float = np.inf) -> Prediction:
    """Morse-Bott law: invert Psi(depth_n) = |gamma| nu_n."""
    edge = model.edge
    codim = edge.manifold["codim"]
    d = model.W.d
    if codim >= 3:
        return Prediction(side=edge.side, gamma=gamma, rho=np.array([]),
                          law="threshold_none", multiplicity=0,
                          validity_radius=np.inf)
    _check_pairing(edge.side, gamma)
    nu = model.nu[:n] if n is not None else model.nu
    nu = nu[nu > 0]
    depths = _psi_invert(abs(gamma) * nu, d, codim, model.psi_calibration)
    if np.isfinite(gap_width):
        validity = psi_scale(gap_width / 2.0, d, codim,
                             model.psi_calibration) / nu[0]
    else:
        validity = np.inf
    return Prediction(side=edge.side, gamma=gamma,
                      rho=_depth_to_rho(edge.value, edge.side, depths),
                      law="degenerate_psi", multiplicity=math.inf,
                      validity_radius=float(validity))


def lieb_thirring_sum(model, gamma: float) -> float:
    """Leading-order Lieb-Thirring-type sum over the branch family.

    Non-degenerate d=2: sum_k (ln(1/depth_k))^{-1} = |gamma|/(2 pi) *
    sum_k ||v_k||^2 sqrt(m_k).  Degenerate: |gamma| * trace(G_W), the
    kernel-diagonal integral.
    """
    if isinstance(model, DegenerateEdgeModel):
        return abs(gamma) * model.trace_diagonal
    total = sum(math.sqrt(m) * v.norm_sq
                for m, v in zip(model.masses, model.vs))
    return abs(gamma) / (2.0 * np.pi) * total


def limiting_eigenfunction(model: NonDegenerateEdgeModel, k: int):
    """Callable g_k(x); for a single extremum this is v_1/||v_1||."""
    if not 1 <= k <= model.n:
        raise ValueError(f"no eigenfunction {k} (model has {model.n})")
    return lambda x: model.g_values(k, x)


def threshold_verdict(edge: GapEdge, W: PerturbationSpec) -> dict:
    """Existence table for virtual eigenvalues at small coupling.

    For indefinite W near the upper edge with gamma < 0 the bound is
    governed by W_+ alone, so the verdict uses the positive part's decay
    flags and the non-degenerate count as an upper bound.
    """
    integrals = perturbation_integrals(W)
    if edge.synthetic is not None:
        codim = edge.manifold["codim"]
        dim = edge.manifold["dim"]
        if dim == 0:
            has = edge.synthetic.d <= 2
        else:
            has = codim in (1, 2)
    else:
        M = asymptotic_multiplicity(edge)
        has = M not in (0,)
    verdict = {
        "has_virtuals": bool(has),
        "no_virtuals_for_small_gamma": not has,
        "definite": W.definite,
        "decay_conditions": {
            "second_moment": integrals["decay_second_moment"],
            "log_squared": integrals["decay_log_squared"],
        },
    }
    if not W.definite:
        # multiplicity near lambda_+ for gamma<0 bounded by the W_+ count
        verdict["multiplicity_bound_source"] = "positive_part"
    return verdict
