"""Free resolvent kernels below the spectrum.

Fundamental solutions of (-Laplacian + gamma0^2) in d = 1, 2, 3, their
quasi-periodic lattice sums, and a Poisson-summation cross-check against
the plane-wave fiber resolvent.  The d = 2 Bessel factor K_0 is computed
from its integral representation by direct quadrature so that the module
stands on its own; scipy's implementation is used only in tests.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "fundamental_solution",
    "scaling_check",
    "lattice_green",
    "lattice_green_1d_closed",
    "plane_wave_green",
]


def _k0_quadrature(x: np.ndarray, n_nodes: int = 400) -> np.ndarray:
    """K_0(x) = int_0^inf exp(-x cosh u) du for x > 0.

    The integrand decays doubly exponentially in u; a truncated
    trapezoid rule converges geometrically.  Truncation at u_max keeps
    the tail below ~1e-14 of the value for the x range of interest.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("K_0 quadrature requires x > 0")
    # exp(-x cosh u) <= exp(-x e^u / 2): tail negligible once
    # x e^u / 2 > x + 40  =>  u_max = arccosh(1 + 40 / x_min)
    u_max = np.arccosh(1.0 + 40.0 / float(np.min(x)))
    u = np.linspace(0.0, u_max, n_nodes)
    du = u[1] - u[0]
    vals = np.exp(-x[..., None] * np.cosh(u))
    weights = np.full(n_nodes, du)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return vals @ weights


def fundamental_solution(x, gamma0: float, d: int) -> np.ndarray:
    """E_d(x; gamma0) with (-Laplacian + gamma0^2) E_d = delta.

    d = 1: exp(-gamma0 |x|) / (2 gamma0)
    d = 2: K_0(gamma0 |x|) / (2 pi)
    d = 3: exp(-gamma0 |x|) / (4 pi |x|)
    """
    if gamma0 <= 0:
        raise ValueError("gamma0 must be positive (lambda below the spectrum)")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] != d:
        raise ValueError(f"points must have {d} components")
    r = np.linalg.norm(x, axis=-1)
    if d == 1:
        out = np.exp(-gamma0 * r) / (2.0 * gamma0)
    elif d == 2:
        out = _k0_quadrature(gamma0 * r) / (2.0 * np.pi)
    elif d == 3:
        if np.any(r == 0):
            raise ValueError("E_3 is singular at x = 0")
        out = np.exp(-gamma0 * r) / (4.0 * np.pi * r)
    else:
        raise ValueError("fundamental solutions implemented for d <= 3 only; "
                         "d >= 4 kernels are out of scope")
    return out if out.shape != (1,) else out[0]


def scaling_check(x, gamma0: float, d: int) -> float:
    """Relative defect of E_d(x; g) = g^(d-2) E_d(g x; 1)."""
    lhs = np.atleast_1d(fundamental_solution(x, gamma0, d))
    rhs = gamma0 ** (d - 2) * np.atleast_1d(
        fundamental_solution(np.asarray(x) * gamma0, 1.0, d))
    return float(np.max(np.abs(lhs - rhs) / np.abs(rhs)))


def _shift_range(gamma0: float, tol: float = 1e-10, cap: int = 200) -> int:
    """Summation radius: terms decay like exp(-gamma0 R)."""
    R = int(np.ceil((np.log(1.0 / tol) + 5.0) / gamma0)) + 2
    if R > cap:
        raise ValueError(f"lattice sum needs radius {R} > cap {cap}; "
                         "gamma0 too small (lambda too close to the band)")
    return R


def lattice_green(x, p, gamma0: float, d: int, tol: float = 1e-10) -> complex:
    """Quasi-periodic Green kernel G_0(x; p) = sum_m E_d(x - m) e^{i p.m}.

    Valid for lambda = -gamma0^2 below the free spectrum; x must avoid
    lattice points when d = 3 (kernel singularity).
    """
    x = np.asarray(x, dtype=float).reshape(d)
    p = np.asarray(p, dtype=float).reshape(d)
    R = _shift_range(gamma0, tol)
    ax = np.arange(-R, R + 1)
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    shifts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = np.atleast_1d(fundamental_solution(x[None, :] - shifts, gamma0, d))
    phases = np.exp(1j * shifts @ p)
    return complex(np.sum(vals * phases))


def lattice_green_1d_closed(x: float, p: float, gamma0: float) -> complex:
    """d = 1 lattice sum in closed form via two geometric series.

    With u = x - m0 in [0, 1), m0 = floor(x):
      sum_{m <= m0}  e^{-g(u + j)} e^{ip(m0 - j)} and
      sum_{m > m0}   e^{-g(1 - u + j)} e^{ip(m0 + 1 + j)},  j >= 0.
    """
    m0 = float(np.floor(x))
    u = x - m0
    q = np.exp(-gamma0)
    left = np.exp(-gamma0 * u) * np.exp(1j * p * m0) / (1.0 - q * np.exp(-1j * p))
    right = np.exp(-gamma0 * (1.0 - u)) * np.exp(1j * p * (m0 + 1.0)) \
        / (1.0 - q * np.exp(1j * p))
    return complex((left + right) / (2.0 * gamma0))


def plane_wave_green(u, p, gamma0: float, d: int, cutoff: int | None = None,
                     tol: float = 1e-6) -> complex:
    """Fiber resolvent kernel of -Laplacian at lambda = -gamma0^2.

    By Poisson summation  sum_m e^{2 pi i m.u} / (|2 pi m + p|^2 + gamma0^2)
    equals e^{-i p.u} G_0(u; p).  The terms decay only like |m|^(-2), so
    the cutoff is chosen adaptively from the requested tolerance unless
    pinned explicitly.
    """
    u = np.asarray(u, dtype=float).reshape(d)
    p = np.asarray(p, dtype=float).reshape(d)
    if cutoff is None:
        # tail of sum 1/(2 pi m)^2 over |m| > N is ~ c_d / N^(2 - (d-1))
        if d == 1:
            cutoff = int(np.ceil(2.0 / (4.0 * np.pi**2 * tol))) + 10
        elif d == 2:
            cutoff = int(np.ceil(1.0 / (2.0 * np.pi * tol)))
        else:
            cutoff = int(np.ceil(1.0 / (np.pi * tol) ** 0.5)) + 10
        cutoff = min(cutoff, 2_000_000 if d == 1 else (4000 if d == 2 else 400))
    ax = np.arange(-cutoff, cutoff + 1)
    if d == 1:
        m = ax[:, None].astype(float)
    else:
        mesh = np.meshgrid(*([ax] * d), indexing="ij")
        m = np.stack([g.ravel() for g in mesh], axis=-1).astype(float)
    k = 2.0 * np.pi * m + p[None, :]
    denom = np.sum(k * k, axis=-1) + gamma0**2
    phases = np.exp(2j * np.pi * (m @ u))
    return complex(np.sum(phases / denom))
