"""Homogenized tensors, the dissipation gap, and equality diagnostics.

Assembles sigma*, S*, R*, M*(h,h) from correctors, computes the gap
D(h,h) = <zeta^T sigma^{-1} zeta> - <zeta>^T sigma*^{-1} <zeta>
with zeta = E(Sh) P0 + sigma P1(h)  (positive semidefinite), the curl
defect characterizing equality, and the reversed fourth-order gap of
zero-Hall media.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import GridMismatch, HallNotZero, SingularCofactor
from .solver import curl_defect_norm, hodge_grid
from .tensor3 import cofactor, hodge


def _mean(grid):
    return grid.mean(axis=(0, 1, 2))


def _mm(a, b):
    return np.einsum("...ik,...kj->...ij", a, b)


def _sym(A):
    return 0.5 * (A + A.T)


def _check(corr, need_p1=False, need_p2=False):
    if need_p1 and corr.p1 is None:
        raise GridMismatch("first-order corrector not solved")
    if need_p2 and corr.p2 is None:
        raise GridMismatch("second-order corrector not solved")


def effective_conductivity(corr, with_asym=False):
    """sigma* = <sigma P0>, symmetrized; optionally also the antisymmetric
    part's norm as a solver diagnostic."""
    raw = _mean(_mm(corr.field.sigma, corr.p0))
    asym = float(np.linalg.norm(raw - raw.T))
    return (_sym(raw), asym) if with_asym else _sym(raw)


def effective_s_matrix(corr):
    """S* = <Cof(P0)^T S>."""
    S = corr.field.s_or_zero()
    return _mean(_mm(np.swapaxes(cofactor(corr.p0), -1, -2), S))


def hall_grid(field):
    """Per-voxel Hall matrix R = -Cof(sigma)^{-1} S."""
    C = cofactor(field.sigma)
    det = np.linalg.det(C)
    if np.any(np.abs(det) < 1e-300):
        raise SingularCofactor("a voxel conductivity has singular cofactors")
    return -np.linalg.solve(C, field.s_or_zero())


def effective_hall(corr, sigma_star=None, s_star=None):
    """Effective Hall matrix, by the two equivalent routes.

    Returns (R*, discrepancy): R* = -Cof(sigma*)^{-1} S*, and the direct
    average Cof(sigma P0)^T R solved against Cof(sigma*); the discrepancy
    between the two is a solver health figure.
    """
    if sigma_star is None:
        sigma_star = effective_conductivity(corr)
    if s_star is None:
        s_star = effective_s_matrix(corr)
    C = cofactor(sigma_star)
    if abs(np.linalg.det(C)) < 1e-300:
        raise SingularCofactor("effective conductivity has singular cofactors")
    r_star = -np.linalg.solve(C, s_star)
    R = hall_grid(corr.field)
    direct = _mean(_mm(np.swapaxes(cofactor(_mm(corr.field.sigma, corr.p0)), -1, -2), R))
    r_direct = np.linalg.solve(C, direct)
    return r_star, float(np.linalg.norm(r_star - r_direct))


def _zeta(corr, h):
    S = corr.field.s_or_zero()
    Eh = hodge_grid(np.einsum("...ij,j->...i", S, np.asarray(h, dtype=float)))
    return _mm(Eh, corr.p0) + _mm(corr.field.sigma, corr.p1)


def dissipation_gap(corr, h=None):
    """Gap matrix D(h,h); PSD up to solver tolerance, zero exactly on the
    equality microstructures."""
    _check(corr, need_p1=True)
    h = corr.h if h is None else np.asarray(h, dtype=float)
    zeta = _zeta(corr, h)
    rho = np.linalg.inv(corr.field.sigma)
    bulk = _mean(_mm(np.swapaxes(zeta, -1, -2), _mm(rho, zeta)))
    zbar = _mean(zeta)  # converges to E(S* h)
    sigma_star = effective_conductivity(corr)
    return _sym(bulk - zbar.T @ np.linalg.solve(sigma_star, zbar))


def local_magnetoresistance(field, h):
    """Per-voxel M(h,h) = rho (E(Sh) rho E(Sh) - N(h,h)) rho."""
    rho = np.linalg.inv(field.sigma)
    S = field.s_or_zero()
    Eh = hodge_grid(np.einsum("...ij,j->...i", S, np.asarray(h, dtype=float)))
    inner = _mm(Eh, _mm(rho, Eh))
    N = field.quad_at(h)
    if N is not None:
        inner = inner - N
    return _mm(rho, _mm(inner, rho))


def effective_magnetoresistance(corr, h=None):
    """M*(h,h) = sigma*^{-1} [ <(sigma P0)^T M(h,h) (sigma P0)> + D(h,h) ] sigma*^{-1}."""
    _check(corr, need_p1=True)
    h = corr.h if h is None else np.asarray(h, dtype=float)
    field = corr.field
    sp0 = _mm(field.sigma, corr.p0)
    M = local_magnetoresistance(field, h)
    bulk = _mean(_mm(np.swapaxes(sp0, -1, -2), _mm(M, sp0)))
    gap = dissipation_gap(corr, h)
    sigma_star = effective_conductivity(corr)
    inv = np.linalg.inv(sigma_star)
    return _sym(inv @ (bulk + gap) @ inv)


def curl_defect(corr, h):
    """Scale-free norm of Curl(E(Rh) sigma P0); vanishes iff the equality
    condition of the main inequality holds."""
    R = hall_grid(corr.field)
    Eh = hodge_grid(np.einsum("...ij,j->...i", R, np.asarray(h, dtype=float)))
    w = _mm(Eh, _mm(corr.field.sigma, corr.p0))
    return curl_defect_norm(w)


def fourth_order_gap(corr, h=None):
    """Reversed gap of zero-Hall media:
    D4(h) = sigma*2(h) sigma*^{-1} sigma*2(h) - <zeta2^T sigma^{-1} zeta2>
    with zeta2 = sigma P2 + sigma2(h) P0 and sigma*2(h) = <zeta2>.
    Negative semidefinite up to solver tolerance."""
    _check(corr, need_p2=True)
    field = corr.field
    if field.has_hall():
        raise HallNotZero("fourth-order gap requires a zero-Hall field")
    h = corr.h if h is None else np.asarray(h, dtype=float)
    sigma2 = field.quad_at(h)
    if sigma2 is None:
        sigma2 = field.order_at(2, h)
    if sigma2 is None:
        sigma2 = np.zeros_like(field.sigma)
    zeta2 = _mm(field.sigma, corr.p2) + _mm(sigma2, corr.p0)
    rho = np.linalg.inv(field.sigma)
    bulk = _mean(_mm(np.swapaxes(zeta2, -1, -2), _mm(rho, zeta2)))
    s2_star = _sym(_mean(zeta2))
    sigma_star = effective_conductivity(corr)
    return _sym(s2_star @ np.linalg.solve(sigma_star, s2_star) - bulk)


def psd_tolerance(gap, sigma_star, h, eps_res):
    """Eigenvalue tolerance tying the PSD check to solver accuracy."""
    h = np.asarray(h, dtype=float)
    return max(
        1e-6 * float(np.linalg.norm(gap)),
        10.0 * eps_res * float(np.linalg.norm(sigma_star, 2)) * float(h @ h),
    )


@dataclass
class EffectiveReport:
    resolution: int
    h: list
    sigma_star: list
    sigma_star_asym: float
    s_star: list
    r_star: list
    r_star_discrepancy: float
    m_star: list | None
    gap: list | None
    gap_min_eig: float | None
    curl_defect: float | None
    fourth_order_gap: list | None
    residuals: list

    def to_json(self):
        return json.dumps(self.__dict__, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text):
        return EffectiveReport(**json.loads(text))


def assemble_report(corr, h, outputs=("sigma", "hall", "magneto", "gap", "curl")):
    """Build an EffectiveReport from a corrector set solved at h."""
    sigma_star, asym = effective_conductivity(corr, with_asym=True)
    s_star = effective_s_matrix(corr)
    r_star, disc = effective_hall(corr, sigma_star, s_star)
    m_star = gap = None
    gap_min = defect = None
    d4 = None
    if "gap" in outputs and corr.p1 is not None:
        g = dissipation_gap(corr, h)
        gap = g.tolist()
        gap_min = float(np.linalg.eigvalsh(g).min())
    if "magneto" in outputs and corr.p1 is not None:
        m_star = effective_magnetoresistance(corr, h).tolist()
    if "curl" in outputs:
        defect = curl_defect(corr, h)
    if "fourth" in outputs and corr.p2 is not None:
        d4 = fourth_order_gap(corr, h).tolist()
    return EffectiveReport(
        resolution=corr.field.resolution,
        h=list(map(float, np.asarray(h, dtype=float))),
        sigma_star=sigma_star.tolist(),
        sigma_star_asym=asym,
        s_star=s_star.tolist(),
        r_star=r_star.tolist(),
        r_star_discrepancy=disc,
        m_star=m_star,
        gap=gap,
        gap_min_eig=gap_min,
        curl_defect=defect,
        fourth_order_gap=d4,
        residuals=[corr.residual0, corr.residual1, corr.residual2],
    )
