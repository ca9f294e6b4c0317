"""Spectral cell solver for the periodic corrector cascade.

Trigonometric collocation with the Green projection of a constant reference
medium, solved matrix-free with conjugate gradients (the projected system is
symmetric positive definite on zero-mean gradient fields).  All correctors
are grids of 3x3 matrices whose columns are gradients with prescribed means.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from dataclasses import field as dc_field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .exceptions import GridMismatch, HallNotZero, NoConvergence
from .microstructure import GridField
from .tensor3 import EPS3

_I3 = np.eye(3)


@dataclass
class SolverConfig:
    reference: float | None = None   # constant reference medium; default (alpha+beta)/2
    tol: float = 1e-8                # relative divergence residual
    max_iter: int = 10000
    scheme: str = "conjugate_gradient"

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.scheme not in ("conjugate_gradient", "basic_fixed_point"):
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def to_dict(self):
        return {
            "reference": self.reference,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "scheme": self.scheme,
        }


def _spec_weights(shape):
    """Parseval weights for the rfft half-spectrum along the last axis."""
    n3 = shape[2]
    m = n3 // 2 + 1
    w = np.full(m, 2.0)
    w[0] = 1.0
    if n3 % 2 == 0:
        w[-1] = 1.0
    return w[None, None, :]


def _frequencies(shape):
    """2*pi*integer frequency grids (xi1, xi2, xi3) for an (n1,n2,n3) rfft grid.

    The unpaired Nyquist frequency of even axes is zeroed so the spectral
    derivative of a real field stays exactly skew-symmetric (keeping the
    projected system symmetric positive definite)."""
    n1, n2, n3 = shape
    k1 = 2 * np.pi * np.fft.fftfreq(n1, d=1.0 / n1)
    k2 = 2 * np.pi * np.fft.fftfreq(n2, d=1.0 / n2)
    k3 = 2 * np.pi * np.fft.rfftfreq(n3, d=1.0 / n3)
    if n1 % 2 == 0 and n1 > 1:
        k1[n1 // 2] = 0.0
    if n2 % 2 == 0 and n2 > 1:
        k2[n2 // 2] = 0.0
    if n3 % 2 == 0 and n3 > 1:
        k3[-1] = 0.0
    return (
        k1[:, None, None],
        k2[None, :, None],
        k3[None, None, :],
    )


class _Green:
    """Green projection of a constant reference medium c: in Fourier space
    (Gamma tau)^_{ij} = xi_i xi_j tau^_{kj} xi_k / (c |xi|^2), zero mean."""

    def __init__(self, shape, c):
        self.shape = shape
        self.c = float(c)
        x1, x2, x3 = _frequencies(shape)
        self.xi = (x1, x2, x3)
        n2 = x1**2 + x2**2 + x3**2
        n2[n2 == 0] = 1.0  # origin and zeroed Nyquist modes project to nothing
        self.inv_n2 = 1.0 / n2

    def apply(self, tau):
        """tau: (n1,n2,n3,3,3) real; returns the projected field."""
        th = np.fft.rfftn(tau, axes=(0, 1, 2))
        # s_j = xi_i tau^_{ij}
        s = sum(self.xi[i][..., None] * th[..., i, :] for i in range(3))
        s *= self.inv_n2[..., None] / self.c
        out = np.empty_like(th)
        for i in range(3):
            out[..., i, :] = self.xi[i][..., None] * s
        out[0, 0, 0] = 0.0
        return np.fft.irfftn(out, s=self.shape, axes=(0, 1, 2))

    def divergence_residual(self, flux):
        """Relative spectral divergence norm of a flux grid:
        ||xi . q^|| / (2 pi ||q^||), fluctuating part only."""
        qh = np.fft.rfftn(flux, axes=(0, 1, 2))
        w = _spec_weights(self.shape)
        div = sum(self.xi[i][..., None] * qh[..., i, :] for i in range(3))
        num = np.sqrt(np.sum(w[..., None] * np.abs(div) ** 2))
        den = 2 * np.pi * np.sqrt(np.sum(w[..., None, None] * np.abs(qh) ** 2))
        return float(num / den) if den > 0 else 0.0

def curl_defect_norm(w):
    """Scale-free curl defect ||Curl w|| / (2 pi ||w||) of a matrix grid,
    the curl acting on each column."""
    shape = w.shape[:3]
    x = _frequencies(shape)
    pw = _spec_weights(shape)
    wh = np.fft.rfftn(w, axes=(0, 1, 2))
    total = 0.0
    # (curl v)_i = eps_{ijk} d_j v_k for each column v
    for i in range(3):
        acc = np.zeros(wh.shape[:3] + (3,), dtype=complex)
        for j in range(3):
            for k in range(3):
                e = EPS3[i, j, k]
                if e:
                    acc += e * (1j * x[j][..., None]) * wh[..., k, :]
        total += float(np.sum(pw[..., None] * np.abs(acc) ** 2))
    den2 = float(np.sum(pw[..., None, None] * np.abs(wh) ** 2))
    if den2 == 0:
        return 0.0
    return float(np.sqrt(total / den2) / (2 * np.pi))


def collapse(field):
    """Drop axes along which all material data are constant (length-1 axes).

    Periodicity makes the reduced problem equivalent; correctors expand back
    by broadcasting.
    """
    arrays = [field.sigma]
    if field.s is not None:
        arrays.append(field.s)
    arrays += list((field.quad or {}).values()) + list(field.higher.values())
    keep = []
    for ax in range(3):
        const = all(
            a.shape[ax] == 1 or np.all(a == a.take([0], axis=ax)) for a in arrays
        )
        keep.append(not const)

    def cut(a):
        for ax in range(3):
            if not keep[ax] and a.shape[ax] > 1:
                a = a.take([0], axis=ax)
        return np.ascontiguousarray(a)

    return GridField(
        resolution=field.resolution,
        sigma=cut(field.sigma),
        s=None if field.s is None else cut(field.s),
        quad=None if not field.quad else {k: cut(v) for k, v in field.quad.items()},
        direction=field.direction,
        higher={k: cut(v) for k, v in field.higher.items()},
    )


def _reference_constant(field, cfg):
    if cfg.reference is not None:
        return float(cfg.reference)
    lo, hi = field.eig_band()
    return 0.5 * (lo + hi)


def _solve_system(sigma, source, means, cfg, c):
    """Solve div(sigma (means + w) + source) = 0 for a zero-mean gradient
    matrix field w; returns means + w and the final divergence residual.

    `means` is a constant 3x3 matrix (the prescribed column means),
    `source` an optional grid added to the flux.
    """
    shape = sigma.shape[:3]
    green = _Green(shape, c)
    nvox = int(np.prod(shape))

    def flux(P):
        q = np.einsum("...ik,...kj->...ij", sigma, P)
        if source is not None:
            q = q + source
        return q

    M = np.broadcast_to(means, shape + (3, 3))

    def matvec(x):
        w = x.reshape(shape + (3, 3))
        return green.apply(np.einsum("...ik,...kj->...ij", sigma, w)).ravel()

    b = -green.apply(flux(M)).ravel()

    op = LinearOperator((b.size, b.size), matvec=matvec, dtype=float)
    x = np.zeros_like(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        P = np.ascontiguousarray(M, dtype=float).copy()
        return P, green.divergence_residual(flux(P))

    iters_left = cfg.max_iter
    rtol = cfg.tol
    res = np.inf
    if cfg.scheme == "basic_fixed_point":
        for _ in range(cfg.max_iter):
            x = x - (matvec(x) - b)
            P = M + x.reshape(shape + (3, 3))
            res = green.divergence_residual(flux(P))
            if res <= cfg.tol:
                return np.ascontiguousarray(P), res
        raise NoConvergence(cfg.max_iter, res, cfg.tol)

    last = None
    while iters_left > 0:
        x, info = cg(op, b, x0=x, rtol=rtol * 1e-2, atol=0.0, maxiter=iters_left)
        P = M + x.reshape(shape + (3, 3))
        res = green.divergence_residual(flux(P))
        if res <= cfg.tol:
            return np.ascontiguousarray(P), res
        if last is not None and res >= last * 0.99:
            break
        last = res
        iters_left -= max(1, cfg.max_iter // 4)
        rtol *= 1e-2
    raise NoConvergence(cfg.max_iter, res, cfg.tol)


def residual(field, P, source=None):
    """Relative divergence residual of the flux sigma P (+ source)."""
    sigma = field.sigma
    if P.shape != sigma.shape:
        raise GridMismatch("corrector grid does not match the field grid")
    q = np.einsum("...ik,...kj->...ij", sigma, P)
    if source is not None:
        q = q + source
    return _Green(sigma.shape[:3], 1.0).divergence_residual(q)


@dataclass
class CorrectorSet:
    """Correctors on the (possibly collapsed) grid of `field`."""

    field: GridField
    p0: np.ndarray
    residual0: float
    h: np.ndarray | None = None
    p1: np.ndarray | None = None
    residual1: float | None = None
    p2: np.ndarray | None = None
    residual2: float | None = None
    meta: dict = dc_field(default_factory=dict)

    def save(self, path):
        entries = [("p0", self.p0)]
        if self.p1 is not None:
            entries.append(("p1", self.p1))
        if self.p2 is not None:
            entries.append(("p2", self.p2))
        header = {
            "format": "correctorset-v1",
            "h": None if self.h is None else list(map(float, self.h)),
            "residuals": [self.residual0, self.residual1, self.residual2],
            "fields": [{"name": n, "shape": list(a.shape)} for n, a in entries],
            "field_hash": self.field.content_hash(),
        }
        hb = json.dumps(header, sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(len(hb).to_bytes(8, "little"))
            fh.write(hb)
            for _, a in entries:
                fh.write(np.ascontiguousarray(a).tobytes())

    @staticmethod
    def load(path, field):
        with open(path, "rb") as fh:
            data = fh.read()
        hlen = int.from_bytes(data[:8], "little")
        header = json.loads(data[8 : 8 + hlen].decode())
        if header.get("field_hash") != field.content_hash():
            raise GridMismatch("cache was built for a different field")
        off = 8 + hlen
        arrays = {}
        for f in header["fields"]:
            shape = tuple(f["shape"])
            count = int(np.prod(shape))
            arrays[f["name"]] = np.frombuffer(data, dtype=float, count=count, offset=off).reshape(shape).copy()
            off += count * 8
        r0, r1, r2 = header["residuals"]
        return CorrectorSet(
            field=field,
            p0=arrays["p0"],
            residual0=r0,
            h=None if header["h"] is None else np.asarray(header["h"]),
            p1=arrays.get("p1"),
            residual1=r1,
            p2=arrays.get("p2"),
            residual2=r2,
        )

    def cache_key(self, cfg):
        payload = json.dumps(
            {
                "field": self.field.content_hash(),
                "cfg": cfg.to_dict(),
                "h": None if self.h is None else list(map(float, self.h)),
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()


def solve_p0(field, cfg=None, do_collapse=True):
    """Zeroth-order corrector P0 with <P0> = I and div(sigma P0) = 0."""
    cfg = cfg or SolverConfig()
    field.validate()
    work = collapse(field) if do_collapse else field
    c = _reference_constant(work, cfg)
    p0, res = _solve_system(work.sigma, None, _I3, cfg, c)
    return CorrectorSet(field=work, p0=p0, residual0=res)


def hodge_grid(v):
    """hodge applied voxel-wise to a (...,3) vector grid."""
    return -np.einsum("ijk,...k->...ij", EPS3, v)


def solve_p1(corr, h, cfg=None):
    """First-order corrector P1(h): div(sigma P1 + E(Sh) P0) = 0, <P1> = 0."""
    cfg = cfg or SolverConfig()
    field = corr.field
    h = np.asarray(h, dtype=float)
    S = field.s_or_zero()
    source = np.einsum(
        "...ik,...kj->...ij", hodge_grid(np.einsum("...ij,j->...i", S, h)), corr.p0
    )
    c = _reference_constant(field, cfg)
    p1, res = _solve_system(field.sigma, source, np.zeros((3, 3)), cfg, c)
    corr.h = h
    corr.p1 = p1
    corr.residual1 = res
    return corr


def solve_p2_zero_hall(corr, h, cfg=None):
    """Second-order corrector for zero-Hall media:
    div(sigma P2 + sigma2(h) P0) = 0, <P2> = 0 (P1 vanishes identically)."""
    cfg = cfg or SolverConfig()
    field = corr.field
    if field.has_hall():
        raise HallNotZero("field has a nonzero first-order term")
    h = np.asarray(h, dtype=float)
    sigma2 = field.quad_at(h)
    if sigma2 is None:
        sigma2 = field.order_at(2, h)
    if sigma2 is None:
        sigma2 = np.zeros_like(field.sigma)
    source = np.einsum("...ik,...kj->...ij", sigma2, corr.p0)
    c = _reference_constant(field, cfg)
    p2, res = _solve_system(field.sigma, source, np.zeros((3, 3)), cfg, c)
    corr.h = h
    corr.p2 = p2
    corr.residual2 = res
    return corr
