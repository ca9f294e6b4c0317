"""Exact 3x3 algebra for magneto-transport tensors.

Provides the antisymmetric Hodge map, cofactor matrices, the conjugation
identity P^T E(xi) P = E(Cof(P)^T xi), and order-by-order inversion of
matrix-valued perturbation series in the magnetic field h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotAntisymmetric, SingularCofactor, SingularZeroOrder

TAU_ASYM = 1e-10

# Levi-Civita symbol, used to vectorize the Hodge map over grids.
EPS3 = np.zeros((3, 3, 3))
EPS3[0, 1, 2] = EPS3[1, 2, 0] = EPS3[2, 0, 1] = 1.0
EPS3[0, 2, 1] = EPS3[2, 1, 0] = EPS3[1, 0, 2] = -1.0


def hodge(eta):
    """Antisymmetric matrix E(eta) with E(eta) x = eta x (cross product).

    This is the cross-product convention [eta]_x; it satisfies the
    conjugation identity exactly (see ``conjugate_identity_check``).
    """
    eta = np.asarray(eta, dtype=float)
    return -np.einsum("ijk,...k->...ij", EPS3, eta)


def hodge_inv(A, tol=TAU_ASYM):
    """Vector eta with hodge(eta) = A, for antisymmetric A."""
    A = np.asarray(A, dtype=float)
    scale = np.linalg.norm(A)
    if scale > 0 and np.linalg.norm(A + A.T) > tol * scale:
        raise NotAntisymmetric(f"symmetric part norm {np.linalg.norm(A + A.T):.3e}")
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def cofactor(A):
    """Cofactor matrix: Cof(A)^T A = det(A) I. Works on (..., 3, 3) stacks."""
    A = np.asarray(A, dtype=float)
    c = np.empty_like(A)
    # Cof(A) columns are cross products of A's columns.
    c[..., :, 0] = np.cross(A[..., :, 1], A[..., :, 2], axis=-1)
    c[..., :, 1] = np.cross(A[..., :, 2], A[..., :, 0], axis=-1)
    c[..., :, 2] = np.cross(A[..., :, 0], A[..., :, 1], axis=-1)
    return c


def conjugate_identity_check(P, xi):
    """Residual of P^T E(xi) P = E(Cof(P)^T xi) for the shipped convention."""
    P = np.asarray(P, dtype=float)
    xi = np.asarray(xi, dtype=float)
    lhs = P.T @ hodge(xi) @ P
    rhs = hodge(cofactor(P).T @ xi)
    return float(np.linalg.norm(lhs - rhs))


def hall_from_s(sigma0, S):
    """Hall matrix R from the S-matrix: R = -Cof(sigma0)^{-1} S."""
    C = cofactor(np.asarray(sigma0, dtype=float))
    if abs(np.linalg.det(C)) < 1e-300:
        raise SingularCofactor("cofactor matrix of sigma0 is singular")
    return -np.linalg.solve(C, np.asarray(S, dtype=float))


def s_from_hall(sigma0, R):
    """Inverse of hall_from_s: S = -Cof(sigma0) R."""
    return -cofactor(np.asarray(sigma0, dtype=float)) @ np.asarray(R, dtype=float)


def _as_mat(x):
    a = np.asarray(x, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"expected 3x3 matrix, got shape {a.shape}")
    return a


_QUAD_KEYS = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


@dataclass
class PerturbSeries:
    """Matrix-valued expansion c0 + c1(h) + c2(h,h) + ... in the field h.

    Order 1 is stored through its S-matrix: c1(h) = hodge(S h).  Order 2 is
    stored as six symmetric slots N_ij (i <= j) with
    c2(h,h) = sum_{i<=j} h_i h_j N_ij.  Orders above 2 are direction-fixed:
    coefficient matrices of t^k along the stored unit direction.
    """

    c0: np.ndarray
    s_matrix: np.ndarray | None = None
    quad: dict | None = None
    direction: np.ndarray | None = None
    higher: dict = field(default_factory=dict)

    def __post_init__(self):
        self.c0 = _as_mat(self.c0)
        if self.s_matrix is not None:
            self.s_matrix = _as_mat(self.s_matrix)
        if self.quad is not None:
            self.quad = {k: _as_mat(v) for k, v in self.quad.items()}
            for i, j in self.quad:
                if not (0 <= i <= j <= 2):
                    raise ValueError(f"quad slot key {(i, j)} must have 0 <= i <= j <= 2")
        if self.direction is not None:
            d = np.asarray(self.direction, dtype=float)
            self.direction = d / np.linalg.norm(d)
        self.higher = {int(k): _as_mat(v) for k, v in self.higher.items()}
        if self.higher and self.direction is None:
            raise ValueError("orders above 2 require a fixed direction")

    @property
    def order(self):
        n = 0
        if self.s_matrix is not None:
            n = 1
        if self.quad is not None:
            n = 2
        if self.higher:
            n = max(n, max(self.higher))
        return n

    def term(self, k, h):
        """The order-k term evaluated at h (a symmetric k-multilinear value)."""
        h = np.asarray(h, dtype=float)
        if k == 0:
            return self.c0.copy()
        if k == 1:
            if self.s_matrix is None:
                return np.zeros((3, 3))
            return hodge(self.s_matrix @ h)
        if k == 2:
            if self.quad is None:
                return np.zeros((3, 3))
            out = np.zeros((3, 3))
            for (i, j), N in self.quad.items():
                out += h[i] * h[j] * N
            return out
        coef = self.higher.get(k)
        if coef is None:
            return np.zeros((3, 3))
        t = self._along(h)
        return t**k * coef

    def _along(self, h):
        """Signed magnitude t with h = t * direction; rejects off-axis h."""
        h = np.asarray(h, dtype=float)
        if self.direction is None:
            raise ValueError("series has no fixed direction")
        t = float(self.direction @ h)
        if np.linalg.norm(h - t * self.direction) > 1e-12 * max(1.0, np.linalg.norm(h)):
            raise ValueError("h is not along the series' fixed direction")
        return t

    def evaluate(self, h, order=None):
        n = self.order if order is None else order
        return sum((self.term(k, h) for k in range(n + 1)), np.zeros((3, 3)))

    def coefficients_along(self, u, n):
        """Coefficient matrices [A_0..A_n] of the scalar expansion at h = t u."""
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        coeffs = [self.c0.copy()]
        if n >= 1:
            coeffs.append(self.term(1, u))
        if n >= 2:
            coeffs.append(self.term(2, u))
        for k in range(3, n + 1):
            coef = self.higher.get(k)
            if coef is not None:
                if np.linalg.norm(np.cross(u, self.direction)) > 1e-12:
                    raise ValueError("requested direction differs from the stored one")
            coeffs.append(np.zeros((3, 3)) if coef is None else coef.copy())
        return coeffs


def series_multiply(a, b, n):
    """Cauchy product of two matrix coefficient lists, truncated at order n."""
    return [
        sum(
            (a[j] @ b[k - j] for j in range(max(0, k - len(b) + 1), min(k, len(a) - 1) + 1)),
            np.zeros((3, 3)),
        )
        for k in range(n + 1)
    ]


def series_invert_coeffs(coeffs):
    """Coefficient lists of the inverse series: sum_k rho_k with
    rho_0 = A_0^{-1}, rho_k = -rho_0 sum_{j=1..k} A_j rho_{k-j}."""
    A0 = coeffs[0]
    if abs(np.linalg.det(A0)) < 1e-300:
        raise SingularZeroOrder("zeroth-order coefficient is singular")
    rho0 = np.linalg.inv(A0)
    out = [rho0]
    for k in range(1, len(coeffs)):
        acc = np.zeros((3, 3))
        for j in range(1, k + 1):
            acc += coeffs[j] @ out[k - j]
        out.append(-rho0 @ acc)
    return out


def invert_series(series, n):
    """Invert a PerturbSeries order by order up to order n.

    Returns the resistivity-style series of the inverse, with multilinear
    storage for orders <= 2 and direction-fixed storage above.
    """
    if abs(np.linalg.det(series.c0)) < 1e-300:
        raise SingularZeroOrder("zeroth-order coefficient is singular")
    rho0 = np.linalg.inv(series.c0)

    s_out = None
    if n >= 1 and series.s_matrix is not None:
        # rho1(h) = -rho0 E(Sh) rho0 = E(-Cof(rho0)^T S h) by the
        # conjugation identity (rho0 symmetric).
        s_out = -cofactor(rho0).T @ series.s_matrix

    quad_out = None
    if n >= 2:
        def rho2_at(h):
            c1 = series.term(1, h)
            c2 = series.term(2, h)
            return rho0 @ (c1 @ rho0 @ c1 - c2) @ rho0

        basis = np.eye(3)
        diag = [rho2_at(basis[i]) for i in range(3)]
        quad_out = {}
        for i, j in _QUAD_KEYS:
            if i == j:
                quad_out[(i, i)] = diag[i]
            else:
                quad_out[(i, j)] = rho2_at(basis[i] + basis[j]) - diag[i] - diag[j]

    higher_out = {}
    direction = series.direction
    if n > 2:
        if direction is None:
            raise ValueError("orders above 2 require a series with a fixed direction")
        coeffs = series.coefficients_along(direction, n)
        rho = series_invert_coeffs(coeffs)
        higher_out = {k: rho[k] for k in range(3, n + 1)}

    return PerturbSeries(
        c0=rho0, s_matrix=s_out, quad=quad_out, direction=direction, higher=higher_out
    )


def parity_residual(series, h, order=None):
    """Max violation of Onsager parity: even terms symmetric, odd antisymmetric."""
    n = series.order if order is None else order
    worst = 0.0
    for k in range(n + 1):
        t = series.term(k, h)
        nt = np.linalg.norm(t)
        if nt == 0:
            continue
        bad = t - t.T if k % 2 == 0 else t + t.T
        worst = max(worst, np.linalg.norm(bad) / nt)
    return worst


def magnetoresistance_from_local(sigma0, S, h, N_hh=None):
    """Second-order resistivity term M(h,h) of a local law
    sigma(h) = sigma0 + E(Sh) + N(h,h): M = rho (E(Sh) rho E(Sh) - N) rho."""
    sigma0 = _as_mat(sigma0)
    rho = np.linalg.inv(sigma0)
    Eh = hodge(_as_mat(S) @ np.asarray(h, dtype=float))
    N = np.zeros((3, 3)) if N_hh is None else _as_mat(N_hh)
    return rho @ (Eh @ rho @ Eh - N) @ rho
