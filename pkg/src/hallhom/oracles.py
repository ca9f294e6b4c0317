"""Closed-form ground truth for the microstructure families with exact
homogenization formulas: the rank-one laminate, layered media, columnar
structures, and the four-phase checkerboard.

All averages of piecewise-constant profiles are computed analytically so
these evaluators are independent of the grid pipeline they validate.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ConditionRViolated, NonPeriodicDirection
from .microstructure import Profile1D
from .tensor3 import series_invert_coeffs

_I3 = np.eye(3)
_E1 = np.eye(3)[:, 0]


# ---------------------------------------------------------------------------
# Rank-one laminate (two phases in e1, field along e3)
#   phase 1 (fraction theta): sigma = (I + E(h)) / theta
#   phase 2:                  sigma = alpha2 I + E(h)
# ---------------------------------------------------------------------------

def _bcq(theta, alpha2):
    b = 1 + (1 - theta) * alpha2
    c = 1 - theta + alpha2
    q = 1 - theta + theta**2 * alpha2
    return b, c, q


def laminate_sigma_star(theta, alpha2, h3):
    """Effective conductivity sigma*(h) of the rank-one laminate."""
    b, _, q = _bcq(theta, alpha2)
    m = (1 - theta + theta * alpha2) / q
    return np.array(
        [
            [alpha2 / q, -m * h3, 0.0],
            [m * h3, b + (1 - theta) ** 3 * h3**2 / q, 0.0],
            [0.0, 0.0, b],
        ]
    )


def laminate_resistivity(theta, alpha2, h3):
    """Effective resistivity rho*(h) = sigma*(h)^{-1}, in closed form.

    The (1,1) numerator is b(1-theta+theta^2 alpha2) + (1-theta)^3 h3^2
    (first power of the middle factor; verified against the inverse of
    sigma*(h) symbolically and numerically)."""
    b, c, q = _bcq(theta, alpha2)
    den = b * alpha2 + c * h3**2
    m = 1 - theta + theta * alpha2
    return np.array(
        [
            [(b * q + (1 - theta) ** 3 * h3**2) / den, m * h3 / den, 0.0],
            [-m * h3 / den, alpha2 / den, 0.0],
            [0.0, 0.0, 1.0 / b],
        ]
    )


def laminate_magnetoresistance(theta, alpha2, h3=1.0):
    """M*(h,h) at h = h3 e3: the h3^2 coefficient of sym rho*(h), times h3^2."""
    b, c, q = _bcq(theta, alpha2)
    m11 = ((1 - theta) ** 3 * b * alpha2 - b * q * c) / (b * alpha2) ** 2
    m22 = -c / (b**2 * alpha2)
    return h3**2 * np.diag([m11, m22, 0.0])


def laminate_correctors(theta, alpha2, h3):
    """Per-phase corrector matrices (P1, P2) of the laminate at h = h3 e3."""
    q = 1 - theta + theta**2 * alpha2
    base = np.array([[theta * alpha2 - 1, (1 - theta) * h3, 0.0], [0, 0, 0], [0, 0, 0]])
    out = []
    for i in (1, 2):
        coef = (1 - theta) ** (2 - i) * (-theta) ** (i - 1) / q
        out.append(_I3 + coef * base)
    return tuple(out)


def laminate_gap_2p(theta, alpha2, h3, p):
    """The two nonzero entries (d11, d22) of the order-2p laminate gap."""
    if p < 1:
        raise ValueError("p must be >= 1")
    b, c, q = _bcq(theta, alpha2)
    sign = (-1.0) ** p
    d11 = (sign / q**2) * (
        (1 - theta + theta * alpha2) ** 2 * c ** (p - 1) / (alpha2 ** (p - 1) * b**p)
        - (1 - theta) / alpha2 ** (2 * p - 1)
        - (theta * alpha2) ** 2
    ) * h3 ** (2 * p)
    d22 = sign * (
        c**p / (alpha2**p * b ** (p - 1)) - 1 - (1 - theta) / alpha2 ** (2 * p - 1)
    ) * h3 ** (2 * p)
    return float(d11), float(d22)


def laminate_phase_resistivity_coeffs(theta, alpha2, phase, n, h3_sign=1.0):
    """Coefficients [rho_0..rho_n] of rho_i(h) = sigma_i(h)^{-1} along h = t e3."""
    E3 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]) * h3_sign
    if phase == 1:
        coeffs = [_I3 / theta, E3 / theta]
    else:
        coeffs = [alpha2 * _I3, E3]
    coeffs += [np.zeros((3, 3))] * (n - 1)
    return series_invert_coeffs(coeffs[: n + 1])


def laminate_mix_series(coeffs_a, coeffs_b, theta, n=None):
    """Order-by-order rank-one lamination in e1 of two constant-matrix series.

    Exact mixing formula for a laminate of A (fraction theta) and B:
      sigma* = theta A + (1-theta) B
               - theta (1-theta) (A-B) e1 e1^T (A-B) / d,
      d = (1-theta) A_11 + theta B_11,
    applied to coefficient lists (series in a scalar parameter t)."""
    if n is None:
        n = max(len(coeffs_a), len(coeffs_b)) - 1
    A = list(coeffs_a) + [np.zeros((3, 3))] * (n + 1 - len(coeffs_a))
    B = list(coeffs_b) + [np.zeros((3, 3))] * (n + 1 - len(coeffs_b))
    diff = [a - b for a, b in zip(A, B)]
    # scalar series d and its reciprocal
    d = [(1 - theta) * a[0, 0] + theta * b[0, 0] for a, b in zip(A, B)]
    if d[0] == 0:
        raise ValueError("degenerate normal coefficient")
    inv_d = [1.0 / d[0]]
    for k in range(1, n + 1):
        inv_d.append(-sum(d[j] * inv_d[k - j] for j in range(1, k + 1)) / d[0])
    # rank-one correction (A-B) e1 e1^T (A-B) / d
    u = [m[:, 0:1] for m in diff]    # (A-B) e1 as column
    v = [m[0:1, :] for m in diff]    # e1^T (A-B) as row
    uv = [sum(u[j] @ v[k - j] for j in range(k + 1)) for k in range(n + 1)]
    corr = [
        sum(inv_d[j] * uv[k - j] for j in range(k + 1)) for k in range(n + 1)
    ]
    return [
        theta * A[k] + (1 - theta) * B[k] - theta * (1 - theta) * corr[k]
        for k in range(n + 1)
    ]


def laminate_zero_hall_sigma_star_coeffs(theta, alpha2, n=4):
    """Direction-fixed sigma* coefficients (orders 0..n along e3) for the
    laminate with the Hall term suppressed: each phase keeps only the even
    orders of its exact resistivity expansion, re-inverted to a
    conductivity series with sigma^1 = 0."""
    out_phases = []
    for phase in (1, 2):
        rho = laminate_phase_resistivity_coeffs(theta, alpha2, phase, n)
        rho_even = [c if k % 2 == 0 else np.zeros((3, 3)) for k, c in enumerate(rho)]
        out_phases.append(series_invert_coeffs(rho_even))
    return laminate_mix_series(out_phases[0], out_phases[1], theta, n)


def laminate_zero_hall_field(theta, alpha2, N, order=4):
    """GridField of the laminate with the Hall term suppressed: each phase
    keeps the even orders (t^2, t^4 along e3) of its exact conductivity
    expansion; the first-order slot is identically zero."""
    from .microstructure import GridField

    chi = ((np.arange(N) + 0.5) / N < theta).astype(bool)
    phase_coeffs = []
    for phase in (1, 2):
        rho = laminate_phase_resistivity_coeffs(theta, alpha2, phase, order)
        rho_even = [c if k % 2 == 0 else np.zeros((3, 3)) for k, c in enumerate(rho)]
        phase_coeffs.append(series_invert_coeffs(rho_even))

    def grid(k):
        vals = np.where(
            chi[:, None, None, None, None],
            phase_coeffs[0][k][None, None, None],
            phase_coeffs[1][k][None, None, None],
        )
        return np.ascontiguousarray(vals)

    return GridField(
        resolution=N,
        sigma=grid(0),
        s=None,
        direction=np.array([0.0, 0.0, 1.0]),
        higher={k: grid(k) for k in range(2, order + 1)},
    )


# ---------------------------------------------------------------------------
# Layered media (d1/d2/d3 gap assembly)
# ---------------------------------------------------------------------------

@dataclass
class LayeredProfile:
    xi: np.ndarray
    a: Profile1D
    r: Profile1D

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        self.xi = xi / np.linalg.norm(xi)

    def averages(self):
        a, r = self.a, self.r
        # joint averages need the two profiles evaluated together
        if a.kind == "piecewise" and r.kind == "piecewise" and a.params["fractions"] == r.params["fractions"]:
            va = np.asarray(a.params["values"], dtype=float)
            vr = np.asarray(r.params["values"], dtype=float)
            w = np.asarray(a.params["fractions"], dtype=float)

            def avg(f):
                return float(np.sum(w * f(va, vr)))
        elif a.kind == "constant" or r.kind == "constant":
            ca = a.kind == "constant"
            prof = r if ca else a

            def avg(f, _prof=prof, _ca=ca):
                if _ca:
                    return _prof.average(lambda t: f(float(a.params["value"]), t))
                return _prof.average(lambda t: f(t, float(r.params["value"])))
        else:
            from scipy.integrate import quad

            def avg(f):
                val, _ = quad(
                    lambda t: f(float(a(t)), float(r(t))), 0, 1, limit=400, epsabs=1e-13, epsrel=1e-12
                )
                return float(val)

        return {
            "inv_a": avg(lambda x, y: 1.0 / x),
            "a": avg(lambda x, y: x),
            "ar": avg(lambda x, y: x * y),
            "ar2": avg(lambda x, y: x * y * y),
            "a2r": avg(lambda x, y: x * x * y),
            "a2r2": avg(lambda x, y: x * x * y * y),
            "a3r2": avg(lambda x, y: x**3 * y * y),
        }


def layered_d_coefficients(profile):
    m = profile.averages()
    d1 = m["inv_a"] ** -2 * (m["ar2"] - m["ar"] ** 2 / m["a"])
    d2 = m["a3r2"] - m["a2r"] ** 2 / m["a"]
    d3 = m["inv_a"] ** -1 * (m["a2r2"] - m["ar"] * m["a2r"] / m["a"])
    return d1, d2, d3


def layered_gap(profile, h):
    """Gap matrix D(h,h) of a layered medium, in the canonical basis."""
    h = np.asarray(h, dtype=float)
    xi = profile.xi
    d1, d2, d3 = layered_d_coefficients(profile)
    hxxi = np.cross(h, xi)
    cross = np.linalg.norm(hxxi)
    dot = float(h @ xi)
    if cross < 1e-14 * max(1.0, np.linalg.norm(h)):
        # h parallel to xi: any orthonormal completion (xi, u, v)
        D_hat = d2 * dot**2 * np.diag([0.0, 1.0, 1.0])
        u = np.eye(3)[np.argmin(np.abs(xi))]
        u = u - (u @ xi) * xi
        u /= np.linalg.norm(u)
        O = np.column_stack([xi, u, np.cross(xi, u)])
    else:
        e2 = np.cross(xi, np.cross(xi, h)) / cross
        e3 = hxxi / cross
        O = np.column_stack([xi, e2, e3])
        D_hat = np.array(
            [
                [d1 * cross**2, d3 * dot * cross, 0.0],
                [d3 * dot * cross, d2 * dot**2, 0.0],
                [0.0, 0.0, d2 * dot**2],
            ]
        )
    return O @ D_hat @ O.T


def layered_sigma_star(profile):
    """sigma* in the layer basis (xi, ., .): diag(<1/a>^-1, <a>, <a>)."""
    m = profile.averages()
    xi = profile.xi
    u = np.eye(3)[np.argmin(np.abs(xi))]
    u = u - (u @ xi) * xi
    u /= np.linalg.norm(u)
    O = np.column_stack([xi, u, np.cross(xi, u)])
    return O @ np.diag([1.0 / m["inv_a"], m["a"], m["a"]]) @ O.T


class LayeredBranch(Enum):
    ZERO_H = "Zero_h"
    ORTH_R_CONST = "OrthRConst"
    PAR_AR_CONST = "ParARConst"
    GENERIC_BOTH_CONST = "GenericBothConst"
    NOT_EQUAL = "NotEqual"


def layered_equality_classify(profile, h, tol=1e-12):
    """Equality branch of the layered dissipation gap."""
    h = np.asarray(h, dtype=float)
    if np.linalg.norm(h) <= tol:
        return LayeredBranch.ZERO_H
    xi = profile.xi
    cross = np.linalg.norm(np.cross(h, xi))
    dot = abs(float(h @ xi))

    def const(f):
        if profile.a.kind == "piecewise" and profile.r.kind == "piecewise":
            va = np.asarray(profile.a.params["values"], dtype=float)
            vr = np.asarray(profile.r.params["values"], dtype=float)
            vals = f(va, vr)
        else:
            t = np.linspace(0, 1, 257, endpoint=False)
            vals = f(np.asarray(profile.a(t)), np.asarray(profile.r(t)))
        return float(np.ptp(vals)) <= tol * max(1.0, float(np.max(np.abs(vals))))

    r_const = const(lambda a, r: r)
    ar_const = const(lambda a, r: a * r)
    if dot <= tol * np.linalg.norm(h):       # h orthogonal to xi
        return LayeredBranch.ORTH_R_CONST if r_const else LayeredBranch.NOT_EQUAL
    if cross <= tol * np.linalg.norm(h):     # h parallel to xi
        return LayeredBranch.PAR_AR_CONST if ar_const else LayeredBranch.NOT_EQUAL
    if r_const and ar_const:
        return LayeredBranch.GENERIC_BOTH_CONST
    return LayeredBranch.NOT_EQUAL


# ---------------------------------------------------------------------------
# Columnar structures (invariant in e3)
# ---------------------------------------------------------------------------

@dataclass
class ColumnarVerdict:
    equal: bool
    branch: str
    f: np.ndarray | None = None
    g: np.ndarray | None = None
    C: float | None = None
    detail: str = ""


def columnar_equality_check(sigma2d, r2d, h, tol=1e-8):
    """Equality classification for a columnar medium given on an M x M grid
    over (0,1)^2 (values at cell centers), at magnetic field h.

    For h' != 0, h3 = 0 the criterion is separability
    sigma = f(h'.y') g(Jh'.y') with r = C/f; tested by an SVD rank-1 check
    of sigma resampled on the rotated lattice.  h' must be an integer
    lattice direction.
    """
    sigma2d = np.asarray(sigma2d, dtype=float)
    r2d = np.asarray(r2d, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.any(r2d == 0):
        raise ConditionRViolated("r vanishes on the sampled grid")
    if abs(float(np.mean(1.0 / (sigma2d * r2d)))) < 1e-14:
        raise ConditionRViolated("<(sigma r)^{-1}> = 0 on the sampled grid")

    hp = h[:2]
    h3 = h[2]
    M = sigma2d.shape[0]

    def is_const(arr):
        return float(np.ptp(arr)) <= tol * max(1.0, float(np.max(np.abs(arr))))

    if np.linalg.norm(h) == 0:
        return ColumnarVerdict(True, "zero_h")
    if np.linalg.norm(hp) == 0:
        return ColumnarVerdict(is_const(r2d), "axial_r_const", detail="requires constant r")

    for x in hp:
        if abs(x - round(x)) > 1e-9:
            raise NonPeriodicDirection(
                f"h' = {tuple(hp)} is not an integer lattice direction"
            )
    hp = np.round(hp).astype(int)

    # resample sigma on the rotated lattice t1 = h'.y', t2 = Jh'.y'
    # (inverse map y' = [h' | -Jh'] t / |h'|^2, indices mod M)
    m1, m2 = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    n2 = int(hp @ hp)
    # voxel centers: y = (i+1/2)/M ; choose t on the same sublattice so the
    # inverse map lands on grid points: t = ((m+1/2)/M) * n2-scaled lattice
    i1 = (hp[0] * m1 - hp[1] * m2) % M
    i2 = (hp[1] * m1 + hp[0] * m2) % M
    L = sigma2d[i1, i2]
    Rr = r2d[i1, i2]
    # rows of L vary t2 at fixed t1 once re-read along lattice lines:
    # with the index map above, axis 0 is the h' direction, axis 1 the Jh'.
    sv = np.linalg.svd(L, compute_uv=False)
    separable = sv[1] <= 1e-8 * sv[0]

    if h3 == 0:
        if not separable:
            return ColumnarVerdict(False, "planar_not_separable")
        U, S, Vt = np.linalg.svd(L)
        f = U[:, 0] * np.sqrt(S[0])
        g = Vt[0] * np.sqrt(S[0])
        if np.mean(f) < 0:
            f, g = -f, -g
        # normalize <1/f> = 1
        scale = float(np.mean(1.0 / f))
        f = f * scale
        g = g / scale
        # r must equal C / f along the same lattice
        prod = Rr * f[:, None]
        C = float(np.mean(prod))
        ok = np.allclose(prod, C, rtol=tol, atol=tol * max(1.0, abs(C)))
        return ColumnarVerdict(ok, "planar_separable", f=f, g=g, C=C,
                               detail="" if ok else "r is not C/f")
    # h' != 0 and h3 != 0: r constant and sigma = g(Jh'.y') only
    f_const = all(is_const(L[:, j]) for j in range(0, M, max(1, M // 8)))
    return ColumnarVerdict(
        is_const(r2d) and separable and f_const, "oblique_g_only",
        detail="requires constant r and sigma = g(Jh'.y')",
    )


# ---------------------------------------------------------------------------
# Four-phase checkerboard
# ---------------------------------------------------------------------------

def checkerboard_equality_check(alpha, r, h, tol=1e-12):
    """Equality criterion of the four-phase checkerboard (quadrant
    constants alpha_i, r_i; h arbitrary).  Returns (equal, branch)."""
    alpha = np.asarray(alpha, dtype=float)
    r = np.asarray([r] * 4 if np.isscalar(r) else r, dtype=float)
    h = np.asarray(h, dtype=float)
    if np.any(r == 0):
        raise ConditionRViolated("r vanishes on a quadrant")

    def const(v):
        return float(np.ptp(v)) <= tol * max(1.0, float(np.max(np.abs(v))))

    if np.linalg.norm(h) == 0:
        return True, "zero_h"
    nonzero = [i for i in range(3) if abs(h[i]) > tol * np.linalg.norm(h)]
    if len(nonzero) > 1:
        return (const(alpha) and const(r)), "generic_needs_constant"
    axis = nonzero[0]
    if axis == 2:
        return const(r), "axial_r_const"
    # h along e1 or e2: need alpha1 alpha3 = alpha2 alpha4 and the matching
    # two-level Hall profile r = C(alpha_{6-2i}/alpha1 on {y_i>0}, 1 below)
    if abs(alpha[0] * alpha[2] - alpha[1] * alpha[3]) > tol * float(np.max(alpha) ** 2):
        return False, "product_condition_fails"
    i = axis + 1  # 1-based field axis
    ratio = alpha[6 - 2 * i - 1] / alpha[0]
    if i == 1:
        upper, lower = (r[0], r[1]), (r[2], r[3])   # y1>0: Q1,Q2
    else:
        upper, lower = (r[0], r[3]), (r[1], r[2])   # y2>0: Q1,Q4
    if not (const(np.asarray(upper)) and const(np.asarray(lower))):
        return False, "hall_profile_mismatch"
    C = lower[0]
    if abs(upper[0] - C * ratio) > tol * max(1.0, abs(C * ratio)):
        return False, "hall_profile_mismatch"
    return True, "in_plane_product_and_hall"


def checkerboard_factorization(alpha):
    """For alpha1 alpha3 = alpha2 alpha4, the tensor-product factorization
    f(y1), g(y2) with C1' C2' = 1/alpha1 (cell centered at the origin):
    f = C1'(alpha1 on y1>0, alpha4 on y1<0), g = C2'(alpha1 on y2>0, alpha2 below)."""
    alpha = np.asarray(alpha, dtype=float)
    if abs(alpha[0] * alpha[2] - alpha[1] * alpha[3]) > 1e-12 * float(np.max(alpha) ** 2):
        raise ValueError("requires alpha1 alpha3 = alpha2 alpha4")
    c1 = 1.0 / np.sqrt(alpha[0])
    c2 = 1.0 / (alpha[0] * c1)
    f = (c1 * alpha[0], c1 * alpha[3])  # on y1 > 0, y1 < 0
    g = (c2 * alpha[0], c2 * alpha[1])  # on y2 > 0, y2 < 0
    return f, g
