"""Y-periodic microstructures: analytic specs and voxel rasterization.

Material data live on the unit cell Y = (0,1)^3.  Each voxel carries a
symmetric conductivity sigma0, an S-matrix (first-order magneto-coupling),
and optionally quadratic / higher-order slots.  Isotropic phases specified
through a Hall coefficient r store S = -a^2 r I (canonical storage).
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .exceptions import (
    GridMismatch,
    NonPeriodicDirection,
    ResolutionMismatchWarning,
)

_I3 = np.eye(3)


# ---------------------------------------------------------------------------
# 1D periodic profiles
# ---------------------------------------------------------------------------

@dataclass
class Profile1D:
    """1-periodic scalar profile.

    kinds:
      constant   params: value
      piecewise  params: values (list), fractions (list summing to 1);
                 value k on the arc [sum(f[:k]), sum(f[:k+1]))
      trig       params: c0, cos (list), sin (list):
                 c0 + sum_k cos_k cos(2 pi k t) + sin_k sin(2 pi k t)
      exp_trig   exp of a trig profile with the same params
    """

    kind: str
    params: dict

    def __post_init__(self):
        if self.kind not in ("constant", "piecewise", "trig", "exp_trig"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "piecewise":
            f = np.asarray(self.params["fractions"], dtype=float)
            if abs(f.sum() - 1.0) > 1e-12 or np.any(f <= 0):
                raise ValueError("fractions must be positive and sum to 1")

    def __call__(self, t):
        t = np.asarray(t, dtype=float) % 1.0
        p = self.params
        if self.kind == "constant":
            return np.full_like(t, float(p["value"]))
        if self.kind == "piecewise":
            edges = np.cumsum(p["fractions"])[:-1]
            idx = np.searchsorted(edges, t, side="right")
            return np.asarray(p["values"], dtype=float)[idx]
        c0 = float(p.get("c0", 0.0))
        out = np.full_like(t, c0)
        for k, c in enumerate(p.get("cos", []), start=1):
            out = out + c * np.cos(2 * np.pi * k * t)
        for k, c in enumerate(p.get("sin", []), start=1):
            out = out + c * np.sin(2 * np.pi * k * t)
        return np.exp(out) if self.kind == "exp_trig" else out

    def average(self, func=None):
        """Exact cell average of func(profile); analytic for piecewise."""
        f = (lambda x: x) if func is None else func
        if self.kind == "constant":
            return float(f(float(self.params["value"])))
        if self.kind == "piecewise":
            vals = np.asarray(self.params["values"], dtype=float)
            fracs = np.asarray(self.params["fractions"], dtype=float)
            return float(sum(w * f(v) for v, w in zip(vals, fracs)))
        val, _ = quad(lambda t: f(float(self(t))), 0.0, 1.0, limit=400, epsabs=1e-13, epsrel=1e-12)
        return float(val)

    def is_constant(self, tol=1e-12):
        t = np.linspace(0, 1, 257, endpoint=False)
        v = self(t)
        return float(np.ptp(v)) <= tol * max(1.0, float(np.max(np.abs(v))))

    def to_dict(self):
        return {"kind": self.kind, "params": self.params}

    @staticmethod
    def from_dict(d):
        return Profile1D(d["kind"], d["params"])

    @staticmethod
    def constant(v):
        return Profile1D("constant", {"value": float(v)})

    @staticmethod
    def piecewise(values, fractions=None):
        values = [float(v) for v in values]
        if fractions is None:
            fractions = [1.0 / len(values)] * len(values)
        return Profile1D("piecewise", {"values": values, "fractions": list(map(float, fractions))})


# ---------------------------------------------------------------------------
# Material specs
# ---------------------------------------------------------------------------

_VARIANTS = ("Homogeneous", "Layered", "Columnar", "Checkerboard4", "LaminateRank1", "SmoothRandom")


@dataclass
class MaterialSpec:
    """Analytic microstructure description; see factory functions below."""

    variant: str
    params: dict

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    def to_json(self):
        return json.dumps({"variant": self.variant, "params": self.params}, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text):
        d = json.loads(text)
        return MaterialSpec(d["variant"], d["params"])


def homogeneous(a=1.0, r=0.0):
    return MaterialSpec("Homogeneous", {"a": float(a), "r": float(r)})


def layered(xi, a_profile, r_profile=None):
    """Layered medium: isotropic a, r depending only on xi . y.

    xi must be an integer lattice vector (periodicity on the unit cell);
    it is normalized on output where a unit direction is needed.
    """
    xi = [int(round(x)) for x in xi]
    if not any(xi):
        raise ValueError("xi must be nonzero")
    r_profile = r_profile or Profile1D.constant(0.0)
    return MaterialSpec(
        "Layered",
        {"xi": xi, "a": a_profile.to_dict(), "r": r_profile.to_dict()},
    )


def laminate_rank1(theta, alpha2, hall=True):
    """Two-phase rank-one laminate in e1: phase 1 (fraction theta) has
    sigma0 = I/theta and unit S; phase 2 has sigma0 = alpha2 I and unit S."""
    theta = float(theta)
    if not 0 < theta < 1:
        raise ValueError("theta must be in (0,1)")
    return MaterialSpec(
        "LaminateRank1", {"theta": theta, "alpha2": float(alpha2), "hall": bool(hall)}
    )


def checkerboard4(alpha, r=0.0):
    """Four-phase checkerboard, columnar in e3.  After translating the
    cell (-1/2,1/2)^2 to (0,1)^2 the quadrants sit at
    Q1=(1/2,1)^2, Q2=(1/2,1)x(0,1/2), Q3=(0,1/2)^2, Q4=(0,1/2)x(1/2,1)."""
    alpha = [float(a) for a in alpha]
    if len(alpha) != 4 or min(alpha) <= 0:
        raise ValueError("need four positive conductivities")
    r = [float(r)] * 4 if np.isscalar(r) else [float(x) for x in r]
    if len(r) != 4:
        raise ValueError("r must be scalar or four values")
    return MaterialSpec("Checkerboard4", {"alpha": alpha, "r": r})


def columnar_from_tensor_product(f, g, hprime, r_const):
    """Columnar spec (invariant in e3) with sigma(y') = f(h'.y') g(Jh'.y')
    and r(y') = C / f(h'.y'), J the quarter-turn rotation.  By construction
    the dissipation gap vanishes at h = (h', 0)."""
    hp = list(hprime)
    if len(hp) != 2 or (hp[0] == 0 and hp[1] == 0):
        raise ValueError("hprime must be a nonzero 2-vector")
    for x in hp:
        if abs(x - round(x)) > 1e-9:
            raise NonPeriodicDirection(f"hprime {hprime} must have integer components")
    hp = [int(round(x)) for x in hp]
    return MaterialSpec(
        "Columnar",
        {
            "kind": "product",
            "f": f.to_dict(),
            "g": g.to_dict(),
            "hprime": hp,
            "C": float(r_const),
        },
    )


def columnar_random(seed, modes=2, kappa=3.0, r=1.0):
    """Columnar spec with a random smooth sigma(y') and constant Hall r."""
    return MaterialSpec(
        "Columnar",
        {"kind": "random", "seed": int(seed), "modes": int(modes), "kappa": float(kappa), "r": float(r)},
    )


def smooth_random(seed, modes=2, kappa=4.0, hall_amplitude=1.0):
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    return MaterialSpec(
        "SmoothRandom",
        {
            "seed": int(seed),
            "modes": int(modes),
            "kappa": float(kappa),
            "hall_amplitude": float(hall_amplitude),
        },
    )


# ---------------------------------------------------------------------------
# Grid fields
# ---------------------------------------------------------------------------

@dataclass
class GridField:
    """Voxel grid of local material data over Y = (0,1)^3.

    Arrays have shape (n1, n2, n3, 3, 3) where each ni is either the nominal
    resolution or 1 (axis along which the medium is constant).  `quad` holds
    the six symmetric second-order slots keyed "ij" (i <= j); `higher` holds
    direction-fixed coefficient grids for orders > 2 along `direction`.
    """

    resolution: int
    sigma: np.ndarray
    s: np.ndarray | None = None
    quad: dict | None = None
    direction: np.ndarray | None = None
    higher: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sigma = np.ascontiguousarray(self.sigma, dtype=float)
        if self.sigma.ndim != 5 or self.sigma.shape[3:] != (3, 3):
            raise ValueError("sigma must have shape (n1,n2,n3,3,3)")
        for n in self.sigma.shape[:3]:
            if n not in (1, self.resolution):
                raise ValueError("grid axes must match the resolution or be collapsed to 1")
        if self.s is not None:
            self.s = np.ascontiguousarray(self.s, dtype=float)
            if self.s.shape != self.sigma.shape:
                raise GridMismatch("s grid shape differs from sigma")
        if self.quad is not None:
            self.quad = {k: np.ascontiguousarray(v, dtype=float) for k, v in self.quad.items()}
        if self.direction is not None:
            d = np.asarray(self.direction, dtype=float)
            self.direction = d / np.linalg.norm(d)
        self.higher = {int(k): np.ascontiguousarray(v, dtype=float) for k, v in self.higher.items()}

    @property
    def shape(self):
        return self.sigma.shape[:3]

    def s_or_zero(self):
        return np.zeros_like(self.sigma) if self.s is None else self.s

    def has_hall(self):
        return self.s is not None and float(np.max(np.abs(self.s))) > 0.0

    def quad_at(self, h):
        """N(h,h) grid, or None if no quadratic data."""
        if not self.quad:
            return None
        h = np.asarray(h, dtype=float)
        out = np.zeros_like(self.sigma)
        for key, N in self.quad.items():
            i, j = int(key[0]), int(key[1])
            out += h[i] * h[j] * N
        return out

    def order_at(self, k, h):
        """Order-k grid evaluated at h along the stored direction."""
        arr = self.higher.get(k)
        if arr is None:
            return None
        h = np.asarray(h, dtype=float)
        t = float(self.direction @ h)
        if np.linalg.norm(h - t * self.direction) > 1e-12 * max(1.0, np.linalg.norm(h)):
            raise ValueError("h is not along the field's fixed direction")
        return t**k * arr

    def eig_band(self):
        w = np.linalg.eigvalsh(self.sigma)
        return float(w.min()), float(w.max())

    def validate(self):
        lo, hi = self.eig_band()
        if lo <= 0:
            raise ValueError(f"sigma has a non-positive eigenvalue ({lo:.3e})")
        if not np.allclose(self.sigma, np.swapaxes(self.sigma, 3, 4), atol=1e-12 * hi):
            raise ValueError("sigma voxels must be symmetric")
        return lo, hi

    # -- serialization: JSON header + concatenated float64 blobs -----------

    def _entries(self):
        out = [("sigma", self.sigma)]
        if self.s is not None:
            out.append(("s", self.s))
        for k in sorted(self.quad or {}):
            out.append((f"quad:{k}", self.quad[k]))
        for k in sorted(self.higher):
            out.append((f"order:{k}", self.higher[k]))
        return out

    def to_bytes(self):
        entries = self._entries()
        header = {
            "format": "gridfield-v1",
            "resolution": self.resolution,
            "order": "row-major z-fastest",
            "direction": None if self.direction is None else list(self.direction),
            "fields": [{"name": n, "shape": list(a.shape)} for n, a in entries],
        }
        hb = json.dumps(header, sort_keys=True).encode()
        blob = b"".join(np.ascontiguousarray(a).tobytes() for _, a in entries)
        return len(hb).to_bytes(8, "little") + hb + blob

    @staticmethod
    def from_bytes(data):
        hlen = int.from_bytes(data[:8], "little")
        header = json.loads(data[8 : 8 + hlen].decode())
        if header.get("format") != "gridfield-v1":
            raise ValueError("not a gridfield blob")
        off = 8 + hlen
        arrays = {}
        for f in header["fields"]:
            shape = tuple(f["shape"])
            count = int(np.prod(shape))
            arrays[f["name"]] = np.frombuffer(
                data, dtype=float, count=count, offset=off
            ).reshape(shape).copy()
            off += count * 8
        quad = {k.split(":", 1)[1]: v for k, v in arrays.items() if k.startswith("quad:")}
        higher = {int(k.split(":", 1)[1]): v for k, v in arrays.items() if k.startswith("order:")}
        return GridField(
            resolution=header["resolution"],
            sigma=arrays["sigma"],
            s=arrays.get("s"),
            quad=quad or None,
            direction=header.get("direction"),
            higher=higher,
        )

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @staticmethod
    def load(path):
        with open(path, "rb") as fh:
            return GridField.from_bytes(fh.read())

    def content_hash(self):
        return hashlib.sha256(self.to_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def _centers(N):
    return (np.arange(N) + 0.5) / N


def _isotropic_grids(a, r, shape):
    """sigma = a I, S = -a^2 r I on a broadcastable scalar grid."""
    a = np.broadcast_to(np.asarray(a, dtype=float), shape)
    r = np.broadcast_to(np.asarray(r, dtype=float), shape)
    sigma = a[..., None, None] * _I3
    s = (-(a**2) * r)[..., None, None] * _I3
    return np.ascontiguousarray(sigma), np.ascontiguousarray(s)


def _check_alignment(spec, N, fractions):
    edges = np.cumsum(fractions)[:-1]
    if np.any(np.abs(edges * N - np.round(edges * N)) > 1e-9):
        warnings.warn(
            f"{spec.variant}: interfaces at {list(edges)} do not align with a grid of {N}",
            ResolutionMismatchWarning,
        )


def sample(spec, N):
    """Rasterize a MaterialSpec onto an N^3 voxel grid (voxel centers).

    Axes along which the medium is constant are collapsed to length 1;
    periodic indexing makes this equivalent to the full grid.
    """
    N = int(N)
    if N < 4 or N % 2:
        raise ValueError("resolution must be even and >= 4")
    p = spec.params

    if spec.variant == "Homogeneous":
        sigma, s = _isotropic_grids(p["a"], p["r"], (1, 1, 1))
        return GridField(N, sigma, s)

    if spec.variant == "SmoothRandom":
        return _sample_smooth_random(
            p["seed"], p["modes"], p["kappa"], p["hall_amplitude"], N
        )

    if spec.variant == "LaminateRank1":
        theta, alpha2 = p["theta"], p["alpha2"]
        _check_alignment(spec, N, [theta, 1 - theta])
        chi = (_centers(N) < theta).astype(float)
        a = chi / theta + (1 - chi) * alpha2
        # phase 1: sigma = (I + E(h))/theta, phase 2: sigma = alpha2 I + E(h)
        sigma = a[:, None, None, None, None] * _I3
        s_scalar = chi / theta + (1 - chi)
        s = s_scalar[:, None, None, None, None] * _I3 if p["hall"] else None
        s = None if s is None else np.ascontiguousarray(s)
        return GridField(N, np.ascontiguousarray(sigma), s)

    if spec.variant == "Layered":
        xi = np.asarray(p["xi"], dtype=float)
        a_prof = Profile1D.from_dict(p["a"])
        r_prof = Profile1D.from_dict(p["r"])
        axes = [i for i in range(3) if xi[i] != 0]
        if len(axes) == 1 and abs(xi[axes[0]]) == 1:
            # axis-aligned layering: 1D sampling, other axes collapsed
            t = _centers(N) * xi[axes[0]]
            if a_prof.kind == "piecewise":
                _check_alignment(spec, N, a_prof.params["fractions"])
            shape = [1, 1, 1]
            shape[axes[0]] = N
            a = a_prof(t).reshape(shape)
            r = r_prof(t).reshape(shape)
        else:
            c = _centers(N)
            y = np.meshgrid(c, c, c, indexing="ij")
            t = sum(xi[i] * y[i] for i in range(3))
            a, r = a_prof(t), r_prof(t)
        sigma, s = _isotropic_grids(a, r, np.shape(a))
        return GridField(N, sigma, s)

    if spec.variant == "Checkerboard4":
        alpha, r4 = p["alpha"], p["r"]
        _check_alignment(spec, N, [0.5, 0.5])
        c = _centers(N)
        y1, y2 = np.meshgrid(c, c, indexing="ij")
        # quadrant index after the unit-square shift (see checkerboard4)
        q = np.where(
            y1 > 0.5, np.where(y2 > 0.5, 0, 1), np.where(y2 > 0.5, 3, 2)
        )
        a = np.asarray(alpha, dtype=float)[q][:, :, None]
        r4 = np.asarray(r4, dtype=float)
        if r4.ndim == 0:
            r4 = np.full(4, float(r4))
        r = r4[q][:, :, None]
        sigma, s = _isotropic_grids(a, r, a.shape)
        return GridField(N, sigma, s)

    if spec.variant == "Columnar":
        if p["kind"] == "product":
            f = Profile1D.from_dict(p["f"])
            g = Profile1D.from_dict(p["g"])
            hp = np.asarray(p["hprime"], dtype=float)
            c = _centers(N)
            y1, y2 = np.meshgrid(c, c, indexing="ij")
            t1 = hp[0] * y1 + hp[1] * y2
            t2 = -hp[1] * y1 + hp[0] * y2
            fv = f(t1)
            a = fv * g(t2)
            r = p["C"] / fv
        else:
            rng = np.random.default_rng(p["seed"])
            M, kappa = int(p["modes"]), p["kappa"]
            if N < 2 * M + 2:
                raise ValueError("resolution too coarse for the requested modes")
            c = _centers(N)
            y1, y2 = np.meshgrid(c, c, indexing="ij")
            w = np.zeros_like(y1)
            for k1 in range(-M, M + 1):
                for k2 in range(-M, M + 1):
                    if (k1, k2) == (0, 0):
                        continue
                    amp = rng.normal(size=2) / (1 + k1 * k1 + k2 * k2)
                    ph = 2 * np.pi * (k1 * y1 + k2 * y2)
                    w += amp[0] * np.cos(ph) + amp[1] * np.sin(ph)
            w *= np.log(kappa) / max(float(np.max(np.abs(w))), 1e-300)
            a = np.exp(w)
            r = np.full_like(a, p["r"])
        a = a[:, :, None]
        r = np.broadcast_to(np.asarray(r, dtype=float)[:, :, None], a.shape)
        sigma, s = _isotropic_grids(a, r, a.shape)
        return GridField(N, sigma, s)

    raise ValueError(f"unknown variant {spec.variant!r}")


def _sample_smooth_random(seed, modes, kappa, hall_amplitude, N):
    M = int(modes)
    if M and N < 2 * M + 2:
        raise ValueError("resolution too coarse for the requested modes")
    rng = np.random.default_rng(seed)

    def trig3(y):
        w = np.zeros_like(y[0])
        for k1 in range(-M, M + 1):
            for k2 in range(-M, M + 1):
                for k3 in range(0, M + 1):
                    if (k3 == 0 and (k1, k2) < (0, 0)) or (k1, k2, k3) == (0, 0, 0):
                        continue
                    amp = rng.normal(size=2) / (1 + k1 * k1 + k2 * k2 + k3 * k3)
                    ph = 2 * np.pi * (k1 * y[0] + k2 * y[1] + k3 * y[2])
                    w += amp[0] * np.cos(ph) + amp[1] * np.sin(ph)
        return w

    c = _centers(N)
    y = np.meshgrid(c, c, c, indexing="ij")
    wa = trig3(y)
    ws = trig3(y)
    if M == 0:
        a = np.ones_like(y[0])
        svals = np.zeros_like(y[0])
    else:
        a = np.exp(wa * (np.log(kappa) / max(float(np.max(np.abs(wa))), 1e-300)))
        svals = hall_amplitude * ws / max(float(np.max(np.abs(ws))), 1e-300)
    sigma = a[..., None, None] * _I3
    s = svals[..., None, None] * _I3
    return GridField(N, np.ascontiguousarray(sigma), np.ascontiguousarray(s))


def sample_smooth_random(seed, modes, kappa, hall_amplitude, N):
    """Deterministic smooth random isotropic field (see smooth_random)."""
    return _sample_smooth_random(seed, modes, kappa, hall_amplitude, N)
