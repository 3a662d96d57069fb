"""Axisymmetric spacelike graphs over S^n and their pointwise geometry.

A hypersurface is stored as the height ``rho(psi)`` on the uniform polar grid
``psi_i = i pi / N``.  Both poles are nodes; the profile is extended across
them by even reflection, so every centred difference is defined everywhere and
``rho'`` vanishes at the poles exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import eval_legendre

from .errors import DomainError, SpacelikeBreached
from .spaceform import WarpModel, de_sitter

EPS_V = 1e-6
MIN_INTERVALS = 16


@dataclass(frozen=True)
class RadialProfile:
    model: WarpModel
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        if rho.ndim != 1 or rho.size - 1 < MIN_INTERVALS:
            raise DomainError(f"need a 1-d profile with at least {MIN_INTERVALS} intervals")
        if not np.all(np.isfinite(rho)) or not np.all(rho > 0):
            raise DomainError("profile must be finite and stay in the upper branch rho > 0")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def N(self) -> int:
        return self.rho.size - 1

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def dpsi(self) -> float:
        return np.pi / self.N

    @property
    def psi(self) -> np.ndarray:
        return np.linspace(0.0, np.pi, self.N + 1)

    def with_rho(self, rho) -> "RadialProfile":
        return RadialProfile(self.model, rho)


def slice_profile(model: WarpModel, N: int, r: float) -> RadialProfile:
    return RadialProfile(model, np.full(N + 1, float(r)))


def legendre_profile(model: WarpModel, N: int, r: float, eps: float, ell: int = 2) -> RadialProfile:
    """``rho = r + eps P_ell(cos psi)``."""
    psi = np.linspace(0.0, np.pi, N + 1)
    return RadialProfile(model, r + eps * eval_legendre(ell, np.cos(psi)))


def profile_from_function(model: WarpModel, N: int, func) -> RadialProfile:
    psi = np.linspace(0.0, np.pi, N + 1)
    return RadialProfile(model, func(psi))


def _padded(f: np.ndarray) -> np.ndarray:
    return np.concatenate(([f[1]], f, [f[-2]]))


def centred_derivatives(f: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """First and second centred differences of an even-parity grid function."""
    g = _padded(f)
    d1 = (g[2:] - g[:-2]) / (2 * h)
    d2 = (g[2:] - 2 * g[1:-1] + g[:-2]) / (h * h)
    d1[0] = d1[-1] = 0.0
    return d1, d2


def derivatives(profile: RadialProfile) -> tuple[np.ndarray, np.ndarray]:
    return centred_derivatives(profile.rho, profile.dpsi)


def pole_second(f0: float, f1: float, f2: float, h: float, n: int) -> float:
    """Pole value of ``f''`` shared by both principal curvatures.

    At an axis point ``cot(psi) f'`` tends to ``f''`` and the surface is
    umbilic.  The plain stencil ``2 (f1 - f0) / h^2`` leaves the mean
    curvature with an O(h^2) error that jumps at the pole, which a later
    second difference (the Laplacian of the speed) turns into an O(1)
    defect.  Blending in the two-cell difference with weight
    ``1 - (2n+1)/(3n)`` makes the error of ``H1`` continuous across the axis.
    """
    a = (2 * n + 1) / (3 * n)
    return (2.0 * a * (f1 - f0) + 0.5 * (1.0 - a) * (f2 - f0)) / (h * h)


def _pole_corrected(psi: np.ndarray, f: np.ndarray, d1: np.ndarray, d2: np.ndarray,
                    n: int) -> tuple[np.ndarray, np.ndarray]:
    """Second derivative and ``cot(psi) * d1`` with the pole nodes replaced by ``pole_second``."""
    h = psi[1] - psi[0]
    d2 = d2.copy()
    d2[0] = pole_second(f[0], f[1], f[2], h, n)
    d2[-1] = pole_second(f[-1], f[-2], f[-3], h, n)
    cot = np.empty_like(d1)
    cot[1:-1] = d1[1:-1] / np.tan(psi[1:-1])
    cot[0], cot[-1] = d2[0], d2[-1]
    return d2, cot


@dataclass(frozen=True)
class GeometryFrame:
    """Per-node geometry of a profile.

    ``kappa_rad`` is the principal curvature along meridians; ``kappa_ang``
    has multiplicity ``n - 1``.  Curvatures follow the convention in which
    slices are mean-convex, i.e. the shape operator is taken with respect to
    minus the future unit normal.
    """

    rho: np.ndarray
    rho_prime: np.ndarray
    rho_second: np.ndarray
    warp: np.ndarray
    warp_prime: np.ndarray
    v2: np.ndarray
    v: np.ndarray
    u: np.ndarray
    kappa_rad: np.ndarray
    kappa_ang: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    normA2: np.ndarray
    ring2: np.ndarray
    grad2rho: np.ndarray
    n: int = field(default=2)

    @property
    def min_v2(self) -> float:
        return float(self.v2.min())

    @property
    def min_H1(self) -> float:
        return float(self.H1.min())

    @property
    def max_H1(self) -> float:
        return float(self.H1.max())

    @property
    def max_ring2(self) -> float:
        return float(self.ring2.max())

    @property
    def principal_curvatures(self) -> np.ndarray:
        """``(N+1, n)`` array: the meridian curvature followed by the angular one repeated."""
        k = np.repeat(self.kappa_ang[:, None], self.n, axis=1)
        k[:, 0] = self.kappa_rad
        return k


def spacelike_v2(profile: RadialProfile, rho_prime=None) -> np.ndarray:
    if rho_prime is None:
        rho_prime, _ = derivatives(profile)
    th = profile.model.warp(profile.rho)
    return 1.0 - (rho_prime / th) ** 2


def frame(profile: RadialProfile, eps_v: float = EPS_V) -> GeometryFrame:
    """Pointwise geometry of the graph from the reduced second fundamental form."""
    n = profile.n
    rho = profile.rho
    d1, d2 = derivatives(profile)
    d2, cot_d1 = _pole_corrected(profile.psi, rho, d1, d2, n)
    th = profile.model.warp(rho)
    dth = profile.model.warp_derivative(rho)
    v2 = 1.0 - (d1 / th) ** 2
    if not v2.min() > eps_v:
        i = int(np.argmin(v2))
        raise SpacelikeBreached(f"v^2 = {v2[i]:.3e} <= {eps_v:g} at node {i}")
    v = np.sqrt(v2)
    k_rad = (th * d2 + th * th * dth - 2.0 * dth * d1 * d1) / (th ** 3 * v ** 3)
    k_ang = (dth + cot_d1 / th) / (th * v)
    H1 = (k_rad + (n - 1) * k_ang) / n
    H2 = (2.0 * k_rad * k_ang + (n - 2) * k_ang * k_ang) / n
    normA2 = k_rad ** 2 + (n - 1) * k_ang ** 2
    ring2 = (n - 1) / n * (k_rad - k_ang) ** 2
    grad2 = (1.0 - v2) / v2
    return GeometryFrame(rho, d1, d2, th, dth, v2, v, th / v, k_rad, k_ang, H1, H2, normA2, ring2, grad2, n)


def metric_psipsi(profile: RadialProfile, fr: GeometryFrame | None = None) -> np.ndarray:
    """Meridian component of the induced metric, ``warp^2 v^2``."""
    if fr is None:
        fr = frame(profile)
    return fr.warp ** 2 * fr.v2


def volume_density(profile: RadialProfile, fr: GeometryFrame) -> np.ndarray:
    """``sqrt(det g)`` divided by the round (n-1)-sphere density."""
    return fr.warp ** profile.n * fr.v * np.sin(profile.psi) ** (profile.n - 1)


@lru_cache(maxsize=64)
def _sine_weights(N: int, k: int) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(12)
    t = 0.5 * (x + 1.0)
    h = np.pi / N
    left = np.arange(N)[:, None] * h + h * t[None, :]
    s = np.sin(left) ** k * (0.5 * h * w)[None, :]
    out = np.zeros(N + 1)
    out[:-1] += (s * (1.0 - t)[None, :]).sum(axis=1)
    out[1:] += (s * t[None, :]).sum(axis=1)
    out.setflags(write=False)
    return out


def sine_weights(N: int, k: int) -> np.ndarray:
    """Product-trapezoid weights for ``int_0^pi f sin^k`` on the nodes ``i pi / N``.

    ``f`` is taken piecewise linear between nodes and integrated exactly
    against ``sin^k``, so the rule is second order in general and exact
    whenever ``f`` is constant.
    """
    return _sine_weights(int(N), int(k))


def _cell_sine_power(psi: np.ndarray, h: float, k: int) -> np.ndarray:
    """Mean of ``sin^k`` over ``[psi - h/2, psi + h/2]``.

    Dividing the flux difference by this instead of the nodal ``sin^k``
    keeps the stencil consistent next to the poles when ``k > 1``.
    """
    x, w = np.polynomial.legendre.leggauss(8)
    pts = psi[:, None] + 0.5 * h * x[None, :]
    return 0.5 * (np.sin(pts) ** k * w[None, :]).sum(axis=1)


def laplace_beltrami(profile: RadialProfile, f, eps_v: float = EPS_V) -> np.ndarray:
    """Laplace-Beltrami operator of the induced metric on an axisymmetric field.

    Conservative flux form with the flux coefficient
    ``warp^(n-2) sin^(n-1) / v`` sampled at cell midpoints.  At the poles the
    flux form degenerates and the analytic limit ``n f'' / warp^2`` is used.
    """
    f = np.asarray(f, dtype=float)
    n, h = profile.n, profile.dpsi
    rho, psi = profile.rho, profile.psi
    model = profile.model
    rho_m = 0.5 * (rho[1:] + rho[:-1])
    drho_m = (rho[1:] - rho[:-1]) / h
    th_m = model.warp(rho_m)
    v2_m = 1.0 - (drho_m / th_m) ** 2
    th = model.warp(rho)
    d1 = derivatives(profile)[0]
    v2 = 1.0 - (d1 / th) ** 2
    if min(v2_m.min(), v2.min()) <= eps_v:
        raise SpacelikeBreached("v^2 below floor in Laplace-Beltrami stencil")
    psi_m = 0.5 * (psi[1:] + psi[:-1])
    coef = th_m ** (n - 2) * np.sin(psi_m) ** (n - 1) / np.sqrt(v2_m)
    flux = coef * (f[1:] - f[:-1]) / h
    out = np.empty_like(f)
    weight = th[1:-1] ** n * np.sqrt(v2[1:-1]) * _cell_sine_power(psi[1:-1], h, n - 1)
    out[1:-1] = (flux[1:] - flux[:-1]) / h / weight
    out[0] = n * 2.0 * (f[1] - f[0]) / (h * h) / th[0] ** 2
    out[-1] = n * 2.0 * (f[-2] - f[-1]) / (h * h) / th[-1] ** 2
    return out


def gradient_pairing(profile: RadialProfile, fr: GeometryFrame, a, b) -> np.ndarray:
    """``g(grad a, grad b)`` for axisymmetric fields with centred differences."""
    da = centred_derivatives(np.asarray(a, dtype=float), profile.dpsi)[0]
    db = centred_derivatives(np.asarray(b, dtype=float), profile.dpsi)[0]
    return da * db / (fr.warp ** 2 * fr.v2)


def write_profile_csv(profile: RadialProfile, path) -> None:
    path = Path(path)
    header = f"n={profile.n} N={profile.N}\npsi,rho"
    data = np.column_stack([profile.psi, profile.rho])
    np.savetxt(path, data, delimiter=",", header=header, comments="# ", fmt="%.17g")


def read_profile_csv(path, model: WarpModel | None = None) -> RadialProfile:
    """Read a two-column ``psi,rho`` file; ``n`` comes from the header unless ``model`` is given."""
    path = Path(path)
    n = N = None
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            for tok in line[1:].split():
                if tok.startswith("n="):
                    n = int(tok[2:])
                elif tok.startswith("N="):
                    N = int(tok[2:])
    data = _load_rows(path)
    if model is None:
        if n is None:
            raise DomainError(f"{path}: header does not declare n")
        model = de_sitter(n)
    psi, rho = data[:, 0], data[:, 1]
    if N is not None and rho.size != N + 1:
        raise DomainError(f"{path}: header says N={N} but found {rho.size - 1} intervals")
    expected = np.linspace(0.0, np.pi, rho.size)
    if not np.allclose(psi, expected, atol=1e-9):
        raise DomainError(f"{path}: psi column is not the uniform grid on [0, pi]")
    return RadialProfile(model, rho)


def _load_rows(path: Path) -> np.ndarray:
    rows = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("psi"):
                continue
            a, b = line.split(",")[:2]
            rows.append((float(a), float(b)))
    return np.array(rows, dtype=float).reshape(-1, 2)
