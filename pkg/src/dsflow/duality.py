"""Minkowski embedding and the Gauss-map duality with hyperbolic space.

De Sitter space is the hyperquadric ``<y, y> = 1`` in Minkowski space with
``<a, b> = -a0 b0 + sum a_k b_k``.  The future unit normal of a strictly
convex spacelike hypersurface lies on the hyperboloid ``<x, x> = -1``, and the
map ``y -> nu`` is a duality: the image is a starshaped hypersurface of
hyperbolic space whose principal curvatures are the reciprocals of the
original ones, and whose unit normal is ``y`` again.

An axisymmetric profile only needs the span of ``e0, e1, e2``; the remaining
``n - 1`` ambient components are kept (as zeros) so the points have the
dimension-true length ``n + 2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .axigraph import GeometryFrame, RadialProfile, centred_derivatives, metric_psipsi, pole_second
from .axigraph import frame as compute_frame
from .errors import DomainError, NotConvex
from .spaceform import hyperbolic

KAPPA_FLOOR = 1e-6


def mink(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise Minkowski pairing of ``(..., n+2)`` arrays."""
    return -a[..., 0] * b[..., 0] + np.sum(a[..., 1:] * b[..., 1:], axis=-1)


@dataclass(frozen=True)
class AmbientCurve:
    """Meridian of an axisymmetric hypersurface of de Sitter space, with its future unit normal."""

    psi: np.ndarray
    y: np.ndarray
    nu: np.ndarray

    @property
    def dim(self) -> int:
        return self.y.shape[1]


def _lift(psi: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray, dim: int) -> np.ndarray:
    out = np.zeros((psi.size, dim))
    out[:, 0], out[:, 1], out[:, 2] = a, b, c
    return out


def embed(profile: RadialProfile, fr: GeometryFrame | None = None) -> AmbientCurve:
    """Points ``(sinh rho, cosh rho p)`` and the future unit normal.

    The normal is ``a d_r + b d_psi`` with ``b = a rho' / warp^2`` from
    orthogonality to the tangent ``rho' d_r + d_psi`` and ``a = 1/v`` from
    ``<nu, nu> = -1``, ``a > 0``.
    """
    if fr is None:
        fr = compute_frame(profile)
    psi, rho = profile.psi, profile.rho
    dim = profile.n + 2
    ch, sh = np.cosh(rho), np.sinh(rho)
    c, s = np.cos(psi), np.sin(psi)
    y = _lift(psi, sh, ch * c, ch * s, dim)
    a = 1.0 / fr.v
    b = a * fr.rho_prime / ch ** 2
    # d_r -> (cosh, sinh p), d_psi -> cosh p'
    nu = _lift(psi, a * ch, a * sh * c - b * ch * s, a * sh * s + b * ch * c, dim)
    return AmbientCurve(psi, y, nu)


def psi_derivative(points: np.ndarray, h: float) -> np.ndarray:
    """Centred ``d/dpsi`` of an axisymmetric ambient curve.

    Ghost points reflect across the axis, which flips the ``e2`` component.
    """
    flip = np.ones(points.shape[1])
    flip[2] = -1.0
    g = np.vstack([points[1] * flip, points, points[-2] * flip])
    return (g[2:] - g[:-2]) / (2 * h)


def psi_second_derivative(points: np.ndarray, h: float) -> np.ndarray:
    flip = np.ones(points.shape[1])
    flip[2] = -1.0
    g = np.vstack([points[1] * flip, points, points[-2] * flip])
    return (g[2:] - 2 * g[1:-1] + g[:-2]) / (h * h)


def ambient_curvatures(profile: RadialProfile) -> tuple[np.ndarray, np.ndarray]:
    """Principal curvatures from finite differences of the embedded meridian alone.

    Uses only the points ``y``: the normal spans the Minkowski complement of
    ``y`` and its centred tangent, the meridian curvature is
    ``-<y'', nu> / <y', y'>`` and the angular one is ``nu2 / y2`` (``nan`` on
    the axis).  Serves as a cross-check of ``axigraph.frame``.
    """
    psi, rho = profile.psi, profile.rho
    h = profile.dpsi
    ch = np.cosh(rho)
    y = _lift(psi, np.sinh(rho), ch * np.cos(psi), ch * np.sin(psi), profile.n + 2)
    dy = psi_derivative(y, h)
    nu = lorentz_cross(y, dy)
    norm2 = -mink(nu, nu)
    if not np.all(norm2 > 0):
        raise DomainError("embedded meridian is not spacelike")
    nu = nu / np.sqrt(norm2)[:, None] * np.sign(nu[:, 0])[:, None]
    k_rad = -mink(psi_second_derivative(y, h), nu) / mink(dy, dy)
    k_ang = np.full(k_rad.shape, np.nan)
    k_ang[1:-1] = nu[1:-1, 2] / y[1:-1, 2]
    return k_rad, k_ang


def lorentz_cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise vector Minkowski-orthogonal to ``a`` and ``b`` in the ``e0, e1, e2`` span."""
    w = np.cross(a[:, :3], b[:, :3])
    w[:, 0] = -w[:, 0]
    out = np.zeros_like(a)
    out[:, :3] = w
    return out


def _unit_spacelike(w: np.ndarray, ref: np.ndarray) -> np.ndarray:
    norm2 = mink(w, w)
    if not np.all(norm2 > 0):
        raise DomainError("dual normal is not spacelike")
    w = w / np.sqrt(norm2)[:, None]
    return w * np.sign(mink(w, ref))[:, None]


@dataclass(frozen=True)
class DualSamples:
    """The dual hypersurface in hyperbolic space, sampled at the original nodes."""

    x: np.ndarray          # points on the hyperboloid, x = nu
    normal: np.ndarray     # unit normal from the Weingarten tangent
    r: np.ndarray          # hyperbolic radius arccosh(x0)
    psi: np.ndarray        # polar angle of x
    metric: np.ndarray     # <d_psi x, d_psi x> by finite differences
    support: np.ndarray    # <warp~ d_r~, normal> = normal0
    kappa: np.ndarray      # reciprocals of the principal curvatures, (N+1, n)


def require_convex(fr: GeometryFrame, floor: float = KAPPA_FLOOR) -> None:
    k = fr.principal_curvatures
    if not k.min() > floor:
        i = int(np.unravel_index(np.argmin(k), k.shape)[0])
        raise NotConvex(f"principal curvature {k.min():.3e} <= {floor:g} at node {i}")


def dualize(curve: AmbientCurve, fr: GeometryFrame, floor: float = KAPPA_FLOOR) -> DualSamples:
    """Gauss-map image of a strictly convex profile.

    Along a meridian ``d_psi nu`` is parallel to the tangent of ``y``
    (Weingarten), so the dual normal is the unit vector orthogonal to ``nu``
    and that tangent; it coincides with ``y``.
    """
    require_convex(fr, floor)
    x = curve.nu
    h = curve.psi[1] - curve.psi[0]
    if not np.all(x[:, 0] >= 1.0 - 1e-12):
        raise DomainError("dual points leave the upper hyperboloid")
    profile_tangent = _tangent_from_curve(curve, fr)
    normal = _unit_spacelike(lorentz_cross(x, profile_tangent), curve.y)
    r = np.arccosh(np.maximum(x[:, 0], 1.0))
    psi = np.arctan2(x[:, 2], x[:, 1])
    dx = psi_derivative(x, h)
    kappa = 1.0 / fr.principal_curvatures
    return DualSamples(x, normal, r, psi, mink(dx, dx), normal[:, 0], kappa)


def _tangent_from_curve(curve: AmbientCurve, fr: GeometryFrame) -> np.ndarray:
    """Pushforward of ``rho' d_r + d_psi`` with the discrete ``rho'``."""
    rho = np.arcsinh(curve.y[:, 0])
    ch, sh = np.cosh(rho), np.sinh(rho)
    c, s = np.cos(curve.psi), np.sin(curve.psi)
    d = fr.rho_prime
    return _lift(curve.psi, d * ch, d * sh * c - ch * s, d * sh * s + ch * c, curve.dim)


def fd_dual_normal(dual: DualSamples, ref: np.ndarray) -> np.ndarray:
    """Dual normal from finite-difference tangents of the dual curve alone."""
    h = _spacing(dual)
    return _unit_spacelike(lorentz_cross(dual.x, psi_derivative(dual.x, h)), ref)


def _spacing(dual: DualSamples) -> float:
    return np.pi / (dual.x.shape[0] - 1)


def fd_dual_curvatures(dual: DualSamples, normal: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Meridian and angular principal curvatures of the dual from its ambient curve.

    The meridian value is ``-<x'', N> / <x', x'>``; the angular one is the
    ratio of the ``e2`` components of normal and point, valid off the axis
    (``nan`` at the poles).
    """
    h = _spacing(dual)
    N = dual.normal if normal is None else normal
    dx = psi_derivative(dual.x, h)
    ddx = psi_second_derivative(dual.x, h)
    k_rad = -mink(ddx, N) / mink(dx, dx)
    k_ang = np.full(k_rad.shape, np.nan)
    k_ang[1:-1] = N[1:-1, 2] / dual.x[1:-1, 2]
    return k_rad, k_ang


def hyperbolic_graph_curvatures(psi: np.ndarray, r: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Principal curvatures of an axisymmetric radial graph ``r(psi)`` in hyperbolic space.

    Uses the warp ``sinh`` and ``v~^2 = 1 + r'^2 / sinh^2 r`` on a uniform
    grid with even reflection at the poles; orientation makes geodesic
    spheres convex with curvature ``coth r``.
    """
    model = hyperbolic(n)
    h = psi[1] - psi[0]
    d1, d2 = centred_derivatives(r, h)
    d2[0] = pole_second(r[0], r[1], r[2], h, n)
    d2[-1] = pole_second(r[-1], r[-2], r[-3], h, n)
    th, dth = model.warp(r), model.warp_derivative(r)
    v2 = 1.0 + (d1 / th) ** 2
    v = np.sqrt(v2)
    cot = np.empty_like(d1)
    cot[1:-1] = d1[1:-1] / np.tan(psi[1:-1])
    cot[0], cot[-1] = d2[0], d2[-1]
    k_rad = (th * th * dth + 2.0 * dth * d1 * d1 - th * d2) / (th ** 3 * v2 * v)
    k_ang = (dth - cot / th) / (th * v)
    return k_rad, k_ang


def _even_spline(psi: np.ndarray, values: np.ndarray) -> CubicSpline:
    """Cubic spline through samples on ``[0, pi]`` reflected evenly across both poles."""
    if not np.all(np.diff(psi) > 0):
        raise DomainError("dual polar angle is not monotone along the meridian")
    ext_psi = np.concatenate([-psi[:0:-1], psi, 2 * np.pi - psi[-2::-1]])
    ext_val = np.concatenate([values[:0:-1], values, values[-2::-1]])
    return CubicSpline(ext_psi, ext_val)


def resample_radius(dual: DualSamples, M: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``r~`` on a uniform grid in its own polar angle.

    The dual nodes are non-uniform in ``psi~``, so the samples are fitted by
    an evenly reflected cubic spline and evaluated on the uniform grid.
    """
    M = dual.r.size - 1 if M is None else M
    grid = np.linspace(0.0, np.pi, M + 1)
    return grid, _even_spline(dual.psi, dual.r)(grid)


def graph_reciprocity(dual: DualSamples, n: int) -> tuple[float, float]:
    """Max deviation of the dual graph curvatures from ``1 / kappa``.

    The dual radius is resampled onto a uniform grid in its own polar angle
    and differentiated with the hyperbolic graph formulas; the reciprocal
    primal curvatures are carried to the same angles by spline.
    """
    grid, r = resample_radius(dual)
    k_rad, k_ang = hyperbolic_graph_curvatures(grid, r, n)
    ref_rad = _even_spline(dual.psi, dual.kappa[:, 0])(grid)
    ref_ang = _even_spline(dual.psi, dual.kappa[:, -1])(grid)
    return float(np.abs(k_rad - ref_rad).max()), float(np.abs(k_ang - ref_ang).max())


def elementary_symmetric(k: np.ndarray) -> np.ndarray:
    """``sigma_0 .. sigma_m`` of each row of a ``(..., m)`` array."""
    k = np.atleast_2d(k)
    out = np.zeros((k.shape[0], k.shape[1] + 1))
    out[:, 0] = 1.0
    for j in range(k.shape[1]):
        out[:, 1:j + 2] = out[:, 1:j + 2] + k[:, j:j + 1] * out[:, 0:j + 1]
    return out


def dual_speed_identity(fr: GeometryFrame, dual: DualSamples) -> np.ndarray:
    """Per-node difference between the dual and primal forms of the flow speed.

    ``(warp~'(r~) - n u~ sigma_n(k~) / sigma_{n-1}(k~)) - (u - warp'(rho) / H1)``
    with ``k~ = 1 / k``.
    """
    require_convex(fr)
    n = fr.n
    s = elementary_symmetric(dual.kappa)
    dual_speed = np.cosh(dual.r) - n * dual.support * s[:, n] / s[:, n - 1]
    return dual_speed - (fr.u - fr.warp_prime / fr.H1)


def duality_report(profile: RadialProfile) -> dict[str, float]:
    """Max-norm violation of every duality identity on one profile."""
    fr = compute_frame(profile)
    curve = embed(profile, fr)
    dual = dualize(curve, fr)
    k = fr.principal_curvatures
    k_rad, k_ang = fd_dual_curvatures(dual)
    inner = slice(1, -1)
    g_rad, g_ang = graph_reciprocity(dual, profile.n)
    return {
        "dual_on_hyperboloid": float(np.abs(mink(dual.x, dual.x) + 1.0).max()),
        "dual_orthogonal_to_point": float(np.abs(mink(dual.x, curve.y)).max()),
        "u_equals_dual_warp_prime": float(np.abs(fr.u - np.cosh(dual.r)).max()),
        "dual_u_equals_warp_prime": float(np.abs(dual.support - fr.warp_prime).max()),
        "dual_metric": float(np.abs(dual.metric - fr.kappa_rad ** 2 * metric_psipsi(profile, fr)).max()),
        "involution": float(np.abs(fd_dual_normal(dual, curve.y) - curve.y).max()),
        "reciprocal_rad": float(np.abs(k_rad * k[:, 0] - 1.0).max()),
        "reciprocal_ang": float(np.abs(k_ang[inner] * k[inner, 1] - 1.0).max()),
        "graph_reciprocal_rad": g_rad,
        "graph_reciprocal_ang": g_ang,
        "speed_identity": float(np.abs(dual_speed_identity(fr, dual)).max()),
    }
