"""Warped-product models of de Sitter and hyperbolic space, plus slice analytics.

Both spaces are written as ``R_+ x S^n`` with metric ``-+ dr^2 + warp(r)^2 sigma``.
Coordinate slices ``{r = const}`` are round, totally umbilic spheres; their
area, enclosed volume and total mean curvature have closed forms and serve as
fixed points of the flow and as oracles for the surface integrators.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline
from scipy.special import gammaln

from .errors import DomainError

PHI1_BRACKET = (1e-8, 50.0)


class Kind(enum.Enum):
    DE_SITTER = "de_sitter"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class WarpModel:
    """Ambient space-form data.

    For de Sitter the warp is ``cosh`` (with derivative ``sinh``), for
    hyperbolic space the roles are swapped.  Both satisfy ``warp'' = warp``.
    """

    n: int
    kind: Kind = Kind.DE_SITTER

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"dimension n must be an integer >= 2, got {self.n!r}")

    def warp(self, r):
        return np.cosh(r) if self.kind is Kind.DE_SITTER else np.sinh(r)

    def warp_derivative(self, r):
        return np.sinh(r) if self.kind is Kind.DE_SITTER else np.cosh(r)

    def warp_second(self, r):
        return self.warp(r)

    @property
    def omega(self) -> float:
        """Measure of the unit n-sphere."""
        return sphere_measure(self.n)

    @property
    def omega_lower(self) -> float:
        """Measure of the unit (n-1)-sphere, the angular factor for axisymmetric integrals."""
        return sphere_measure(self.n - 1)


def de_sitter(n: int) -> WarpModel:
    return WarpModel(n, Kind.DE_SITTER)


def hyperbolic(n: int) -> WarpModel:
    return WarpModel(n, Kind.HYPERBOLIC)


def sphere_measure(k: int) -> float:
    """Measure of the unit k-sphere, ``2 pi^((k+1)/2) / Gamma((k+1)/2)``."""
    a = 0.5 * (k + 1)
    return 2.0 * math.exp(a * math.log(math.pi) - gammaln(a))


@dataclass(frozen=True)
class SliceData:
    radius: float
    area: float
    volume: float
    mean_curvature: float
    total_H1: float
    W2: float


def _require_de_sitter(model: WarpModel):
    if model.kind is not Kind.DE_SITTER:
        raise DomainError("slice analytics are defined for the de Sitter model only")


def _require_positive(r):
    if not np.all(np.asarray(r) > 0):
        raise DomainError(f"radius must be positive, got {r!r}")


def warp_power_integral(model: WarpModel, r: float) -> float:
    """``int_0^r warp(s)^n ds`` by adaptive Gauss-Kronrod quadrature."""
    n = model.n
    f: Callable[[float], float] = lambda s: float(model.warp(s)) ** n
    val, _ = integrate.quad(f, 0.0, float(r), epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def slice_data(model: WarpModel, r: float) -> SliceData:
    _require_de_sitter(model)
    _require_positive(r)
    r = float(r)
    w = model.omega
    th, dth = math.cosh(r), math.sinh(r)
    area = w * th ** model.n
    volume = w * warp_power_integral(model, r)
    H1 = dth / th
    total = H1 * area
    return SliceData(r, area, volume, H1, total, total - volume)


def phi1(model: WarpModel, r):
    """Area of the slice at height ``r``."""
    _require_de_sitter(model)
    _require_positive(r)
    return model.omega * np.cosh(r) ** model.n


def phi2(model: WarpModel, r: float) -> float:
    """W2 of the slice at height ``r``."""
    _require_de_sitter(model)
    _require_positive(r)
    r = float(r)
    w, n = model.omega, model.n
    return w * math.sinh(r) * math.cosh(r) ** (n - 1) - w * warp_power_integral(model, r)


def phi1_inverse(model: WarpModel, a: float) -> float:
    """Height of the slice with area ``a``; requires ``a > omega_n``."""
    _require_de_sitter(model)
    w, n = model.omega, model.n
    if not a > w:
        raise DomainError(f"area {a!r} does not exceed the equator area {w!r}")
    lo, hi = PHI1_BRACKET
    g = lambda r: (w * math.cosh(r) ** n - a) / a
    if g(lo) > 0:
        return lo
    if g(hi) < 0:
        raise DomainError(f"area {a!r} outside the bracketed slice range")
    return optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def phi_of_area(model: WarpModel, a: float) -> float:
    """The equality function of the Minkowski inequality: ``phi2(phi1^-1(a))``."""
    return phi2(model, phi1_inverse(model, a))


class VolumeTable:
    """Cached ``r -> int_0^r warp^n`` over a growing radius window.

    Node values come from one adaptive quadrature at the left end plus
    five-point Gauss-Legendre panels between consecutive nodes; node slopes
    are the exact integrand, so the Hermite interpolant is monotone and
    fourth-order accurate.
    """

    def __init__(self, model: WarpModel, spacing: float = 1e-3, margin: float = 0.05):
        self.model = model
        self.spacing = spacing
        self.margin = margin
        self._lo = self._hi = None
        self._spline = None

    def _build(self, lo: float, hi: float):
        lo = max(lo, 0.0)
        m = max(int(math.ceil((hi - lo) / self.spacing)), 4)
        nodes = np.linspace(lo, hi, m + 1)
        x, wts = np.polynomial.legendre.leggauss(5)
        a, b = nodes[:-1], nodes[1:]
        half = 0.5 * (b - a)
        pts = 0.5 * (a + b)[:, None] + half[:, None] * x[None, :]
        panels = (half[:, None] * wts[None, :] * self.model.warp(pts) ** self.model.n).sum(axis=1)
        base = warp_power_integral(self.model, lo) if lo > 0 else 0.0
        values = base + np.concatenate(([0.0], np.cumsum(panels)))
        slopes = self.model.warp(nodes) ** self.model.n
        self._spline = CubicHermiteSpline(nodes, values, slopes)
        self._lo, self._hi = lo, hi

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        rmin, rmax = float(r.min()), float(r.max())
        if self._spline is None or rmin < self._lo or rmax > self._hi:
            lo, hi = rmin - self.margin, rmax + self.margin
            if self._spline is not None:
                lo, hi = min(lo, self._lo), max(hi, self._hi)
            self._build(lo, hi)
        return self._spline(r)
