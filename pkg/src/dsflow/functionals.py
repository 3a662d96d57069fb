"""Global functionals of axisymmetric graphs and the Minkowski-type identities."""
from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from .axigraph import GeometryFrame, RadialProfile, frame as compute_frame, sine_weights
from .spaceform import VolumeTable, WarpModel, phi_of_area

RECORD_COLUMNS = (
    "t", "min_rho", "max_rho", "area", "volume", "total_H1", "W2", "dW2_predicted",
    "min_H1", "max_H1", "max_ring2", "min_v2", "mink1_residual", "mink2_residual",
)


@dataclass(frozen=True)
class FunctionalRecord:
    t: float
    min_rho: float
    max_rho: float
    area: float
    volume: float
    total_H1: float
    W2: float
    dW2_predicted: float
    min_H1: float
    max_H1: float
    max_ring2: float
    min_v2: float
    mink1_residual: float
    mink2_residual: float

    def as_row(self) -> tuple:
        return astuple(self)


assert tuple(f.name for f in fields(FunctionalRecord)) == RECORD_COLUMNS


def _sphere_quadrature(profile: RadialProfile, y: np.ndarray) -> float:
    """``omega_{n-1} int_0^pi y sin^(n-1)`` with the product-trapezoid weights."""
    w = sine_weights(profile.rho.size - 1, profile.n - 1)
    return profile.model.omega_lower * float(w @ y)


def surface_integral(profile: RadialProfile, fr: GeometryFrame, integrand) -> float:
    """``int_Sigma f``, trapezoidal in the polar angle with the sine weight exact."""
    f = np.broadcast_to(np.asarray(integrand, dtype=float), profile.rho.shape)
    return _sphere_quadrature(profile, f * fr.warp ** profile.n * fr.v)


_TABLES: dict[WarpModel, VolumeTable] = {}


def volume_table(model: WarpModel) -> VolumeTable:
    table = _TABLES.get(model)
    if table is None:
        table = _TABLES[model] = VolumeTable(model)
    return table


def enclosed_volume(profile: RadialProfile) -> float:
    """Volume between the equator slice and the graph."""
    return _sphere_quadrature(profile, volume_table(profile.model)(profile.rho))


def _relative_gap(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def minkowski_residuals(profile: RadialProfile, fr: GeometryFrame) -> tuple[float, float]:
    """Relative defects of ``int warp' H_{k-1} = int u H_k`` for ``k = 1, 2``."""
    dth = fr.warp_prime
    m1 = _relative_gap(surface_integral(profile, fr, dth), surface_integral(profile, fr, fr.u * fr.H1))
    m2 = _relative_gap(surface_integral(profile, fr, dth * fr.H1), surface_integral(profile, fr, fr.u * fr.H2))
    return m1, m2


def w2_rate(profile: RadialProfile, fr: GeometryFrame) -> float:
    """Predicted ``dW2/dt`` along the flow, ``(n-1) int warp' (H1 - H2/H1)``."""
    n = profile.n
    return (n - 1) * surface_integral(profile, fr, fr.warp_prime * (fr.H1 - fr.H2 / fr.H1))


def record(profile: RadialProfile, fr: GeometryFrame | None = None, t: float = 0.0) -> FunctionalRecord:
    if fr is None:
        fr = compute_frame(profile)
    area = surface_integral(profile, fr, 1.0)
    volume = enclosed_volume(profile)
    total = surface_integral(profile, fr, fr.H1)
    m1, m2 = minkowski_residuals(profile, fr)
    return FunctionalRecord(
        t=float(t),
        min_rho=float(profile.rho.min()),
        max_rho=float(profile.rho.max()),
        area=area,
        volume=volume,
        total_H1=total,
        W2=total - volume,
        dW2_predicted=w2_rate(profile, fr),
        min_H1=fr.min_H1,
        max_H1=fr.max_H1,
        max_ring2=fr.max_ring2,
        min_v2=fr.min_v2,
        mink1_residual=m1,
        mink2_residual=m2,
    )


def minkowski_gap(rec: FunctionalRecord, model: WarpModel) -> float:
    """``phi(area) - W2``; non-negative for mean-convex spacelike graphs, zero on slices."""
    return phi_of_area(model, rec.area) - rec.W2
