"""Locally constrained inverse mean curvature flow in graph gauge.

The hypersurface moves with normal speed ``f = u - warp'(rho) / H1``.  At a
fixed polar angle the height then changes at the rate ``f v`` (graph gauge);
along the normal trajectories it changes at ``f / v`` (Lagrangian gauge).  The
solver integrates the graph rate on the fixed grid with classical RK4.
"""
from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels, axigraph
from .axigraph import GeometryFrame, RadialProfile, centred_derivatives, gradient_pairing, laplace_beltrami
from .errors import DomainError, MeanConvexityLost, SpacelikeBreached, StepUnderflow
from .functionals import FunctionalRecord, record, surface_integral
from .spaceform import Kind, phi1

log = logging.getLogger(__name__)

MIN_DT = 1e-12


@dataclass(frozen=True)
class FlowConfig:
    cfl: float = 0.4
    t_max: float = 50.0
    osc_tol: float = 1e-7
    umbilic_tol: float = 1e-9
    eps_v: float = 1e-6
    eps_H: float = 1e-8
    record_every: int = 50

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise DomainError("cfl out of (0,1]")
        if not self.t_max > 0:
            raise DomainError("t_max must be positive")
        for name in ("osc_tol", "umbilic_tol", "eps_v", "eps_H"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise DomainError("record_every must be a positive integer")


class Status(enum.Enum):
    CONVERGED = "Converged"
    MAX_TIME = "MaxTimeReached"
    SPACELIKE_BREACHED = "SpacelikeBreached"
    MEAN_CONVEXITY_LOST = "MeanConvexityLost"
    STEP_UNDERFLOW = "StepUnderflow"

    @property
    def is_guard_trip(self) -> bool:
        return self not in (Status.CONVERGED, Status.MAX_TIME)


_GUARD_STATUS = {
    SpacelikeBreached: Status.SPACELIKE_BREACHED,
    MeanConvexityLost: Status.MEAN_CONVEXITY_LOST,
    StepUnderflow: Status.STEP_UNDERFLOW,
}


@dataclass
class RateSample:
    """Integral rates predicted from the evolution formulas at one record."""

    t: float
    volume_rate: float
    area_rate: float
    total_H1_rate: float
    volume_scale: float
    area_scale: float
    total_H1_scale: float


@dataclass
class FlowTrace:
    records: list[FunctionalRecord]
    status: Status
    r_infinity: float | None = None
    wall_time: float = 0.0
    steps: int = 0
    final_profile: RadialProfile | None = None
    rates: list[RateSample] = field(default_factory=list)
    gauge_gap: float = 0.0
    message: str = ""

    @property
    def area0(self) -> float:
        return self.records[0].area

    @property
    def phi1_gap(self) -> float | None:
        if self.r_infinity is None:
            return None
        model = self.final_profile.model
        return abs(float(phi1(model, self.r_infinity)) - self.area0) / self.area0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def speed(fr: GeometryFrame, profile: RadialProfile, eps_H: float = 1e-8) -> np.ndarray:
    """Normal speed ``u - warp'/H1``."""
    if not fr.min_H1 > eps_H:
        i = int(np.argmin(fr.H1))
        raise MeanConvexityLost(f"H1 = {fr.H1[i]:.3e} <= {eps_H:g} at node {i}")
    return fr.u - fr.warp_prime / fr.H1


def graph_rhs(profile: RadialProfile, eps_v: float = 1e-6, eps_H: float = 1e-8) -> np.ndarray:
    """``d rho / dt`` at fixed polar angle, ``f v = warp - warp' v / H1``."""
    fr = axigraph.frame(profile, eps_v)
    return speed(fr, profile, eps_H) * fr.v


def lagrangian_rate(profile: RadialProfile, fr: GeometryFrame, eps_H: float = 1e-8) -> np.ndarray:
    return speed(fr, profile, eps_H) / fr.v


class _Integrator:
    """Compiled RK4 driver for the de Sitter graph rate."""

    def __init__(self, profile: RadialProfile, eps_v: float, eps_H: float):
        if profile.model.kind is not Kind.DE_SITTER:
            raise DomainError("the flow is defined in de Sitter space only")
        self.n = profile.n
        self.h = profile.dpsi
        psi = profile.psi
        self.inv_tan = np.zeros_like(psi)
        self.inv_tan[1:-1] = 1.0 / np.tan(psi[1:-1])
        self.eps_v, self.eps_H = eps_v, eps_H

    def _raise(self, code: int, node: int, rho: np.ndarray):
        if code == _kernels.SPACELIKE:
            raise SpacelikeBreached(f"v^2 <= {self.eps_v:g} at node {node}")
        raise MeanConvexityLost(f"H1 <= {self.eps_H:g} at node {node}")

    def rate(self, rho: np.ndarray) -> tuple[np.ndarray, float, float]:
        """Graph rate, largest principal diffusivity and largest ``|A0|^2``."""
        out = np.empty_like(rho)
        code, node, dmax, ring2 = _kernels.graph_rate(rho, out, self.h, self.n, self.inv_tan,
                                                      self.eps_v, self.eps_H)
        if code != _kernels.OK:
            self._raise(code, node, rho)
        return out, dmax, ring2

    def rk4(self, rho: np.ndarray, k1: np.ndarray, dt: float) -> np.ndarray:
        out = np.empty_like(rho)
        code, node = _kernels.rk4_step(rho, k1, dt, out, self.h, self.n, self.inv_tan,
                                       self.eps_v, self.eps_H)
        if code != _kernels.OK:
            self._raise(code, node, rho)
        return out


def pole_factor(n: int) -> float:
    """Step reduction for the axis nodes.

    The interior bound ignores the pole stencil, whose stiffest mode grows
    roughly like ``n + 5``; this factor keeps it below the interior one.
    """
    return min(1.0, 6.0 / (n + 5))


def _dt(profile: RadialProfile, cfl: float, dmax: float) -> float:
    return cfl * pole_factor(profile.n) * profile.dpsi ** 2 / dmax


def stable_dt(profile: RadialProfile, fr: GeometryFrame, cfl: float) -> float:
    """Explicit step bound from the principal diffusivity ``D = warp' / (n H1^2 warp^2 v^2)``."""
    D = fr.warp_prime / (profile.n * fr.H1 ** 2 * fr.warp ** 2 * fr.v2)
    return _dt(profile, cfl, float(D.max()))


def step(profile: RadialProfile, config: FlowConfig, dt: float | None = None) -> tuple[RadialProfile, float]:
    """One RK4 step of the graph rate; ``dt`` defaults to the stability bound."""
    integ = _Integrator(profile, config.eps_v, config.eps_H)
    k1, dmax, _ = integ.rate(profile.rho)
    if dt is None:
        dt = _dt(profile, config.cfl, dmax)
    if dt < MIN_DT:
        raise StepUnderflow(f"dt = {dt:.3e} < {MIN_DT:g}")
    return profile.with_rho(integ.rk4(profile.rho, k1, dt)), dt


def advance(profile: RadialProfile, config: FlowConfig, t_end: float) -> RadialProfile:
    """Integrate to ``t_end`` with stability-bound steps, ignoring the convergence test."""
    integ = _Integrator(profile, config.eps_v, config.eps_H)
    rho, t = profile.rho, 0.0
    while t < t_end:
        k1, dmax, _ = integ.rate(rho)
        dt = min(_dt(profile, config.cfl, dmax), t_end - t)
        rho = integ.rk4(rho, k1, dt)
        t += dt
    return profile.with_rho(rho)


def integral_rates(profile: RadialProfile, fr: GeometryFrame, f: np.ndarray, t: float) -> RateSample:
    """Rates of volume, area and total mean curvature from the speed.

    Each rate comes with the integral of the absolute value of its
    integrand, the natural scale for a rate that changes sign.
    """
    n = profile.n
    si = lambda g: surface_integral(profile, fr, g)
    vol_rate = si(f)
    area_rate = n * si(f * fr.H1)
    h1_rate = (n - 1) * si(f * fr.H2) + vol_rate
    abs_f = si(np.abs(f))
    return RateSample(t, vol_rate, area_rate, h1_rate,
                      volume_scale=abs_f,
                      area_scale=n * si(np.abs(f * fr.H1)),
                      total_H1_scale=(n - 1) * si(np.abs(f * fr.H2)) + abs_f)


def _is_converged(rho: np.ndarray, ring2max: float, config: FlowConfig) -> bool:
    return float(rho.max() - rho.min()) < config.osc_tol and ring2max < config.umbilic_tol


def run(profile0: RadialProfile, config: FlowConfig,
        sink: Callable[[FunctionalRecord], None] | None = None) -> FlowTrace:
    """Integrate until convergence to a slice, ``t_max``, or a guard trip."""
    start = time.perf_counter()
    profile = profile0
    integ = _Integrator(profile0, config.eps_v, config.eps_H)
    records: list[FunctionalRecord] = []
    rates: list[RateSample] = []
    trace = FlowTrace(records, Status.MAX_TIME, rates=rates)
    t, steps = 0.0, 0

    def take_record():
        fr = axigraph.frame(profile, config.eps_v)
        f = speed(fr, profile, config.eps_H)
        rec = record(profile, fr, t)
        records.append(rec)
        rates.append(integral_rates(profile, fr, f, t))
        imax = int(np.argmax(profile.rho))
        trace.gauge_gap = max(trace.gauge_gap, float(abs(f[imax] * fr.v[imax] - f[imax] / fr.v[imax])))
        if sink is not None:
            sink(rec)

    try:
        take_record()
        rho = profile.rho
        k1, dmax, ring2max = integ.rate(rho)
        status = None
        if _is_converged(rho, ring2max, config):
            status = Status.CONVERGED
        while status is None:
            dt = _dt(profile, config.cfl, dmax)
            if dt < MIN_DT:
                raise StepUnderflow(f"dt = {dt:.3e} at t = {t:.6g}")
            last = t + dt >= config.t_max
            if last:
                dt = config.t_max - t
            rho = integ.rk4(rho, k1, dt)
            t = config.t_max if last else t + dt
            steps += 1
            k1, dmax, ring2max = integ.rate(rho)
            if _is_converged(rho, ring2max, config):
                status = Status.CONVERGED
            elif last:
                status = Status.MAX_TIME
            if status is not None or steps % config.record_every == 0:
                profile = profile.with_rho(rho)
                take_record()
    except tuple(_GUARD_STATUS) as exc:
        status = _GUARD_STATUS[type(exc)]
        trace.message = str(exc)
        log.warning("flow stopped at t=%.6g: %s", t, exc)
        if steps and records[-1].t < t:
            profile = profile.with_rho(rho)
            try:
                take_record()
            except tuple(_GUARD_STATUS):
                pass

    trace.status = status
    trace.steps = steps
    trace.final_profile = profile
    if status is Status.CONVERGED:
        trace.r_infinity = float(profile.rho.mean())
    trace.wall_time = time.perf_counter() - start
    return trace


# --- monitors ---------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float
    first_violation_t: float | None = None


@dataclass
class MonitorReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def _first_time(t: np.ndarray, bad: np.ndarray) -> float | None:
    idx = np.flatnonzero(bad)
    return float(t[idx[0]]) if idx.size else None


def central_rate(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Second-order derivative estimate on a non-uniform time grid (interior points)."""
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    return (h0 ** 2 * y[2:] - h1 ** 2 * y[:-2] + (h1 ** 2 - h0 ** 2) * y[1:-1]) / (h0 * h1 * (h0 + h1))


def middle_window(t: np.ndarray, fraction: float = 0.8) -> np.ndarray:
    """Mask of interior times inside the central ``fraction`` of ``[t0, t_end]``."""
    t0, t1 = t[0], t[-1]
    pad = 0.5 * (1.0 - fraction) * (t1 - t0)
    return (t >= t0 + pad) & (t <= t1 - pad)


def _scaled(err: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """``err / scale``, falling back to the absolute error where the scale vanishes."""
    return np.divide(err, scale, out=err.copy(), where=scale > 0)


def rate_errors(trace: FlowTrace, fraction: float = 0.8) -> dict[str, float]:
    """Largest mismatch between differenced integrals and their predicted rates.

    The W2 rate is compared relatively.  Volume, area and total mean
    curvature rates change sign during a run, so their mismatch is measured
    against the integral of the absolute integrand.  Only records inside the
    central ``fraction`` of the run are used.
    """
    t = trace.column("t")
    if t.size < 3:
        return {}
    inner = middle_window(t, fraction)[1:-1]
    if not inner.any():
        return {}
    preds = trace.rates[1:-1]
    out = {}
    w2_fd = central_rate(t, trace.column("W2"))
    w2_pred = trace.column("dW2_predicted")[1:-1]
    out["W2"] = float(np.max(_scaled(np.abs(w2_fd - w2_pred), np.abs(w2_pred))[inner]))
    for name in ("volume", "area", "total_H1"):
        fd = central_rate(t, trace.column(name))
        pred = np.array([getattr(p, name + "_rate") for p in preds])
        scale = np.array([getattr(p, name + "_scale") for p in preds])
        out[name] = float(np.max(_scaled(np.abs(fd - pred), scale)[inner]))
    return out


def w2_drawdown(trace: FlowTrace) -> np.ndarray:
    """Drop of W2 below its running maximum at every record."""
    w2 = trace.column("W2")
    return np.maximum.accumulate(w2) - w2


def w2_slack(trace: FlowTrace) -> float:
    """Allowed W2 drawdown: round-off plus an O(dpsi^2) share of the total gain."""
    w2 = trace.column("W2")
    dpsi = trace.final_profile.dpsi
    return 10 * np.finfo(float).eps * float(np.abs(w2).max()) + dpsi ** 2 * abs(float(w2[-1] - w2[0]))


def monitors(trace: FlowTrace, area_tol: float = 1e-4, rho_slack: float = 1e-10,
             H1_slack: float = 1e-6, rate_tol: float = 0.02, phi1_tol: float = 1e-3) -> MonitorReport:
    """Check the a-priori bounds and conservation laws along a trace."""
    if len(trace.records) < 2:
        raise DomainError("monitors need at least two records")
    t = trace.column("t")
    checks = []

    dmax = np.diff(trace.column("max_rho"))
    checks.append(Check("max_rho_nonincreasing", bool(np.all(dmax <= rho_slack)), float(dmax.max()),
                        rho_slack, _first_time(t[1:], dmax > rho_slack)))
    dmin = np.diff(trace.column("min_rho"))
    checks.append(Check("min_rho_nondecreasing", bool(np.all(dmin >= -rho_slack)), float(-dmin.min()),
                        rho_slack, _first_time(t[1:], dmin < -rho_slack)))

    h1 = trace.column("min_H1")
    floor = h1[0] - H1_slack
    checks.append(Check("min_H1_lower_bound", bool(np.all(h1 >= floor)), float(h1[0] - h1.min()),
                        H1_slack, _first_time(t, h1 < floor)))

    area = trace.column("area")
    drift = np.abs(area - area[0]) / area[0]
    checks.append(Check("area_drift", bool(np.all(drift <= area_tol)), float(drift.max()), area_tol,
                        _first_time(t, drift > area_tol)))

    down = w2_drawdown(trace)
    slack = w2_slack(trace)
    checks.append(Check("W2_nondecreasing", bool(np.all(down <= slack)), float(down.max()), slack,
                        _first_time(t, down > slack)))

    errs = rate_errors(trace) if t.size >= 5 else {}
    for name, err in errs.items():
        checks.append(Check(f"{name}_rate", err <= rate_tol, err, rate_tol))

    if trace.status is Status.CONVERGED:
        gap = trace.phi1_gap
        checks.append(Check("phi1_reconciliation", gap < phi1_tol, gap, phi1_tol))
    return MonitorReport(checks)


# --- snapshot residuals of the evolution equations --------------------------


def residual_ev_rho(profile: RadialProfile, fr: GeometryFrame | None = None) -> np.ndarray:
    """Defect of the radial-function evolution equation at a snapshot.

    The Lagrangian time derivative is ``f / v`` exactly, so only spatial
    operators are discretized.
    """
    if fr is None:
        fr = axigraph.frame(profile)
    n = profile.n
    th, dth, H1, grad2 = fr.warp, fr.warp_prime, fr.H1, fr.grad2rho
    f = fr.u - dth / H1
    lap = laplace_beltrami(profile, profile.rho)
    lhs = f / fr.v - dth / (n * H1 ** 2) * lap - th * grad2
    rhs = th - 2.0 * dth / (H1 * fr.v) + dth ** 2 / (th * H1 ** 2) + dth ** 2 / (n * th * H1 ** 2) * grad2
    return lhs - rhs


def residual_ev_u(profile: RadialProfile, fr: GeometryFrame | None = None) -> np.ndarray:
    """Defect of the support-function evolution equation at a snapshot."""
    if fr is None:
        fr = axigraph.frame(profile)
    n = profile.n
    th, dth, H1, u = fr.warp, fr.warp_prime, fr.H1, fr.u
    f = u - dth / H1
    du_dt = f * dth + th * gradient_pairing(profile, fr, profile.rho, f)
    diff = dth / (n * H1 ** 2)
    lhs = du_dt - diff * laplace_beltrami(profile, u) - th * gradient_pairing(profile, fr, profile.rho, u)
    rhs = -diff * fr.ring2 * u - th ** 2 / H1 * fr.grad2rho
    return lhs - rhs


def _mean_curvature(profile: RadialProfile, rho: np.ndarray) -> np.ndarray:
    return axigraph.frame(profile.with_rho(rho)).H1


def lagrangian_H1_rate(profile: RadialProfile, fr: GeometryFrame, delta: float | None = None) -> np.ndarray:
    """Time derivative of ``H1`` along the normal trajectories.

    The fixed-angle derivative is a Richardson-extrapolated symmetric
    difference along the graph rate; the trajectories drift in angle at
    ``f rho' / (warp^2 v)``, which adds an advection term.
    """
    f = fr.u - fr.warp_prime / fr.H1
    rate = f * fr.v
    if delta is None:
        delta = 0.1 * profile.dpsi / max(float(np.abs(rate).max()), 1e-300)
    rho = profile.rho

    def sym(d):
        return (_mean_curvature(profile, rho + d * rate) - _mean_curvature(profile, rho - d * rate)) / (2 * d)

    fixed = (4.0 * sym(0.5 * delta) - sym(delta)) / 3.0
    drift = f * fr.rho_prime / (fr.warp ** 2 * fr.v)
    dH = centred_derivatives(fr.H1, profile.dpsi)[0]
    return fixed + drift * dH


def residual_trace_h(profile: RadialProfile, fr: GeometryFrame | None = None) -> np.ndarray:
    """Defect of the traced shape-operator evolution ``d(nH1) = Lap f - f|A|^2 + n f``."""
    if fr is None:
        fr = axigraph.frame(profile)
    n = profile.n
    f = fr.u - fr.warp_prime / fr.H1
    lhs = n * lagrangian_H1_rate(profile, fr)
    return lhs - (laplace_beltrami(profile, f) - f * fr.normA2 + n * f)
