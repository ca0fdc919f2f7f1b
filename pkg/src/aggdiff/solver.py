"""Explicit positivity-preserving, mass-conserving integrator for

    rho_t = Laplacian(rho^m) + div(rho grad(U * rho)).

Forward Euler on the flux form: centered differences for the degenerate
diffusion flux, first-order upwinding for the advective flux, zero total flux
through the box walls.  The time step obeys both the diffusive and advective
CFL constraints; positivity is a hard per-step assertion, and blow-up is only
ever *suspected* (cap or dt collapse), never concluded.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import monitor as _monitor
from .field import DensityField, FieldDomainError, boundary_mass_fraction
from .kernel_model import PotentialParams, Regime, classify
from .operators import KernelCache, _power, dissipation_functional, interaction_gradient, sv_gap

__all__ = [
    "SimConfig",
    "StepReport",
    "RunResult",
    "SchemeInvariantError",
    "BlowupSuspected",
    "advective_velocity",
    "step",
    "run",
]

_DEGENERATE_FLOOR = 1e-30  # guards the diffusive CFL where v = 0


class SchemeInvariantError(RuntimeError):
    """The scheme violated an invariant it is supposed to guarantee (internal error)."""


class BlowupSuspected(RuntimeError):
    """Raised by step() when dt falls below dt_min; run() converts it to a termination."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


@dataclass(frozen=True)
class SimConfig:
    m: float
    t_end: float
    cfl: float = 0.45
    dt_min: float = 1e-10
    blowup_cap: float | None = None      # absolute L^inf cap; None -> factor * initial
    blowup_cap_factor: float = 1e6
    output_every: float = 0.1
    epsilon_mollify: float | None = None  # None -> h/2 at cache build time
    monitored_p: tuple = (2.0, 3.0, 5.0)
    sv_check: tuple | None = None        # (gamma, alpha) evaluated at output times
    include_interaction: bool = True     # off = pure-diffusion diagnostic mode

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise FieldDomainError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end < 0.0:
            raise FieldDomainError(f"t_end must be >= 0, got {self.t_end}")
        if self.dt_min <= 0.0:
            raise FieldDomainError(f"dt_min must be positive, got {self.dt_min}")
        if self.t_end > 0.0 and self.dt_min >= self.t_end:
            raise FieldDomainError("dt_min must be smaller than t_end")
        if any(p < 1.0 for p in self.monitored_p):
            raise FieldDomainError("monitored p values must be >= 1")


@dataclass(frozen=True)
class StepReport:
    t: float
    dt: float
    mass: float
    linf: float
    min_value: float
    max_speed: float
    boundary_mass_fraction: float
    lp: dict = field(default_factory=dict)
    dissipation: dict = field(default_factory=dict)
    residual: dict = field(default_factory=dict)
    sv_gap: float | None = None
    flags: tuple = ()


@dataclass
class RunResult:
    initial: DensityField
    final: DensityField
    series: "_monitor.NormSeries"
    termination: str  # "completed" | "blowup_cap" | "dt_min"
    regime: Regime
    steps_taken: int
    wall_time: float


def advective_velocity(field: DensityField, params: PotentialParams, cache: KernelCache) -> np.ndarray:
    """Drift u = -grad(U * rho) at cell centers, shape (2, N, N)."""
    return -interaction_gradient(field, params, cache)


def _raw_rate_and_dt(v, u, m, h, n_dim, cfl):
    """One flux-form evaluation: returns (rate, dt_raw, max_speed)."""
    w = _power(v, m)
    # diffusive wave speed m v^{m-1}; degenerate cells impose no constraint
    if m == 1.0:
        s_max = 1.0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            sp = m * _power(v, m - 1.0)
        if m < 1.0:
            sp = np.where(v > 0.0, sp, 0.0)
        s_max = float(np.max(sp))
    s_max = max(s_max, _DEGENERATE_FLOOR)
    if u is None:
        u_max = 0.0
    else:
        u_max = float(np.max(np.abs(u)))
    dt_diff = h * h / (2.0 * n_dim * s_max)
    dt_adv = h / (2.0 * u_max) if u_max > 0.0 else np.inf
    dt_raw = cfl * min(dt_diff, dt_adv)

    rate = np.zeros_like(v)
    for axis in range(n_dim):
        flux_d = -np.diff(w, axis=axis) / h
        if u is not None:
            ua = u[axis]
            lo = [slice(None)] * n_dim
            hi = [slice(None)] * n_dim
            lo[axis] = slice(None, -1)
            hi[axis] = slice(1, None)
            lo, hi = tuple(lo), tuple(hi)
            uf = 0.5 * (ua[lo] + ua[hi])
            upwind = np.where(uf > 0.0, v[lo], v[hi])
            flux = flux_d + upwind * uf
        else:
            flux = flux_d
        shape = list(v.shape)
        shape[axis] = 1
        zero = np.zeros(shape)
        full = np.concatenate([zero, flux, zero], axis=axis)
        rate -= np.diff(full, axis=axis) / h
    return rate, dt_raw, u_max


def _full_report(field_obj, rate, dt, t, config, params, u_max) -> StepReport:
    v = field_obj.values
    vol = field_obj.grid.cell_volume
    lp = {}
    diss = {}
    resid = {}
    for p in config.monitored_p:
        lp[p] = float((_power(v, float(p))).sum() * vol) ** (1.0 / float(p))
        diss[p] = dissipation_functional(field_obj, config.m, float(p))
        if config.include_interaction:
            r = _monitor.try_residual(field_obj, rate, params, config.m, float(p))
            if r is not None:
                resid[p] = r
    gap = None
    if config.sv_check is not None:
        gamma, alpha = config.sv_check
        gap = sv_gap(field_obj, float(gamma), float(alpha))
    return StepReport(
        t=t,
        dt=dt,
        mass=float(v.sum()) * vol,
        linf=float(v.max()),
        min_value=float(v.min()),
        max_speed=u_max,
        boundary_mass_fraction=boundary_mass_fraction(field_obj),
        lp=lp,
        dissipation=diss,
        residual=resid,
        sv_gap=gap,
    )


def step(field_obj: DensityField, config: SimConfig, params: PotentialParams,
         cache: KernelCache | None, t: float = 0.0):
    """Advance one forward-Euler step; returns (new field, StepReport).

    The report describes the *pre-step* state together with the dt taken, so a
    sequence of reports is a consistent time series of the trajectory.
    """
    v = field_obj.values
    grid = field_obj.grid
    if config.include_interaction:
        if cache is None:
            raise FieldDomainError("interaction enabled but no kernel cache given")
        u = -cache.convolve_gradient(v)
    else:
        u = None
    rate, dt_raw, u_max = _raw_rate_and_dt(v, u, config.m, grid.h, grid.n_dim, config.cfl)
    if dt_raw < config.dt_min:
        raise BlowupSuspected(
            f"time step collapsed below dt_min: dt={dt_raw:.3e} at t={t:.6g}",
            last_state=field_obj,
        )
    dt = dt_raw
    new_v = v + dt * rate
    _enforce_positivity(new_v, v)
    report = _full_report(field_obj, rate, dt, t, config, params, u_max)
    return DensityField(grid, new_v, validate=False), report


def _enforce_positivity(new_v: np.ndarray, old_v: np.ndarray) -> None:
    mn = float(new_v.min())
    if mn < 0.0:
        tol = -1e-14 * max(float(old_v.max()), 1e-300)
        if mn < tol:
            raise SchemeInvariantError(
                f"negative density {mn:.3e} beyond roundoff tolerance {tol:.3e}"
            )
        np.maximum(new_v, 0.0, out=new_v)


def run(initial: DensityField, config: SimConfig, params: PotentialParams,
        cache: KernelCache | None = None) -> RunResult:
    """Integrate to t_end, the blow-up cap, or dt collapse; report at the output cadence."""
    grid = initial.grid
    regime = classify(params, config.m)
    if config.include_interaction:
        if grid.n_dim != 2:
            raise FieldDomainError("interaction runs require a 2d grid")
        if cache is None:
            cache = KernelCache(grid, params, eps=config.epsilon_mollify)
    t0 = time.perf_counter()
    v = initial.values.copy()
    h = grid.h
    n_dim = grid.n_dim
    m = config.m
    cap = config.blowup_cap
    if cap is None:
        cap = config.blowup_cap_factor * float(v.max())

    reports: list[StepReport] = []
    termination = "completed"
    t = 0.0
    steps = 0
    next_output = 0.0
    out_every = config.output_every

    def emit(rate, dt, u_max):
        fo = DensityField(grid, v, validate=False)
        reports.append(_full_report(fo, rate, dt, t, config, params, u_max))

    while True:
        if config.include_interaction:
            u = -cache.convolve_gradient(v)
        else:
            u = None
        rate, dt_raw, u_max = _raw_rate_and_dt(v, u, m, h, n_dim, config.cfl)

        if t >= next_output - 1e-12 * max(config.t_end, 1.0):
            emit(rate, dt_raw, u_max)
            next_output += out_every

        if t >= config.t_end:
            break
        if dt_raw < config.dt_min:
            termination = "dt_min"
            break
        dt = min(dt_raw, next_output - t, config.t_end - t)
        v_new = v + dt * rate
        _enforce_positivity(v_new, v)
        v = v_new
        t += dt
        steps += 1
        if float(v.max()) >= cap:
            termination = "blowup_cap"
            # terminal report so the series records the capped state
            if config.include_interaction:
                u = -cache.convolve_gradient(v)
            rate, dt_raw, u_max = _raw_rate_and_dt(v, u, m, h, n_dim, config.cfl)
            emit(rate, dt_raw, u_max)
            break

    if termination in ("dt_min", "completed") and (not reports or reports[-1].t < t):
        emit(rate, dt_raw, u_max)

    final = DensityField(grid, v, validate=False)
    series = _monitor.NormSeries.from_reports(reports, termination)
    return RunResult(
        initial=initial,
        final=final,
        series=series,
        termination=termination,
        regime=regime,
        steps_taken=steps,
        wall_time=time.perf_counter() - t0,
    )
