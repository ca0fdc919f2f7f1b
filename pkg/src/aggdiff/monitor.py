"""Trajectory verdicts: norm series, differential-inequality residuals, and
boundedness/blow-up classification.

The residual checks evaluate, at a simulation state, the regime's a-priori
inequality

    d/dt int rho^p <= -2 C1 int |grad rho^{(m+p-1)/2}|^2 + (regime terms)

with the discrete chain rule p sum(rho^{p-1} rate) h^n standing in for the left
side.  A residual below the mixed absolute/relative tolerance means the
inequality is verified at that state; the first-order scheme contributes O(h)
consistency error, which the retained dissipation slack absorbs on resolved
runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimates import (
    dissipation_retention,
    hls_constant_bound,
    hls_partner_exponent,
    hls_theta,
    pk_sequence,
)
from .field import DensityField, mass
from .kernel_model import (
    ParameterDomainError,
    PotentialParams,
    classify,
    repulsion_zero_r0,
    riesz_normalization,
    unit_ball_volume,
)
from .operators import _power, dissipation_functional, spectral_fractional

__all__ = [
    "NormSeries",
    "Verdict",
    "RegimeMismatchError",
    "RESIDUAL_REGIMES",
    "residual_tolerance",
    "differential_inequality_residual",
    "try_residual",
    "boundedness_verdict",
    "yk_trajectory",
]

BOUNDARY_MASS_THRESHOLD = 1e-6
TAIL_WINDOW_RATIO = 1.05
GROWTH_FACTOR = 2.0

RESIDUAL_REGIMES = (
    "WeakSingularInterior",
    "WeakSingularNewtonianB",
    "StrongSingular",
    "AttractiveDiffusionDominated",
)


class RegimeMismatchError(ValueError):
    """The requested residual form does not apply to this parameter regime."""


@dataclass
class NormSeries:
    """Per-output-time trajectory diagnostics; times strictly increasing."""

    times: np.ndarray
    dt: np.ndarray
    mass: np.ndarray
    linf: np.ndarray
    min_value: np.ndarray
    max_speed: np.ndarray
    boundary_mass_fraction: np.ndarray
    lp: dict = field(default_factory=dict)
    dissipation: dict = field(default_factory=dict)
    residual: dict = field(default_factory=dict)
    sv_gap: np.ndarray | None = None
    termination: str = "completed"

    @classmethod
    def from_reports(cls, reports, termination="completed"):
        if not reports:
            raise ValueError("cannot build a NormSeries from zero reports")
        times = np.array([r.t for r in reports])
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("report times must be strictly increasing")
        ps = sorted(reports[0].lp.keys())
        lp = {p: np.array([r.lp[p] for r in reports]) for p in ps}
        diss = {p: np.array([r.dissipation[p] for r in reports]) for p in ps}
        resid = {}
        for p in ps:
            if all(p in r.residual for r in reports):
                resid[p] = np.array([r.residual[p] for r in reports])
        gaps = None
        if all(r.sv_gap is not None for r in reports):
            gaps = np.array([r.sv_gap for r in reports])
        return cls(
            times=times,
            dt=np.array([r.dt for r in reports]),
            mass=np.array([r.mass for r in reports]),
            linf=np.array([r.linf for r in reports]),
            min_value=np.array([r.min_value for r in reports]),
            max_speed=np.array([r.max_speed for r in reports]),
            boundary_mass_fraction=np.array([r.boundary_mass_fraction for r in reports]),
            lp=lp,
            dissipation=diss,
            residual=resid,
            sv_gap=gaps,
            termination=termination,
        )

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class Verdict:
    tag: str  # Bounded | Growing | BlowupSuspected | Inconclusive
    peak_linf: float
    tail_to_peak: float
    growth_factor: float
    resolution_flag: bool
    detail: str = ""


def residual_tolerance(lhs: float, rhs: float) -> float:
    """Mixed absolute/relative residual tolerance 1e-6 (|LHS| + |RHS| + 1)."""
    return 1e-6 * (abs(lhs) + abs(rhs) + 1.0)


def _lhs_chain_rule(field_obj, rate_field, p):
    v = field_obj.values
    vol = field_obj.grid.cell_volume
    if p == 1.0:
        return float(rate_field.sum()) * vol
    return p * float((_power(v, p - 1.0) * rate_field).sum()) * vol


def _lp_power_integral(field_obj, q):
    return float((_power(field_obj.values, q)).sum()) * field_obj.grid.cell_volume


def _dissipation_part(field_obj, m, p):
    c1 = dissipation_retention(m, p)
    return -2.0 * c1 * dissipation_functional(field_obj, m, p)


def _weak_interior_rhs(field_obj, params, m, p):
    m0 = mass(field_obj)
    r0 = repulsion_zero_r0(params)
    big_c = (params.A - 2.0 + params.n) * r0 ** (params.A - 2.0) * m0
    return _dissipation_part(field_obj, m, p) + big_c * (p - 1.0) * _lp_power_integral(field_obj, p)


def _newtonian_b_rhs(field_obj, params, m, p):
    # the lam-scaled local repulsion -lam n alpha_n rho^{p+1} cancels the
    # rearrangement bound of the attraction when the small-ball radius is
    # R = lam^{1/(A-2+n)}, leaving C = (A-2+n) M0 R^{A-2}
    n, A, lam = params.n, params.A, params.lam
    m0 = mass(field_obj)
    if A == 2.0:
        big_c = n * m0
    else:
        radius = lam ** (1.0 / (A - 2.0 + n))
        big_c = (A - 2.0 + n) * m0 * radius ** (A - 2.0)
    return _dissipation_part(field_obj, m, p) + big_c * (p - 1.0) * _lp_power_integral(field_obj, p)


def _strong_rhs(field_obj, params, m, p):
    n, A, B, lam = params.n, params.A, params.B, params.lam
    m0 = mass(field_obj)
    h = field_obj.grid.h
    vol = field_obj.grid.cell_volume
    rhs = _dissipation_part(field_obj, m, p)
    n_alpha = n * unit_ball_volume(n)
    if A == 2.0:
        rhs += n * m0 * (p - 1.0) * _lp_power_integral(field_obj, p)
    elif A == 2.0 - n:
        rhs += n_alpha * (p - 1.0) * _lp_power_integral(field_obj, p + 1.0)
    else:
        # unit-radius small-ball split of the attraction kernel
        rhs += n_alpha * (p - 1.0) * _lp_power_integral(field_obj, p + 1.0)
        rhs += (A - 2.0 + n) * m0 * (p - 1.0) * _lp_power_integral(field_obj, p)
    alpha = 2.0 - n - B
    w = spectral_fractional(_power(field_obj.values, (p + 1.0) / 2.0), h, alpha / 4.0)
    frac_energy = float((w * w).sum()) * vol
    coef = lam * riesz_normalization(n, (B + n) / 2.0) * 4.0 * p * (p - 1.0) / ((p + 1.0) ** 2 * B)
    rhs += coef * frac_energy  # coef < 0: the repulsion subtracts
    return rhs


def _diffusion_dominated_rhs(field_obj, params, m, p):
    n, A = params.n, params.A
    m0 = mass(field_obj)
    rhs = _dissipation_part(field_obj, m, p)
    if A == 2.0:
        return rhs + n * m0 * (p - 1.0) * _lp_power_integral(field_obj, p)
    threshold = max(1.0, (A - 2.0 + n) / (2.0 - A))
    if p <= threshold:
        raise RegimeMismatchError(
            f"HLS residual form requires p > max(1, (A-2+n)/(2-A)) = {threshold}, got p={p}"
        )
    theta = hls_theta(A, n, p)
    c_hls = hls_constant_bound(n, A, (p + 1.0) / p, hls_partner_exponent(A, n, p))
    lp1 = _lp_power_integral(field_obj, p + 1.0) ** (1.0 / (p + 1.0))
    rhs += (p - 1.0) * (A - 2.0 + n) * c_hls * m0 ** (1.0 - theta) * lp1 ** (p + theta)
    return rhs


_RHS_FORMS = {
    "WeakSingularInterior": _weak_interior_rhs,
    "WeakSingularNewtonianB": _newtonian_b_rhs,
    "StrongSingular": _strong_rhs,
    "AttractiveDiffusionDominated": _diffusion_dominated_rhs,
}


def differential_inequality_residual(
    field_obj: DensityField, rate_field: np.ndarray, params: PotentialParams, m: float, p: float
) -> float:
    """LHS - RHS of the regime's per-p differential inequality at this state.

    Residual <= residual_tolerance(LHS, RHS) means the inequality is verified.
    Raises RegimeMismatchError for regimes without an inequality form.
    """
    if p < 1.0:
        raise ParameterDomainError(f"requires p >= 1, got p={p}")
    tag = classify(params, m).tag
    form = _RHS_FORMS.get(tag)
    if form is None:
        raise RegimeMismatchError(f"no residual form for regime {tag}")
    lhs = _lhs_chain_rule(field_obj, rate_field, p)
    if p == 1.0:
        # conservation: d/dt mass = 0 and the right side is nonnegative
        return lhs
    rhs = form(field_obj, params, m, p)
    return lhs - rhs


def try_residual(field_obj, rate_field, params, m, p):
    """Residual, or None where no regime form applies (including p below threshold)."""
    try:
        return differential_inequality_residual(field_obj, rate_field, params, m, p)
    except RegimeMismatchError:
        return None


def _window_max(t, values, t_lo, t_hi):
    sel = (t >= t_lo) & (t <= t_hi)
    if not np.any(sel):
        return float(values[-1])
    return float(values[sel].max())


def boundedness_verdict(series: NormSeries, config=None) -> Verdict:
    """Decision rule over a completed or terminated trajectory.

    BlowupSuspected on cap/dt termination; Inconclusive when boundary mass ever
    exceeds the truncation threshold (the R^n surrogate is then invalid);
    Bounded when the late-window peak exceeds the mid-window peak by at most 5%;
    Growing when L^inf at T is at least twice its value at T/2.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    t = series.times
    linf = series.linf
    t_end = float(t[-1])
    peak = float(linf.max())
    linf0 = float(linf[0]) if linf[0] > 0.0 else 1e-300
    growth = peak / linf0

    if series.termination in ("blowup_cap", "dt_min"):
        return Verdict(
            "BlowupSuspected", peak, math.nan, growth, True,
            f"terminated on {series.termination} at t={t_end:.6g}",
        )
    if float(series.boundary_mass_fraction.max()) >= BOUNDARY_MASS_THRESHOLD:
        return Verdict(
            "Inconclusive", peak, math.nan, growth, False,
            "boundary mass fraction exceeded the truncation threshold",
        )
    mid_peak = _window_max(t, linf, 0.25 * t_end, 0.75 * t_end)
    tail_peak = _window_max(t, linf, 0.75 * t_end, t_end)
    ratio = tail_peak / mid_peak if mid_peak > 0.0 else math.inf
    if ratio <= TAIL_WINDOW_RATIO:
        return Verdict("Bounded", peak, ratio, growth, False,
                       f"late/mid window peak ratio {ratio:.4f}")
    half_idx = int(np.searchsorted(t, 0.5 * t_end))
    half_idx = min(half_idx, len(t) - 1)
    end_over_half = float(linf[-1] / linf[half_idx]) if linf[half_idx] > 0.0 else math.inf
    if end_over_half >= GROWTH_FACTOR:
        return Verdict("Growing", peak, ratio, growth, False,
                       f"L^inf(T)/L^inf(T/2) = {end_over_half:.3f}")
    return Verdict("Inconclusive", peak, ratio, growth, False,
                   "neither the bounded-window nor the growth rule fired")


def yk_trajectory(series: NormSeries, case: str, n: int, A: float | None = None) -> dict:
    """sup over t of y_k = ||rho||_{p_k}^{p_k} for every k whose p_k is monitored."""
    out = {}
    monitored = sorted(series.lp.keys())
    k = 0
    while True:
        p_k = pk_sequence(case, k, n, A)
        if p_k > max(monitored) + 1e-9:
            break
        hit = [p for p in monitored if abs(p - p_k) <= 1e-9]
        if hit:
            out[k] = float((series.lp[hit[0]] ** p_k).max())
        k += 1
    if not out:
        raise ValueError(
            f"no monitored p matches the {case} iteration exponents; monitored={monitored}"
        )
    return out
