"""Executable constant chains behind the uniform-in-time norm bounds.

Each bootstrap rung combines an interpolation exponent, a Young-inequality
split and a Sobolev (or Hardy-Littlewood-Sobolev, or fractional Sobolev)
constant.  The functions here evaluate every exponent and constant explicitly,
flag each required inequality with its margin, and replay the super-exponential
norm recursion in log space so the uniform bound itself is checkable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel_model import (
    ParameterDomainError,
    riesz_normalization,
    sphere_surface_area,
    unit_ball_volume,
)

__all__ = [
    "ValidityFlag",
    "IterationConstants",
    "IterationValidityError",
    "InequalityConstants",
    "YkReplay",
    "pk_sequence",
    "weak_constants",
    "attractive_constants",
    "strong_constants",
    "step1_theta1",
    "hls_theta",
    "hls_constant_bound",
    "fractional_sobolev_constant",
    "sobolev_constant",
    "sobolev_quotient_radial3d",
    "aubin_talenti_bubble",
    "weak_prefactor_sequence",
    "dissipation_retention",
    "d_envelope",
    "yk_bound_replay",
    "collect_inequality_constants",
]

CASES = ("weak", "attractive", "strong")


class IterationValidityError(ValueError):
    """A hypothesis inequality of the iteration fails; the message names it."""


@dataclass(frozen=True)
class ValidityFlag:
    name: str
    holds: bool
    margin: float


@dataclass(frozen=True)
class IterationConstants:
    """One rung of the bootstrap with every hypothesis inequality flagged."""

    case: str
    k: int
    p_k: float
    p_km1: float
    theta1: float | None = None
    theta2: float | None = None
    theta3: float | None = None
    ell2: float | None = None
    eta: float | None = None
    eta1: float | None = None
    eta2: float | None = None
    q1: float | None = None
    nu2: float | None = None
    formal_n2: bool = False
    flags: tuple[ValidityFlag, ...] = ()

    def failed_flags(self):
        return tuple(f for f in self.flags if not f.holds)


def _check(flags, raise_on_failure):
    if raise_on_failure:
        bad = [f for f in flags if not f.holds]
        if bad:
            raise IterationValidityError(
                "iteration hypothesis failed: "
                + "; ".join(f"{f.name} (margin {f.margin:.3e})" for f in bad)
            )


def pk_sequence(case: str, k: int, n: int, A: float | None = None) -> float:
    """Iteration exponents: weak 2^k+1, attractive 2^k + n/(2-A) + n, strong 2^k + n.

    The attractive sequence needs A < 2; at A = 2 the weak sequence applies
    (the purely attractive A = 2 argument reduces to the weak one).
    """
    if case not in CASES:
        raise ParameterDomainError(f"case must be one of {CASES}, got {case!r}")
    if k < 0:
        raise ParameterDomainError(f"k must be >= 0, got {k}")
    if case == "weak":
        return 2.0**k + 1.0
    if case == "strong":
        return 2.0**k + float(n)
    if A is None:
        raise ParameterDomainError("attractive case requires the exponent A")
    if A == 2.0:
        return 2.0**k + 1.0
    if A > 2.0:
        raise ParameterDomainError(f"attractive case requires A <= 2, got A={A}")
    return 2.0**k + n / (2.0 - A) + float(n)


def _require_diffusive(m: float, n: int) -> None:
    if m <= 1.0 - 2.0 / n:
        raise ParameterDomainError(
            f"requires m > 1 - 2/n = {1.0 - 2.0 / n}, got m={m}"
        )


def weak_constants(
    m: float, n: int, p_k: float, p_km1: float, k: int = -1, raise_on_failure: bool = True
) -> IterationConstants:
    """Interpolation exponent theta2, Young exponent ell2 and growth exponent eta.

    eta is computed both as ell2*p_k*theta2/p_km1 and by the closed form
    (m-1+(2/n)p_k)/(m-1+(2/n)p_km1); the two must agree to 1e-12 relative.
    For n = 2 the Sobolev endpoint 2n/(n-2) degenerates and the numbers are the
    formal n-2=0 limits (flagged, still finite).
    """
    _require_diffusive(m, n)
    if not p_k > p_km1 >= 1.0:
        raise ParameterDomainError(f"requires p_k > p_km1 >= 1, got {p_k}, {p_km1}")
    sob = (n - 2.0) / (n * (m + p_k - 1.0))
    theta2 = (1.0 / p_k - sob) / (1.0 / p_km1 - sob)
    one_minus_theta2 = (1.0 / p_km1 - 1.0 / p_k) / (1.0 / p_km1 - sob)
    young = one_minus_theta2 * p_k / (m + p_k - 1.0)
    ell2 = (m + p_k - 1.0) / (m + p_k - 1.0 - one_minus_theta2 * p_k)
    eta = ell2 * p_k * theta2 / p_km1
    eta_closed = (m - 1.0 + (2.0 / n) * p_k) / (m - 1.0 + (2.0 / n) * p_km1)
    agreement = abs(eta - eta_closed) / abs(eta_closed)
    flags = (
        ValidityFlag("0 < theta2 < 1", 0.0 < theta2 < 1.0, min(theta2, 1.0 - theta2)),
        ValidityFlag("(1-theta2) p_k / (m+p_k-1) < 1", young < 1.0, 1.0 - young),
        ValidityFlag("1 < ell2 < n+1", 1.0 < ell2 < n + 1.0, min(ell2 - 1.0, n + 1.0 - ell2)),
        ValidityFlag("0 < eta < 2", 0.0 < eta < 2.0, min(eta, 2.0 - eta)),
        ValidityFlag("eta closed form agreement <= 1e-12", agreement <= 1e-12, 1e-12 - agreement),
    )
    _check(flags, raise_on_failure)
    return IterationConstants(
        case="weak", k=k, p_k=p_k, p_km1=p_km1, theta2=theta2, ell2=ell2, eta=eta,
        formal_n2=(n == 2), flags=flags,
    )


def step1_theta1(m: float, n: int, p: float, raise_on_failure: bool = True):
    """Interpolation exponent for the single-p estimate, plus its Young check.

    theta1 = 1 - (p-1)(m+p-1)n / (p((m+p-1)n - n + 2)); the usable condition is
    p(1-theta1)/(m+p-1) < 1.
    """
    _require_diffusive(m, n)
    if p <= 1.0:
        raise ParameterDomainError(f"requires p > 1, got p={p}")
    denom = p * ((m + p - 1.0) * n - n + 2.0)
    theta1 = 1.0 - (p - 1.0) * (m + p - 1.0) * n / denom
    young = p * (1.0 - theta1) / (m + p - 1.0)
    flags = (
        ValidityFlag("p (1-theta1) / (m+p-1) < 1", young < 1.0, 1.0 - young),
        ValidityFlag("0 < theta1 < 1", 0.0 < theta1 < 1.0, min(theta1, 1.0 - theta1)),
    )
    _check(flags, raise_on_failure)
    return theta1, young, flags


def hls_theta(A: float, n: int, p: float) -> float:
    """Interpolation exponent theta = (-n + (2-A)(p+1)) / (n p) in (0, 1]."""
    if not (2.0 - n < A <= 2.0):
        raise ParameterDomainError(f"requires 2-n < A <= 2, got A={A}, n={n}")
    threshold = max(1.0, (A - 2.0 + n) / (2.0 - A)) if A < 2.0 else 1.0
    if p <= threshold:
        raise ParameterDomainError(
            f"requires p > max(1, (A-2+n)/(2-A)) = {threshold}, got p={p}"
        )
    return (-n + (2.0 - A) * (p + 1.0)) / (n * p)


def hls_partner_exponent(A: float, n: int, p: float) -> float:
    """s solving 1/r + (2-A)/n + 1/s = 2 for r = (p+1)/p."""
    return n * (p + 1.0) / ((n - 2.0 + A) * (p + 1.0) + n)


def hls_constant_bound(n: int, A: float, r: float, s: float) -> float:
    """Upper bound on the Hardy-Littlewood-Sobolev constant for kernel |x|^{A-2}.

    Valid for 2-n < A <= 2 (kernel power 2-A below n) and conjugate-type
    exponents with 1/r + (2-A)/n + 1/s = 2.
    """
    if not (2.0 - n < A <= 2.0):
        raise ParameterDomainError(
            f"kernel power 2-A must be below n: requires 2-n < A <= 2, got A={A}, n={n}"
        )
    if r <= 1.0 or s <= 1.0:
        raise ParameterDomainError(f"requires r, s > 1, got r={r}, s={s}")
    relation = 1.0 / r + (2.0 - A) / n + 1.0 / s
    if abs(relation - 2.0) > 1e-12:
        raise ParameterDomainError(
            f"exponent relation 1/r + (2-A)/n + 1/s = 2 violated: got {relation}"
        )
    lam = 2.0 - A
    front = n / (n - 2.0 + A) * (sphere_surface_area(n) / n) ** (lam / n) / (s * r)
    bracket = (lam / (n * (1.0 - 1.0 / s))) ** (lam / n) + (lam / (n * (1.0 - 1.0 / r))) ** (lam / n)
    return front * bracket


def fractional_sobolev_constant(n: int, s: float) -> float:
    """Sharp constant S(n,s) = 2^{-2s} pi^{-s} Gamma((n-2s)/2)/Gamma((n+2s)/2) [Gamma(n)/Gamma(n/2)]^{2s/n}."""
    if not 0.0 < s < 1.0:
        raise ParameterDomainError(f"requires 0 < s < 1, got s={s}")
    if n <= 2.0 * s:
        raise ParameterDomainError(f"requires n > 2s, got n={n}, s={s}")
    return (
        2.0 ** (-2.0 * s)
        * math.pi ** (-s)
        * math.gamma((n - 2.0 * s) / 2.0)
        / math.gamma((n + 2.0 * s) / 2.0)
        * (math.gamma(n) / math.gamma(n / 2.0)) ** (2.0 * s / n)
    )


def attractive_constants(
    m: float, n: int, A: float, p_k: float, p_km1: float, k: int = -1,
    raise_on_failure: bool = True,
) -> IterationConstants:
    """Rung of the purely attractive (HLS-based) iteration: theta1, nu2, eta1, eta2."""
    _require_diffusive(m, n)
    if not (2.0 - n < A < 2.0):
        raise ParameterDomainError(f"requires 2-n < A < 2, got A={A}, n={n}")
    theta = hls_theta(A, n, p_k)
    sob = (n - 2.0) / (n * (m + p_k - 1.0))
    theta1 = (1.0 / (p_k + 1.0) - sob) / (1.0 / p_km1 - sob)
    young = (1.0 - theta1) * (p_k + theta) / (m + p_k - 1.0)
    nu2 = (m + p_k - 1.0) / ((m + p_k - 1.0) - (1.0 - theta1) * (p_k + theta))
    eta2 = nu2 * (p_k + theta) * theta1 / p_km1
    weak = weak_constants(m, n, p_k, p_km1, k=k, raise_on_failure=False)
    eta1 = weak.eta
    flags = (
        ValidityFlag("0 < theta < 1", 0.0 < theta < 1.0, min(theta, 1.0 - theta)),
        ValidityFlag("(1-theta1)(p_k+theta)/(m+p_k-1) < 1", young < 1.0, 1.0 - young),
        ValidityFlag("1 < nu2 <= n+1", 1.0 < nu2 <= n + 1.0, min(nu2 - 1.0, n + 1.0 - nu2)),
        ValidityFlag("0 < eta1 <= 2", 0.0 < eta1 <= 2.0, min(eta1, 2.0 - eta1)),
        ValidityFlag("0 < eta2 <= 2", 0.0 < eta2 <= 2.0, min(eta2, 2.0 - eta2)),
    )
    _check(flags, raise_on_failure)
    return IterationConstants(
        case="attractive", k=k, p_k=p_k, p_km1=p_km1, theta1=theta1, theta2=weak.theta2,
        ell2=weak.ell2, eta1=eta1, eta2=eta2, nu2=nu2, formal_n2=(n == 2), flags=flags,
    )


def strong_constants(
    m: float, n: int, B: float, p_k: float, p_km1: float, k: int = -1,
    raise_on_failure: bool = True,
) -> IterationConstants:
    """Rung of the strongly singular iteration: theta3, q1, nu2 = max(q1, ell2).

    q1 is evaluated both as 1/theta3 (from (1-theta3) q2 = 1 with conjugate q2)
    and by the closed form (n(p_k+1) - (2n-2+B) p_km1) / ((2-B-n) p_km1); both
    must agree, and q1 must sit strictly below n/(2-n-B) + 1.
    """
    _require_diffusive(m, n)
    if not (-n < B < 2.0 - n):
        raise ParameterDomainError(f"requires -n < B < 2-n, got B={B}, n={n}")
    frac = (2.0 * n - 2.0 + B) / (n * (p_k + 1.0))
    theta3 = (1.0 / (p_k + 1.0) - frac) / (1.0 / p_km1 - frac)
    q1 = 1.0 / theta3
    q1_closed = (n * (p_k + 1.0) - (2.0 * n - 2.0 + B) * p_km1) / ((2.0 - B - n) * p_km1)
    q1_bound = n / (2.0 - n - B) + 1.0
    agreement = abs(q1 - q1_closed) / abs(q1_closed)
    weak = weak_constants(m, n, p_k, p_km1, k=k, raise_on_failure=False)
    eta1 = weak.eta
    eta2 = (p_k + 1.0) / p_km1  # equals (p_k+1)/p_km1 * theta3 * q1 with theta3 q1 = 1
    nu2 = max(q1, weak.ell2)
    nu2_bound = max(n + 1.0, q1_bound)
    flags = (
        ValidityFlag("0 < theta3 < 1", 0.0 < theta3 < 1.0, min(theta3, 1.0 - theta3)),
        ValidityFlag("q1 < n/(2-n-B) + 1", q1 < q1_bound, q1_bound - q1),
        ValidityFlag("q1 closed form agreement <= 1e-12", agreement <= 1e-12, 1e-12 - agreement),
        ValidityFlag("0 < eta1 <= 2", 0.0 < eta1 <= 2.0, min(eta1, 2.0 - eta1)),
        ValidityFlag("0 < eta2 <= 2", 0.0 < eta2 <= 2.0, min(eta2, 2.0 - eta2)),
        ValidityFlag(
            "1 < nu2 <= max(n+1, n/(2-n-B)+1)",
            1.0 < nu2 <= nu2_bound,
            min(nu2 - 1.0, nu2_bound - nu2),
        ),
    )
    _check(flags, raise_on_failure)
    return IterationConstants(
        case="strong", k=k, p_k=p_k, p_km1=p_km1, theta2=weak.theta2, theta3=theta3,
        ell2=weak.ell2, eta1=eta1, eta2=eta2, q1=q1, nu2=nu2, formal_n2=(n == 2),
        flags=flags,
    )


def sobolev_constant(n: int) -> float:
    """Best constant S_n in S_n ||h||_{2n/(n-2)}^2 <= ||grad h||_2^2 for n >= 3.

    Closed form n(n-2)/4 * 2^{2/n} pi^{(n+1)/n} / Gamma((n+1)/2)^{2/n} reduces to
    pi n (n-2) (Gamma(n/2)/Gamma(n))^{2/n}; validated against the numerically
    measured extremal quotient (see sobolev_quotient_radial3d) rather than
    trusted as written.
    """
    if n < 3:
        raise ParameterDomainError(
            "Sobolev endpoint 2n/(n-2) degenerates at n = 2; the n=2 chain is "
            "formal and has no best constant here"
        )
    return math.pi * n * (n - 2.0) * (math.gamma(n / 2.0) / math.gamma(float(n))) ** (2.0 / n)


def aubin_talenti_bubble(r: np.ndarray) -> np.ndarray:
    """Radial extremal profile (1 + r^2)^{-1/2} of the n=3 Sobolev inequality."""
    return 1.0 / np.sqrt(1.0 + r**2)


def sobolev_quotient_radial3d(profile=aubin_talenti_bubble, cells: int = 256, s_max: float = 12.0) -> float:
    """Measured Rayleigh quotient ||grad h||_2^2 / ||h||_6^2 for a radial profile.

    Radial mesh r = sinh(s) with `cells` nodes uniform in s: resolves the core
    and reaches r ~ e^{s_max}/2 so the slowly decaying gradient tail is captured.
    """
    s = np.linspace(0.0, s_max, cells)
    r = np.sinh(s)
    h = profile(r)
    dh_ds = np.gradient(h, s)
    dr_ds = np.cosh(s)
    grad = dh_ds / dr_ds
    num = np.trapezoid(4.0 * math.pi * grad**2 * r**2 * dr_ds, s)
    den_int = np.trapezoid(4.0 * math.pi * h**6 * r**2 * dr_ds, s)
    return float(num / den_int ** (1.0 / 3.0))


def dissipation_retention(m: float, p: float) -> float:
    """Retained dissipation constant C1 = m p (p-1) / (m+p-1)^2.

    Half the admissible ceiling 2 m p (p-1)/(m+p-1)^2, so half of the available
    dissipation stays as slack in every p-norm inequality.
    """
    return m * p * (p - 1.0) / (m + p - 1.0) ** 2


def weak_prefactor_sequence(
    m: float, n: int, big_c: float, k_max: int
) -> np.ndarray:
    """Per-k prefactor C(sigma1)(1 + C^{ell2}) S_n^{-ell2 p_k (1-theta2)/(m+p_k-1)}.

    Its boundedness in k is what makes the iteration constant uniform; big_c is
    the regime constant C(A,B,n,M0) of the single-p estimate.  Needs n >= 3 for
    the Sobolev constant.
    """
    s_n = sobolev_constant(n)
    out = np.empty(k_max)
    for k in range(1, k_max + 1):
        p_k = pk_sequence("weak", k, n)
        p_km1 = pk_sequence("weak", k - 1, n)
        rung = weak_constants(m, n, p_k, p_km1, k=k)
        ell2 = rung.ell2
        ell1 = ell2 / (ell2 - 1.0)
        sigma1 = dissipation_retention(m, p_k)
        c_sigma = (sigma1 * ell1) ** (-ell2 / ell1) / ell2
        expo = ell2 * p_k * (1.0 - rung.theta2) / (m + p_k - 1.0)
        out[k - 1] = c_sigma * (1.0 + big_c**ell2) * s_n ** (-expo)
    return out


def d_envelope(case: str, n: int, d0: float, A: float | None = None) -> float:
    """Smallest D with D0^{p_k / 2^k} <= D for all k; attained at k = 0."""
    if d0 < 1.0:
        raise ParameterDomainError(f"requires D0 >= 1, got {d0}")
    p0 = pk_sequence(case, 0, n, A)
    return d0**p0


@dataclass(frozen=True)
class YkReplay:
    """Log-domain replay of the norm recursion against its closed-form product."""

    n: int
    c_tilde: float
    d: float
    y0_sup: float
    k: np.ndarray
    p_k: np.ndarray
    log_brute: np.ndarray
    log_closed: np.ndarray
    root: np.ndarray           # brute-force y_k^{1/p_k}
    root_bound: float          # 2^{n+2} 2^{2(n+1)} C~ max(y0_sup, D)


def yk_bound_replay(c_tilde: float, n: int, d: float, y0_sup: float, k_max: int) -> YkReplay:
    """Iterate y_k = 2 a_k max(y_{k-1}^2, D^{2^k}) and compare with the product form.

    a_k = C~ 2^{n+1} 2^{(n+1)k}; everything runs in log space because D^{2^k}
    overflows double precision long before k = 30.  The returned root array is
    y_k^{1/p_k} with p_k = 2^k + 1, whose uniform bound in k is the executable
    content of the L-infinity estimate.
    """
    if c_tilde <= 1.0:
        raise ParameterDomainError(f"requires C~ > 1, got {c_tilde}")
    if d < 1.0:
        raise ParameterDomainError(f"requires D >= 1, got {d}")
    if y0_sup <= 0.0:
        raise ParameterDomainError(f"requires y0_sup > 0, got {y0_sup}")
    log2 = math.log(2.0)
    log_c = math.log(c_tilde)
    log_d = math.log(d)
    ks = np.arange(1, k_max + 1)
    log_brute = np.empty(k_max)
    log_closed = np.empty(k_max)
    log_y_prev = math.log(y0_sup)
    log_m = max(log_y_prev, log_d)
    for i, k in enumerate(ks):
        log_ak = log_c + (n + 1.0) * log2 + (n + 1.0) * k * log2
        log_yk = log2 + log_ak + max(2.0 * log_y_prev, 2.0**k * log_d)
        log_brute[i] = log_yk
        log_y_prev = log_yk
        log_closed[i] = (
            (2.0**k - 1.0) * ((n + 2.0) * log2 + log_c)
            + (2.0 * 2.0**k - k - 2.0) * (n + 1.0) * log2
            + 2.0**k * log_m
        )
    p_k = 2.0**ks + 1.0
    root = np.exp(log_brute / p_k)
    root_bound = 2.0 ** (n + 2.0) * 2.0 ** (2.0 * (n + 1.0)) * c_tilde * max(y0_sup, d)
    return YkReplay(
        n=n, c_tilde=c_tilde, d=d, y0_sup=y0_sup, k=ks, p_k=p_k,
        log_brute=log_brute, log_closed=log_closed, root=root, root_bound=root_bound,
    )


@dataclass(frozen=True)
class InequalityConstants:
    """Named constants entering the differential inequalities, all positive."""

    n: int
    m: float
    p: float
    n_alpha_n: float
    c1: float
    sobolev: float | None = None
    frac_sobolev: float | None = None
    frac_order: float | None = None
    riesz_norm: float | None = None
    hls_bound: float | None = None
    c_tilde: float | None = None
    d0: float | None = None
    d: float | None = None


def collect_inequality_constants(
    m: float,
    n: int,
    p: float,
    A: float | None = None,
    B: float | None = None,
    d0: float | None = None,
    case: str = "weak",
) -> InequalityConstants:
    """Assemble the constants a given (case, m, n, p) inequality needs."""
    c1 = dissipation_retention(m, p)
    sobolev = sobolev_constant(n) if n >= 3 else None
    frac_sobolev = frac_order = riesz_norm = None
    if case == "strong":
        if B is None:
            raise ParameterDomainError("strong case requires B")
        s = (B + n) / 2.0
        frac_order = s
        riesz_norm = riesz_normalization(n, s)
        frac_sobolev = fractional_sobolev_constant(n, (2.0 - n - B) / 2.0)
    hls_bound = None
    if case == "attractive" and A is not None and A < 2.0 and p > max(1.0, (A - 2.0 + n) / (2.0 - A)):
        hls_bound = hls_constant_bound(
            n, A, (p + 1.0) / p, hls_partner_exponent(A, n, p)
        )
    d = d_envelope(case, n, max(1.0, d0), A) if d0 is not None else None
    return InequalityConstants(
        n=n, m=m, p=p, n_alpha_n=n * unit_ball_volume(n), c1=c1, sobolev=sobolev,
        frac_sobolev=frac_sobolev, frac_order=frac_order, riesz_norm=riesz_norm,
        hls_bound=hls_bound, d0=d0, d=d,
    )
