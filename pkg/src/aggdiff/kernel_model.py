"""Power-law interaction potentials, their derived radial quantities, and regime classification.

The interaction kernel is U(r) = r^A/A - lam * r^B/B with the convention that a
zero exponent term means log(r).  Everything downstream (solver drift, a-priori
norm estimates, verdicts) keys off the exponent regime decided here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "FAIR_COMPETITION_TOL",
    "ParameterDomainError",
    "PotentialParams",
    "Regime",
    "ConvolutionTerm",
    "LocalTerm",
    "FractionalTerm",
    "InteractionLaplacianForm",
    "unit_ball_volume",
    "sphere_surface_area",
    "riesz_normalization",
    "classify",
    "potential_value",
    "laplacian_mass_f",
    "repulsion_zero_r0",
    "interaction_laplacian_form",
]

# Absolute tolerance for membership in the measure-zero fair-competition set
# m = 1 - A/n.  Exact equality is float-representable for the canonical
# configurations (m=1, A=0), the band only forgives parser roundoff.
FAIR_COMPETITION_TOL = 1e-12


class ParameterDomainError(ValueError):
    """A potential/diffusion parameter violates its admissible range."""


def unit_ball_volume(n: int) -> float:
    """Volume alpha_n of the unit ball in R^n (pi for n=2, 4*pi/3 for n=3)."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_surface_area(n: int) -> float:
    """Surface area |S^{n-1}| of the unit sphere in R^n, equal to n * alpha_n."""
    return n * unit_ball_volume(n)


def riesz_normalization(n: int, s: float) -> float:
    """Normalization C(n, s) of the kernel C(n,s) |x|^{-(n-2s)} inverting (-Delta)^s.

    Classical choice Gamma(n/2 - s) / (4^s pi^{n/2} Gamma(s)); its correctness is
    enforced by the composition test against the spectral operator rather than
    trusted as written.
    """
    if not 0.0 < s < 1.0:
        raise ParameterDomainError(f"fractional order must satisfy 0 < s < 1, got s={s}")
    if n - 2.0 * s <= 0.0:
        raise ParameterDomainError(f"Riesz kernel requires n - 2s > 0, got n={n}, s={s}")
    return math.gamma(n / 2.0 - s) / (4.0**s * math.pi ** (n / 2.0) * math.gamma(s))


@dataclass(frozen=True)
class PotentialParams:
    """Exponents and strength of the kernel r^A/A - lam * r^B/B in dimension n.

    B is ignored when lam == 0 (purely attractive kernel).
    """

    A: float
    B: float = 0.0
    lam: float = 0.0
    n: int = 2

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterDomainError(
                f"spatial dimension must be an integer n >= 2, got n={self.n}"
            )
        if self.lam < 0.0:
            raise ParameterDomainError(
                f"interaction strength must satisfy lambda >= 0, got lambda={self.lam}"
            )
        if self.lam > 0.0:
            if not (-self.n < self.B < self.A <= 2.0):
                raise ParameterDomainError(
                    "attractive-repulsive exponents must satisfy -n < B < A <= 2; "
                    f"got A={self.A}, B={self.B}, n={self.n}"
                )
        else:
            if not (-self.n < self.A <= 2.0):
                raise ParameterDomainError(
                    f"attractive exponent must satisfy -n < A <= 2; got A={self.A}, n={self.n}"
                )

    @property
    def newtonian_exponent(self) -> float:
        return 2.0 - self.n


@dataclass(frozen=True)
class DiffusionExponent:
    """Porous-medium exponent; the standing assumption is m > 1 - 2/n."""

    m: float
    n: int = 2

    def __post_init__(self):
        if self.m <= 1.0 - 2.0 / self.n:
            raise ParameterDomainError(
                f"diffusion exponent must satisfy m > 1 - 2/n = {1.0 - 2.0 / self.n}, got m={self.m}"
            )


@dataclass(frozen=True)
class Regime:
    """Classification tag plus the inequalities that fired to produce it."""

    tag: str
    witnesses: tuple[str, ...] = ()

    def __str__(self):
        return self.tag


REGIME_TAGS = (
    "WeakSingularInterior",
    "WeakSingularNewtonianB",
    "StrongSingular",
    "AttractiveNewtonian",
    "AttractiveDiffusionDominated",
    "FairCompetition",
    "Unclassified",
)


def classify(params: PotentialParams, m: float) -> Regime:
    """Decide which theorem regime (params, m) lives in.

    Tags are mutually exclusive.  The fair-competition equality m = 1 - A/n is
    tested inside an absolute band of FAIR_COMPETITION_TOL and, for lam == 0,
    takes precedence over the open diffusion-dominated / Newtonian conditions so
    the canonical Keller-Segel configuration is reported as critical.
    """
    if m <= 0.0:
        raise ParameterDomainError(f"diffusion exponent must be positive, got m={m}")
    n, A, B, lam = params.n, params.A, params.B, params.lam
    newt = params.newtonian_exponent
    diffusive = m > 1.0 - 2.0 / n

    if lam > 0.0:
        if newt < B and diffusive:
            return Regime(
                "WeakSingularInterior",
                (f"2-n={newt} < B={B} < A={A} <= 2", f"m={m} > 1-2/n={1.0 - 2.0 / n}"),
            )
        if B == newt and diffusive:
            return Regime(
                "WeakSingularNewtonianB",
                (f"B={B} = 2-n", f"A={A} <= 2", f"m={m} > 1-2/n={1.0 - 2.0 / n}"),
            )
        if B < newt <= A and diffusive:
            return Regime(
                "StrongSingular",
                (f"-n={-n} < B={B} < 2-n={newt} <= A={A} <= 2",
                 f"m={m} > 1-2/n={1.0 - 2.0 / n}"),
            )
        return Regime("Unclassified", (f"lam={lam}, A={A}, B={B}, m={m} match no regime",))

    balance = m - (1.0 - A / n)
    if abs(balance) <= FAIR_COMPETITION_TOL:
        return Regime(
            "FairCompetition",
            (f"m={m} = 1-A/n={1.0 - A / n} within {FAIR_COMPETITION_TOL}",),
        )
    if A == newt and diffusive:
        return Regime(
            "AttractiveNewtonian",
            (f"A={A} = 2-n", f"m={m} > 1-2/n={1.0 - 2.0 / n}"),
        )
    if newt < A and balance > FAIR_COMPETITION_TOL:
        return Regime(
            "AttractiveDiffusionDominated",
            (f"2-n={newt} < A={A} <= 2", f"m={m} > 1-A/n={1.0 - A / n}"),
        )
    return Regime("Unclassified", (f"lam=0, A={A}, m={m} match no regime",))


def _power_term(exponent: float, r: float) -> float:
    # convention r^0 / 0 := log r
    if exponent == 0.0:
        return math.log(r)
    return r**exponent / exponent


def potential_value(params: PotentialParams, r: float) -> float:
    """Evaluate U(r) = r^A/A - lam r^B/B with log replacing any zero-exponent term."""
    if r <= 0.0:
        raise ParameterDomainError(f"potential is singular at r <= 0, got r={r}")
    value = _power_term(params.A, r)
    if params.lam > 0.0:
        value -= params.lam * _power_term(params.B, r)
    return value


def _require_weak_interior(params: PotentialParams) -> None:
    if params.lam <= 0.0 or params.B <= params.newtonian_exponent:
        raise ParameterDomainError(
            "requires the attractive-repulsive interior range lambda > 0 and "
            f"2-n < B < A <= 2; got lambda={params.lam}, B={params.B}, n={params.n}"
        )


def laplacian_mass_f(params: PotentialParams, r: float) -> float:
    """Radial density f(r) = (A-2+n) r^{A-2} - lam (B-2+n) r^{B-2} of Delta U.

    Only meaningful in the weak-singularity interior range 2-n < B < A <= 2,
    where Delta U is a locally integrable function.
    """
    _require_weak_interior(params)
    if r <= 0.0:
        raise ParameterDomainError(f"f is defined for r > 0, got r={r}")
    n = params.n
    return (params.A - 2.0 + n) * r ** (params.A - 2.0) - params.lam * (
        params.B - 2.0 + n
    ) * r ** (params.B - 2.0)


def repulsion_zero_r0(params: PotentialParams) -> float:
    """Unique zero r0 of f: f < 0 on (0, r0) and f >= 0 on [r0, inf).

    r0 = (lam (B-2+n) / (A-2+n))^{1/(A-B)}; the lam factor rescales the
    repulsive term linearly, reducing to the unit-strength formula at lam = 1.
    """
    _require_weak_interior(params)
    n = params.n
    ratio = params.lam * (params.B - 2.0 + n) / (params.A - 2.0 + n)
    return ratio ** (1.0 / (params.A - params.B))


@dataclass(frozen=True)
class ConvolutionTerm:
    """coefficient * (|x|^exponent convolved with the density)."""

    coefficient: float
    exponent: float


@dataclass(frozen=True)
class LocalTerm:
    """coefficient * density(x); arises from Newtonian-exponent parts of the kernel."""

    coefficient: float
    source: str  # "attraction" or "repulsion"


@dataclass(frozen=True)
class FractionalTerm:
    """coefficient * (-Delta)^order applied to the density."""

    coefficient: float
    order: float


@dataclass(frozen=True)
class InteractionLaplacianForm:
    """Delta(U * rho) as a signed sum of convolution, local and fractional terms."""

    terms: tuple

    def convolution_terms(self):
        return tuple(t for t in self.terms if isinstance(t, ConvolutionTerm))

    def local_terms(self):
        return tuple(t for t in self.terms if isinstance(t, LocalTerm))

    def fractional_terms(self):
        return tuple(t for t in self.terms if isinstance(t, FractionalTerm))


def _attraction_terms(params: PotentialParams):
    n, A = params.n, params.A
    newt = params.newtonian_exponent
    if A > newt:
        return (ConvolutionTerm(A - 2.0 + n, A - 2.0),)
    if A == newt:
        return (LocalTerm(n * unit_ball_volume(n), "attraction"),)
    # -n < A < 2-n: same inverse-fractional-Laplacian route as the repulsive
    # kernel, with the sign of the attractive term.
    return (FractionalTerm(-riesz_normalization(n, (A + n) / 2.0) / A, 1.0 - (A + n) / 2.0),)


def _repulsion_terms(params: PotentialParams):
    n, B, lam = params.n, params.B, params.lam
    newt = params.newtonian_exponent
    if B > newt:
        return (ConvolutionTerm(-lam * (B - 2.0 + n), B - 2.0),)
    if B == newt:
        return (LocalTerm(-lam * n * unit_ball_volume(n), "repulsion"),)
    return (FractionalTerm(lam * riesz_normalization(n, (B + n) / 2.0) / B, 1.0 - (B + n) / 2.0),)


def interaction_laplacian_form(params: PotentialParams) -> InteractionLaplacianForm:
    """Symbolic decomposition of Delta(U * rho), signs as they enter the equation.

    Newtonian exponents contribute local terms +n alpha_n rho (attraction) and
    -lam n alpha_n rho (repulsion); exponents below 2-n contribute fractional
    terms lam C(n,(B+n)/2)/B * (-Delta)^{1-(B+n)/2} (negative, since B < 0).
    """
    terms = _attraction_terms(params)
    if params.lam > 0.0:
        terms = terms + _repulsion_terms(params)
    return InteractionLaplacianForm(terms)
