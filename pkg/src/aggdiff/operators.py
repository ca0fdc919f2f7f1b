"""Discrete spatial operators on the box.

Free-space convolutions (interaction gradient, Riesz potential) zero-pad the
box to double extent so the FFT realizes exact linear convolution; spectral
fractional powers apply the |xi|^{2s} multiplier on the same padded box, with
the zero mode annihilated.  Near-origin kernel cells are replaced by exact cell
averages (Gauss-Legendre on the 8 neighbors, an equal-area disk at the origin)
when the kernel is locally integrable, and by the |x| -> sqrt(|x|^2 + eps^2)
mollification otherwise.
"""

from __future__ import annotations

import math
import threading
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .field import DensityField, Grid, FieldDomainError
from .kernel_model import ParameterDomainError, PotentialParams, riesz_normalization

__all__ = [
    "FractionalOrder",
    "KernelCache",
    "diffusion_term",
    "interaction_gradient",
    "fractional_laplacian",
    "riesz_potential",
    "dissipation_functional",
    "sv_gap",
]

_GL_POINTS = 24  # Gauss-Legendre order for near-origin cell averages


class FractionalOrder:
    """Order s of (-Delta)^s with 0 < s < 1."""

    __slots__ = ("s",)

    def __init__(self, s: float):
        s = float(s)
        if not 0.0 < s < 1.0:
            raise ParameterDomainError(f"fractional order must satisfy 0 < s < 1, got {s}")
        self.s = s

    def __float__(self):
        return self.s


def _order_value(s, allow_boundary=False) -> float:
    s = float(s)
    hi = 1.0 if allow_boundary else math.nextafter(1.0, 0.0)
    if not 0.0 < s <= hi:
        raise ParameterDomainError(f"fractional order out of range: {s}")
    return s


def _gl_nodes(a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(_GL_POINTS)
    return 0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w


def _cell_average_2d(func, cx: float, cy: float, h: float) -> float:
    """Gauss-Legendre average of func(X, Y) over the cell centered at (cx, cy)."""
    xs, wx = _gl_nodes(cx - h / 2.0, cx + h / 2.0)
    ys, wy = _gl_nodes(cy - h / 2.0, cy + h / 2.0)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    vals = func(X, Y)
    return float(wx @ vals @ wy) / h**2


def _displacements(grid: Grid):
    n = grid.cells_per_axis
    d = (np.arange(2 * n) - n) * grid.h
    return np.meshgrid(d, d, indexing="ij")


def _wrap_kernel(kernel: np.ndarray, n: int) -> np.ndarray:
    # displacement index d+n -> FFT index d mod 2n, so conv picks K(x_i - x_j)
    return np.roll(kernel, (-n, -n), axis=(-2, -1))


class KernelCache:
    """Precomputed FFT of the padded interaction-gradient kernel for one grid.

    Immutable after construction; safe to share across threads and steps.
    """

    def __init__(self, grid: Grid, params: PotentialParams, eps: float | None = None):
        if grid.n_dim != 2:
            raise FieldDomainError("interaction kernels are built on 2d grids")
        if params.n != 2:
            raise ParameterDomainError(
                f"potential dimension n={params.n} must match the 2d PDE grid"
            )
        self.grid = grid
        self.params = params
        self.eps = grid.h / 2.0 if eps is None else float(eps)
        kx, ky = self._gradient_kernel()
        n = grid.cells_per_axis
        self._khat = sfft.rfft2(np.stack([_wrap_kernel(kx, n), _wrap_kernel(ky, n)]), axes=(-2, -1))
        self._pad_shape = (2 * n, 2 * n)
        self._scratch = threading.local()  # per-thread work buffers; cache stays read-only

    def _radial_terms(self):
        # gradient kernel x * g(|x|) with g(r) = r^{A-2} - lam r^{B-2}
        p = self.params
        terms = [(1.0, p.A)]
        if p.lam > 0.0:
            terms.append((-p.lam, p.B))
        return terms

    def _gradient_kernel(self):
        grid = self.grid
        h = grid.h
        dx, dy = _displacements(grid)
        r = np.hypot(dx, dy)
        n_half = grid.cells_per_axis
        kx = np.zeros_like(r)
        ky = np.zeros_like(r)
        eps = self.eps
        for coef, expo in self._radial_terms():
            integrable = expo > 1.0 - grid.n_dim  # |x| r^{expo-2} ~ r^{expo-1} near 0
            if integrable:
                with np.errstate(divide="ignore", invalid="ignore"):
                    g = np.where(r > 0.0, r ** (expo - 2.0), 0.0)
                tx = dx * g
                ty = dy * g
                # origin cell: exact average of an odd kernel vanishes
                tx[n_half, n_half] = 0.0
                ty[n_half, n_half] = 0.0
                for di in (-1, 0, 1):
                    for dj in (-1, 0, 1):
                        if di == 0 and dj == 0:
                            continue
                        cx, cy = di * h, dj * h
                        tx[n_half + di, n_half + dj] = _cell_average_2d(
                            lambda X, Y: X * (X**2 + Y**2) ** ((expo - 2.0) / 2.0), cx, cy, h
                        )
                        ty[n_half + di, n_half + dj] = _cell_average_2d(
                            lambda X, Y: Y * (X**2 + Y**2) ** ((expo - 2.0) / 2.0), cx, cy, h
                        )
            else:
                g = (r**2 + eps**2) ** ((expo - 2.0) / 2.0)
                tx = dx * g
                ty = dy * g
            kx += coef * tx
            ky += coef * ty
        return kx, ky

    def convolve_gradient(self, values: np.ndarray) -> np.ndarray:
        """grad(U * rho) sampled at cell centers; returns array (2, N, N)."""
        n = self.grid.cells_per_axis
        sc = self._scratch
        if not hasattr(sc, "pad"):
            sc.pad = np.zeros(self._pad_shape)
            sc.prod = np.empty_like(self._khat)
        sc.pad[:n, :n] = values
        vhat = sfft.rfft2(sc.pad)
        np.multiply(vhat[None, :, :], self._khat, out=sc.prod)
        out = sfft.irfft2(sc.prod, s=self._pad_shape, axes=(-2, -1), overwrite_x=True)
        return out[:, :n, :n] * self.grid.cell_volume


def interaction_gradient(field: DensityField, params: PotentialParams, cache: KernelCache) -> np.ndarray:
    """Free-space discrete convolution of the density with grad U."""
    if cache.grid != field.grid or cache.params != params:
        raise FieldDomainError("kernel cache was built for a different grid or potential")
    return cache.convolve_gradient(field.values)


def diffusion_term(field: DensityField, m: float) -> np.ndarray:
    """Conservative centered discretization of Laplacian(v^m), zero-flux walls.

    Returns the cell rate array; flux-form telescoping makes the rates sum to
    zero exactly.
    """
    v = field.values
    h = field.grid.h
    w = _power(v, m)
    rate = np.zeros_like(v)
    for axis in range(v.ndim):
        g = np.diff(w, axis=axis) / h  # interior face gradients; walls carry zero flux
        shape = list(v.shape)
        shape[axis] = 1
        zero = np.zeros(shape)
        flux = np.concatenate([zero, g, zero], axis=axis)
        rate += np.diff(flux, axis=axis) / h
    return rate


def _power(v: np.ndarray, expo: float) -> np.ndarray:
    """v**expo with fast paths for the exponents the solver hits constantly."""
    if expo == 1.0:
        return v
    if expo == 2.0:
        return v * v
    if expo == 0.5:
        return np.sqrt(v)
    if expo == 1.5:
        return v * np.sqrt(v)
    return v**expo


def _spectral_sym(shape, h):
    """|xi|^2 on the rfftn grid of a `shape` box with spacing h."""
    freqs = [2.0 * math.pi * np.fft.fftfreq(n, d=h) for n in shape[:-1]]
    freqs.append(2.0 * math.pi * np.fft.rfftfreq(shape[-1], d=h))
    xi2 = np.zeros([len(f) for f in freqs])
    for ax, f in enumerate(freqs):
        sl = [None] * len(freqs)
        sl[ax] = slice(None)
        xi2 = xi2 + (f**2)[tuple(sl)]
    return xi2


@lru_cache(maxsize=32)
def _multiplier(shape: tuple, h: float, power: float) -> np.ndarray:
    xi2 = _spectral_sym(shape, h)
    with np.errstate(divide="ignore"):
        mult = xi2 ** (power / 2.0)
    mult[(0,) * mult.ndim] = 0.0  # operator defined modulo constants
    return mult


def spectral_fractional(values: np.ndarray, h: float, s: float, pad: bool = True) -> np.ndarray:
    """Core |xi|^{2s} multiplier; pad=True suppresses periodic images."""
    shape = values.shape
    if pad:
        big = tuple(2 * n for n in shape)
        work = np.zeros(big)
        work[tuple(slice(0, n) for n in shape)] = values
    else:
        big = shape
        work = values
    mult = _multiplier(big, h, 2.0 * s)
    out = sfft.irfftn(sfft.rfftn(work) * mult, s=big)
    if pad:
        out = out[tuple(slice(0, n) for n in shape)]
    return out


def fractional_laplacian(field: DensityField, s, pad: bool = True) -> np.ndarray:
    """(-Delta)^s by spectral multiplier on the zero-padded box; zero mode killed.

    s may be a FractionalOrder or a float in (0, 1]; s = 1 is the diagnostic
    boundary case reproducing the spectral -Delta.
    """
    s = _order_value(s, allow_boundary=True)
    return spectral_fractional(field.values, field.grid.h, s, pad=pad)


@lru_cache(maxsize=16)
def _riesz_kernel_hat(n_cells: int, h: float, s: float):
    """rfft2 of the wrapped free-space Riesz kernel C(2,s)|x|^{-(2-2s)}.

    Far cells carry the cell-average curvature term (h^2/24) Lap(r^a) = (h^2/24)
    a^2 r^{a-2} on top of the midpoint sample; this keeps the quadrature second
    order uniformly up to the near-origin block, which is handled exactly.
    """
    c = riesz_normalization(2, s)
    d = (np.arange(2 * n_cells) - n_cells) * h
    dx, dy = np.meshgrid(d, d, indexing="ij")
    r = np.hypot(dx, dy)
    expo = -(2.0 - 2.0 * s)
    with np.errstate(divide="ignore"):
        kern = np.where(r > 0.0, r**expo * (1.0 + (h * h / 24.0) * expo**2 / r**2), 0.0)
    # origin cell: exact average over the equal-area disk, radius h/sqrt(pi)
    r_eq = h / math.sqrt(math.pi)
    kern[n_cells, n_cells] = (2.0 * math.pi / h**2) * r_eq ** (expo + 2.0) / (expo + 2.0)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            kern[n_cells + di, n_cells + dj] = _cell_average_2d(
                lambda X, Y: (X**2 + Y**2) ** (expo / 2.0), di * h, dj * h, h
            )
    return sfft.rfft2(_wrap_kernel(c * kern, n_cells))


def riesz_potential(field: DensityField, s) -> np.ndarray:
    """(-Delta)^{-s} u by free-space convolution with C(n,s) |x|^{-(n-2s)}."""
    s = _order_value(s)
    grid = field.grid
    if grid.n_dim != 2:
        raise FieldDomainError("riesz_potential is implemented on 2d grids")
    n = grid.cells_per_axis
    khat = _riesz_kernel_hat(n, grid.h, s)
    pad = np.zeros((2 * n, 2 * n))
    pad[:n, :n] = field.values
    out = sfft.irfft2(sfft.rfft2(pad) * khat, s=(2 * n, 2 * n))
    return out[:n, :n] * grid.cell_volume


def dissipation_functional(field: DensityField, m: float, p: float) -> float:
    """Discrete integral of |grad(v^{(m+p-1)/2})|^2 (centered interior, one-sided walls)."""
    if p < 1.0:
        raise FieldDomainError(f"requires p >= 1, got p={p}")
    v = field.values
    h = field.grid.h
    w = _power(v, (m + p - 1.0) / 2.0)
    acc = np.zeros_like(v)
    for axis in range(v.ndim):
        g = np.gradient(w, h, axis=axis)
        acc += g * g
    return float(acc.sum()) * field.grid.cell_volume


def sv_gap(field: DensityField, gamma: float, alpha: float, pad: bool = True) -> float:
    """LHS - RHS of the fractional chain-rule inequality

        int v^{gamma-1} (-Delta)^{alpha/2} v
            >= (4(gamma-1)/gamma^2) int |(-Delta)^{alpha/4} v^{gamma/2}|^2 ,

    which holds with gap >= 0 for the discrete spectral operator because its
    semigroup is positivity preserving.  gamma = 2 is the Plancherel boundary
    case with exact equality.  Both integrals live on the (padded) torus the
    operator acts on: the zero-padded field satisfies pad(v)^q = pad(v^q), so
    the left side is unchanged, but the right-side energy spreads over the
    whole torus and must be summed there.
    """
    if gamma < 2.0:
        raise FieldDomainError(f"requires gamma >= 2, got gamma={gamma}")
    if not 0.0 < alpha < 2.0:
        raise FieldDomainError(f"requires 0 < alpha < 2, got alpha={alpha}")
    v = field.values
    h = field.grid.h
    vol = field.grid.cell_volume
    if pad:
        big = tuple(2 * n for n in v.shape)
        work = np.zeros(big)
        work[tuple(slice(0, n) for n in v.shape)] = v
    else:
        work = v
    lhs = float(
        (_power(work, gamma - 1.0) * spectral_fractional(work, h, alpha / 2.0, pad=False)).sum()
    ) * vol
    w = spectral_fractional(_power(work, gamma / 2.0), h, alpha / 4.0, pad=False)
    rhs = 4.0 * (gamma - 1.0) / gamma**2 * float((w * w).sum()) * vol
    return lhs - rhs
