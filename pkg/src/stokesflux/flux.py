"""Boundary flux phi(xi', s) = g(xi') h(s) e_n and its exact smoothings.

The spatial profile g is a product (or a dipole difference of shifted
products) of one scalar bump G built from a quintic smoothstep: G = 1 on
|zeta| < 1/(2 sqrt(n-1)), G = 0 outside |zeta| >= 4/(5 sqrt(n-1)), even,
monotone on each side, C^2.  The temporal profile h vanishes outside
[1/4, 1], equals (1-s)**a on [1/2, 1], and crosses [1/4, 1/2] through a
fixed C^1 cubic bridge so results are reproducible bit for bit.

Because G is piecewise polynomial, its convolution with a 1-D heat kernel
gamma(., tau) has a closed form in erf and Gaussians.  All layer-potential
evaluations in :mod:`stokesflux.flow` reduce to these smoothed factors, so
they are implemented here once, vectorized, and validated against direct
quadrature in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import erfc

from .errors import ConfigError, DimensionError, DomainError

__all__ = [
    "FluxSpec",
    "FluxNorms",
    "bump_profile",
    "bump_breakpoints",
    "g_spatial",
    "h_time",
    "flux",
    "smoothed_profile_factor",
    "smoothed_g",
    "flux_norms",
]

_SHAPES = ("single", "dipole")
_DIPOLE_OFFSET = 10.0


@dataclass(frozen=True)
class FluxSpec:
    """Boundary flux parameters: time exponent, bump geometry, dimension."""

    a: float = 0.5
    shape: str = "single"
    n: int = 3

    def __post_init__(self):
        if not (0.0 < self.a <= 0.5):
            raise ConfigError(f"a must be in (0, 1/2], got {self.a}")
        if self.shape not in _SHAPES:
            raise ConfigError(f"shape must be one of {_SHAPES}, got {self.shape!r}")
        if self.n < 2:
            raise DimensionError(f"n must be >= 2, got {self.n}")
        if self.shape == "dipole" and self.n != 3:
            raise DimensionError("dipole bumps are defined for n = 3 only")

    def to_json_dict(self) -> dict:
        return {"a": self.a, "shape": self.shape, "n": self.n}

    @classmethod
    def from_json_dict(cls, d: dict) -> "FluxSpec":
        unknown = set(d) - {"a", "shape", "n"}
        if unknown:
            raise ConfigError(f"unknown flux config keys: {sorted(unknown)}")
        return cls(a=float(d.get("a", 0.5)), shape=str(d.get("shape", "single")),
                   n=int(d.get("n", 3)))


@dataclass(frozen=True)
class FluxNorms:
    """Sup norms of the flux entering the envelope constants."""

    n1: float
    n2: float


# ---------------------------------------------------------------------------
# scalar bump profile


@lru_cache(maxsize=None)
def _bump_pieces(n: int, deriv: int):
    """Piecewise polynomial data of the m-th derivative of the bump.

    Returns (breaks, list-of-coefficient-arrays); pieces live between
    consecutive breaks, zero outside.  deriv 0..3 supported (the bump is
    C^2, so the third derivative is piecewise with jumps).
    """
    root = math.sqrt(n - 1)
    c1 = 0.5 / root
    c2 = 0.8 / root
    w = c2 - c1
    tau = Polynomial([-c1 / w, 1.0 / w])  # (zeta - c1)/w
    smoothstep = 10.0 * tau ** 3 - 15.0 * tau ** 4 + 6.0 * tau ** 5
    right = Polynomial([1.0]) - smoothstep
    # mirror: left(zeta) = right(-zeta)
    coef = right.coef.copy()
    coef[1::2] *= -1.0
    left = Polynomial(coef)
    plateau = Polynomial([1.0])
    for _ in range(deriv):
        left = left.deriv()
        plateau = plateau.deriv()
        right = right.deriv()
    breaks = np.array([-c2, -c1, c1, c2])
    return breaks, [left.coef, np.atleast_1d(plateau.coef), right.coef]


def bump_breakpoints(n: int) -> np.ndarray:
    """Knots of the piecewise-polynomial bump (kinks of its derivatives)."""
    return _bump_pieces(n, 0)[0].copy()


def bump_profile(zeta, n: int = 3, deriv: int = 0):
    """The scalar bump G and its derivatives, vectorized over zeta."""
    if deriv not in (0, 1, 2, 3):
        raise DomainError("bump derivatives supported up to order 3")
    breaks, coefs = _bump_pieces(n, deriv)
    z = np.asarray(zeta, dtype=float)
    out = np.zeros_like(z)
    idx = np.searchsorted(breaks, z, side="right") - 1
    for piece in range(3):
        mask = idx == piece
        if np.any(mask):
            out[mask] = np.polynomial.polynomial.polyval(z[mask], coefs[piece])
    return out if out.ndim else float(out)


def g_spatial(xiprime, spec: FluxSpec, deriv=None):
    """Spatial profile g (single product bump or dipole) with derivatives.

    ``deriv`` is a per-axis derivative multi-index of length n-1 (total
    order <= 3); None means no derivative.  Vectorized over leading axes of
    ``xiprime`` (shape (..., n-1)).
    """
    xi = np.asarray(xiprime, dtype=float)
    m = spec.n - 1
    if xi.shape[-1] != m:
        raise DomainError(f"expected tangential vectors of length {m}")
    orders = tuple(deriv) if deriv is not None else tuple([0] * m)
    if len(orders) != m or any(o < 0 for o in orders):
        raise DomainError("bad derivative multi-index")
    if sum(orders) > 3:
        raise DomainError("g derivatives supported up to total order 3")
    if spec.shape == "single":
        out = np.ones(xi.shape[:-1], dtype=float)
        for j in range(m):
            out = out * bump_profile(xi[..., j], spec.n, orders[j])
        return out if np.ndim(out) else float(out)
    # dipole: G(xi1 + 10) G(xi2) - G(xi1 - 10) G(xi2)
    f2 = bump_profile(xi[..., 1], spec.n, orders[1])
    plus = bump_profile(xi[..., 0] + _DIPOLE_OFFSET, spec.n, orders[0])
    minus = bump_profile(xi[..., 0] - _DIPOLE_OFFSET, spec.n, orders[0])
    out = (plus - minus) * f2
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# temporal profile


def _bridge_poly(a: float):
    """Cubic q with q(0)=q'(0)=0, q(1)=1, q'(1) matching h'(1/2+)."""
    alpha = -a / 2.0 - 2.0
    beta = 3.0 + a / 2.0
    return alpha, beta


def h_time(s, a: float, deriv: int = 0):
    """Temporal profile h(s) (deriv=0) or h'(s) (deriv=1), vectorized.

    h' at s = 1 is -inf for a < 1 (the Hoelder cusp); scalar input returns
    a float, possibly -inf.
    """
    if not (0.0 < a <= 0.5):
        raise DomainError("a must be in (0, 1/2]")
    if deriv not in (0, 1):
        raise DomainError("h derivatives supported up to order 1")
    s_arr = np.asarray(s, dtype=float)
    out = np.zeros_like(s_arr)
    alpha, beta = _bridge_poly(a)
    scale = 0.5 ** a

    main = (s_arr >= 0.5) & (s_arr <= 1.0)
    bridge = (s_arr >= 0.25) & (s_arr < 0.5)
    if deriv == 0:
        one_minus = np.where(main, 1.0 - s_arr, 1.0)
        out = np.where(main, one_minus ** a, out)
        tau = np.clip((s_arr - 0.25) * 4.0, 0.0, 1.0)
        qval = alpha * tau ** 3 + beta * tau ** 2
        out = np.where(bridge, np.maximum(scale * qval, 0.0), out)
    else:
        with np.errstate(divide="ignore"):
            one_minus = np.where(main, 1.0 - s_arr, 1.0)
            dmain = -a * one_minus ** (a - 1.0)
        out = np.where(main, dmain, out)
        tau = np.clip((s_arr - 0.25) * 4.0, 0.0, 1.0)
        dq = 3.0 * alpha * tau ** 2 + 2.0 * beta * tau
        out = np.where(bridge, scale * 4.0 * dq, out)
    return out if out.ndim else float(out)


def flux(xiprime, s, spec: FluxSpec):
    """Boundary data vector phi(xi', s); only the normal component is nonzero."""
    val = g_spatial(xiprime, spec) * h_time(s, spec.a)
    out = np.zeros(spec.n, dtype=float)
    out[-1] = val
    return out


# ---------------------------------------------------------------------------
# heat-smoothed bump factors (closed form)

_TAU_FLOOR = 1e-14


def _gauss_window(a0, b0):
    """0.5 (erf(b0) - erf(a0)), stable in the far field: mirroring onto
    the half-line where both arguments are mostly positive keeps the erfc
    difference free of catastrophic cancellation."""
    flip = a0 + b0 < 0.0
    aa = np.where(flip, -b0, a0)
    bb = np.where(flip, -a0, b0)
    return 0.5 * (erfc(aa) - erfc(bb))


def smoothed_profile_factor(u, tau, m: int, n: int = 3):
    """(gamma(tau) * G^{(m)})(u): bump derivative smoothed by the heat kernel.

    Exact in closed form through Gaussian moments of the polynomial pieces;
    at tau below 1e-14 falls back to the unsmoothed profile.  Broadcasts u
    against tau.
    """
    u_arr, tau_arr = np.broadcast_arrays(np.asarray(u, dtype=float),
                                         np.asarray(tau, dtype=float))
    u_arr = np.array(u_arr, dtype=float)
    tau_arr = np.array(tau_arr, dtype=float)
    # the profile derivative has definite parity; evaluating at |u| and
    # restoring the sign makes that parity exact in floating point
    sign = np.sign(u_arr) ** m if m % 2 else 1.0
    u_abs = np.abs(u_arr)
    out = np.zeros(u_arr.shape, dtype=float)
    small = tau_arr < _TAU_FLOOR
    if np.any(small):
        out[small] = bump_profile(u_abs[small], n, m)
    big = ~small
    if np.any(big):
        out[big] = _smoothed_factor_core(u_abs[big], tau_arr[big], m, n)
    out = out * sign
    return out if out.ndim else float(out)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_WIDE_TAU = 0.5
_ASYM_TAU = 30.0


@lru_cache(maxsize=None)
def _bump_taylor(n: int, deriv: int):
    """Per-piece Taylor coefficient arrays P^(j)/j! for the moment form."""
    breaks, coefs = _bump_pieces(n, deriv)
    out = []
    for coef in coefs:
        derivs = []
        cur = np.asarray(coef, dtype=float)
        j = 0
        while cur.size and np.any(cur):
            derivs.append(cur / math.factorial(j))
            cur = np.polynomial.polynomial.polyder(cur)
            j += 1
        out.append(derivs)
    return breaks, out


@lru_cache(maxsize=None)
def _bump_moments(n: int, deriv: int):
    """Monomial moments mu_k = int xi^k G^{(deriv)}(xi) dxi, k = 0..8."""
    breaks, coefs = _bump_pieces(n, deriv)
    mus = np.zeros(9)
    for piece in range(3):
        coef = coefs[piece]
        if not np.any(coef):
            continue
        a, b = breaks[piece], breaks[piece + 1]
        for k in range(9):
            shifted = np.concatenate([np.zeros(k), coef])
            integ = np.polynomial.polynomial.polyint(shifted)
            mus[k] += (np.polynomial.polynomial.polyval(b, integ)
                       - np.polynomial.polynomial.polyval(a, integ))
    return mus


def _smoothed_factor_core(u, tau, m, n):
    out = np.zeros_like(u)
    wide = tau >= _WIDE_TAU
    asym = tau >= _ASYM_TAU
    mid = wide & ~asym
    if np.any(asym):
        out[asym] = _smoothed_factor_asymptotic(u[asym], tau[asym], m, n)
    if np.any(mid):
        out[mid] = _smoothed_factor_wide(u[mid], tau[mid], m, n)
    rest = ~wide
    if np.any(rest):
        out[rest] = _smoothed_factor_moments(u[rest], tau[rest], m, n)
    return out


def _smoothed_factor_asymptotic(u, tau, m, n):
    """Moment expansion (gamma * f)(u) = sum_k mu_k (-d/du)^k gamma / k!.

    For tau >= 30 the neglected k = 9 term is below 1e-12 relative to the
    Gaussian scale since supp f is inside |xi| < 0.6.
    """
    mus = _bump_moments(n, m)
    gauss = np.exp(-u * u / (4.0 * tau)) / np.sqrt(4.0 * math.pi * tau)
    z = u / (2.0 * tau)
    it = 1.0 / (2.0 * tau)
    # Hermite-type factors H_k with (d/du)^k gauss = H_k * gauss
    H = [np.ones_like(u), -z]
    for k in range(2, 9):
        H.append(-z * H[k - 1] - (k - 1) * it * H[k - 2])
    acc = np.zeros_like(u)
    for k in range(9):
        if mus[k] == 0.0:
            continue
        acc += (mus[k] / math.factorial(k)) * ((-1.0) ** k) * H[k]
    return acc * gauss


def _smoothed_factor_wide(u, tau, m, n):
    """Fixed Gauss-Legendre panels: for tau >= 0.5 the Gaussian varies
    slowly across each bump piece, so a 16-node rule is exact to roundoff
    and avoids the cancellation of the moment recurrence."""
    breaks, coefs = _bump_pieces(n, m)
    total = np.zeros_like(u)
    for piece in range(3):
        coef = coefs[piece]
        if not np.any(coef):
            continue
        alpha, beta = breaks[piece], breaks[piece + 1]
        half = 0.5 * (beta - alpha)
        nodes = 0.5 * (alpha + beta) + half * _GL_NODES
        pvals = np.polynomial.polynomial.polyval(nodes, coef)
        diff = u[..., None] - nodes
        gauss = np.exp(-diff * diff / (4.0 * tau[..., None])) \
            / np.sqrt(4.0 * np.pi * tau[..., None])
        total += half * np.sum(_GL_WEIGHTS * pvals * gauss, axis=-1)
    return total


def _smoothed_factor_moments(u, tau, m, n):
    """Taylor-at-u form: the convolution over piece [a, b] equals
    sum_j P^(j)(u)/j! M_j with central Gaussian moments M_j over
    (a - u, b - u), computed by a stable two-term recurrence."""
    breaks, taylor = _bump_taylor(n, m)
    inv_sq = 1.0 / np.sqrt(4.0 * tau)
    gauss_norm = 1.0 / np.sqrt(4.0 * np.pi * tau)
    two_tau = 2.0 * tau
    total = np.zeros_like(u)
    for piece in range(3):
        derivs = taylor[piece]
        if not derivs:
            continue
        alpha, beta = breaks[piece], breaks[piece + 1]
        A = alpha - u
        B = beta - u
        a0 = A * inv_sq
        b0 = B * inv_sq
        gA = gauss_norm * np.exp(-a0 * a0)
        gB = gauss_norm * np.exp(-b0 * b0)
        mom_prev2 = _gauss_window(a0, b0)
        acc = np.polynomial.polynomial.polyval(u, derivs[0]) * mom_prev2
        if len(derivs) > 1:
            mom_prev = -two_tau * (gB - gA)
            acc = acc + np.polynomial.polynomial.polyval(u, derivs[1]) * mom_prev
            Apow = A
            Bpow = B
            for j in range(2, len(derivs)):
                mom = -two_tau * (Bpow * gB - Apow * gA) \
                    + two_tau * (j - 1) * mom_prev2
                acc = acc + np.polynomial.polynomial.polyval(u, derivs[j]) * mom
                mom_prev2, mom_prev = mom_prev, mom
                Apow = Apow * A
                Bpow = Bpow * B
        total += acc
    return total


def smoothed_g(spec: FluxSpec, wprime, tau, orders=None):
    """(Gamma'(tau) * d^orders g)(w'): tangentially heat-smoothed profile.

    ``orders`` is the per-axis derivative multi-index; broadcasts ``wprime``
    (shape (..., n-1)) against ``tau``.  This is the closed-form core of
    every flow integrand in :mod:`stokesflux.flow`.
    """
    m = spec.n - 1
    w = np.asarray(wprime, dtype=float)
    if w.shape[-1] != m:
        raise DomainError(f"expected tangential vectors of length {m}")
    orders = tuple(orders) if orders is not None else tuple([0] * m)
    if len(orders) != m:
        raise DomainError("bad derivative multi-index")
    tau_arr = np.asarray(tau, dtype=float)
    if spec.shape == "single":
        out = None
        for j in range(m):
            fac = smoothed_profile_factor(w[..., j], tau_arr, orders[j], spec.n)
            out = fac if out is None else out * fac
        return out
    f2 = smoothed_profile_factor(w[..., 1], tau_arr, orders[1], spec.n)
    plus = smoothed_profile_factor(w[..., 0] + _DIPOLE_OFFSET, tau_arr, orders[0], spec.n)
    minus = smoothed_profile_factor(w[..., 0] - _DIPOLE_OFFSET, tau_arr, orders[0], spec.n)
    return (plus - minus) * f2


def bump_support_radius(spec: FluxSpec) -> float:
    """Radius of a tangential ball containing supp g."""
    if spec.shape == "dipole":
        return _DIPOLE_OFFSET + 1.0
    return 1.0


# ---------------------------------------------------------------------------
# flux norms


def flux_norms(spec: FluxSpec) -> FluxNorms:
    """N1 and N2 sup norms by grid maximization (max over multi-indices)."""
    m = spec.n - 1
    c2 = 0.8 / math.sqrt(spec.n - 1)
    zeta = np.linspace(-c2, c2, 4001)
    sup_d = [np.max(np.abs(bump_profile(zeta, spec.n, d))) for d in range(3)]
    # per-axis products: a multi-index (d1, .., dm) has sup <= prod sup_d[dj]
    def sup_grad(order):
        best = 0.0
        for combo in _multi_indices(m, order):
            val = 1.0
            for d in combo:
                val *= sup_d[d]
            best = max(best, val)
        if spec.shape == "dipole":
            best *= 2.0  # two bumps, disjoint supports: max of either
        return best

    s_grid = np.linspace(0.25, 1.0, 75001)
    h_vals = h_time(s_grid, spec.a)
    h_max = float(np.max(h_vals))
    hacc = np.abs((1.0 - s_grid[s_grid < 1.0]) ** (1.0 - spec.a)
                  * h_time(s_grid[s_grid < 1.0], spec.a, 1))
    hacc_max = float(np.max(hacc))

    g_sups = [sup_grad(j) for j in range(3)]
    n1 = (g_sups[0] + g_sups[1]) * h_max
    n2 = (g_sups[0] + g_sups[1] + g_sups[2]) * h_max \
        + (g_sups[0] + g_sups[1]) * hacc_max
    return FluxNorms(n1=n1, n2=n2)


def _multi_indices(m, order):
    if m == 1:
        yield (order,)
        return
    for first in range(order + 1):
        for rest in _multi_indices(m - 1, order - first):
            yield (first,) + rest
