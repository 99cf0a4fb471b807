"""Closed-form and quadrature-defined kernels of the half-space Stokes system.

The heat kernel and the fundamental solution of -Laplace are closed forms.
The layer functions A, B, C_i and the flux kernel K are boundary integrals
of Gaussian times power-law weights; all of them reduce to 1-D radial
integrals because the angular integral of exp(kappa <omega, e>) over the
unit sphere S^{n-2} and its moments are modified Bessel functions.  The
reductions are exponentially scaled so only exp(-(d - rho)^2 / 4t) factors
ever appear, which keeps everything finite at large arguments.

Derivatives are never taken through the adaptive quadrature: tangential
derivatives differentiate the integrand analytically (Bessel moment
chains), normal derivatives of C_i go through the layer identities
relating them to tangential ones, and the remaining time derivatives use
the heat equation for B and the harmonicity of E for A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import ive

from .errors import DimensionError, DomainError, SingularPointError
from .quad import QuadSpec, QuadResult, Singularity, integrate_interval

__all__ = [
    "Dimension",
    "SpacePoint",
    "KernelValue",
    "unit_ball_volume",
    "sphere_area",
    "c_fundamental",
    "bn_constant",
    "cn_constant",
    "heat_kernel",
    "fundamental_solution",
    "func_A",
    "func_B",
    "func_Ci",
    "ci_normal_derivative",
    "ci_yn_derivative",
    "golovkin",
    "kernel_K",
]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Dimension:
    """Space dimension n >= 2 with the half-space helpers."""

    n: int = 3

    def __post_init__(self):
        if self.n < 2:
            raise DimensionError(f"n must be >= 2, got {self.n}")

    @property
    def tangential(self) -> int:
        return self.n - 1

    @property
    def e_n(self) -> np.ndarray:
        out = np.zeros(self.n)
        out[-1] = 1.0
        return out

    def reflect(self, x) -> np.ndarray:
        """x* = (x', -x_n)."""
        out = np.array(x, dtype=float)
        out[-1] = -out[-1]
        return out

    def flip_tangential(self, xprime, i: int) -> np.ndarray:
        """x'_* differing from x' in the sign of the i-th component."""
        if not (0 <= i < self.n - 1):
            raise DomainError("tangential index out of range")
        out = np.array(xprime, dtype=float)
        out[i] = -out[i]
        return out


@dataclass(frozen=True)
class SpacePoint:
    """A point (x', x_n); x_n >= 0 for half-space points, any sign for
    kernel arguments."""

    tangential: tuple
    normal: float

    def __post_init__(self):
        vals = np.asarray(self.tangential, dtype=float)
        if not np.all(np.isfinite(vals)) or not math.isfinite(self.normal):
            raise DomainError("point components must be finite")

    @classmethod
    def of(cls, x) -> "SpacePoint":
        x = np.asarray(x, dtype=float)
        return cls(tuple(x[:-1]), float(x[-1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array(list(self.tangential) + [self.normal], dtype=float)

    @property
    def n(self) -> int:
        return len(self.tangential) + 1


@dataclass
class KernelValue:
    """A kernel evaluation with its quadrature error estimate."""

    value: float
    abs_error: float = 0.0

    def __post_init__(self):
        if self.abs_error < 0:
            raise ValueError("abs_error must be >= 0")


# ---------------------------------------------------------------------------
# constants


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / gamma_fn(n / 2.0 + 1.0)


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} in R^n."""
    return n * unit_ball_volume(n)


def c_fundamental(n: int) -> float:
    """Prefactor of E(x) = c |x|^{2-n} for n >= 3."""
    if n < 3:
        raise DimensionError("c_fundamental defined for n >= 3")
    return 1.0 / (n * (n - 2) * unit_ball_volume(n))


def cn_constant(n: int) -> float:
    """The positive constant coupling B to the flux kernel K."""
    if n < 3:
        raise DimensionError("cn_constant defined for n >= 3")
    return 4.0 * (4.0 * math.pi) ** (-n / 2.0) * c_fundamental(n)


def bn_constant(n: int) -> float:
    """Subordination constant: |z'|^{2-n} = bn * int sigma^{-1/2} heat' dsigma."""
    if n < 3:
        raise DimensionError("bn_constant defined for n >= 3")
    return 2.0 * math.pi ** ((n - 1) / 2.0) / gamma_fn((n - 2) / 2.0)


# ---------------------------------------------------------------------------
# closed forms: heat kernel and fundamental solution


def _hermite_factor(w, t, m: int):
    """H_m with d^m/dw^m exp(-w^2/4t) = H_m(w, t) exp(-w^2/4t)."""
    if m == 0:
        return np.ones_like(np.asarray(w, dtype=float))
    if m == 1:
        return -w / (2.0 * t)
    if m == 2:
        return (w * w - 2.0 * t) / (4.0 * t * t)
    if m == 3:
        return (-w ** 3 + 6.0 * t * w) / (8.0 * t ** 3)
    raise DomainError("Gaussian derivatives supported up to order 3")


def heat_kernel(x, t: float, deriv=None) -> KernelValue:
    """Heat kernel and its spatial derivatives; exactly 0 for t <= 0."""
    x = np.asarray(x, dtype=float)
    n = x.size
    deriv = tuple(deriv) if deriv is not None else tuple([0] * n)
    if len(deriv) != n:
        raise DomainError("derivative multi-index must have length n")
    if sum(deriv) > 3:
        raise DomainError("heat kernel derivatives supported up to order 3")
    if t <= 0.0:
        return KernelValue(0.0, 0.0)
    val = (4.0 * math.pi * t) ** (-n / 2.0) * math.exp(
        -float(np.dot(x, x)) / (4.0 * t))
    for xi, m in zip(x, deriv):
        if m:
            val *= float(_hermite_factor(xi, t, m))
    return KernelValue(float(val), 0.0)


def fundamental_solution(x, deriv=None) -> KernelValue:
    """Fundamental solution of -Laplace with derivatives up to order 2."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise DimensionError("need n >= 2")
    deriv = tuple(deriv) if deriv is not None else tuple([0] * n)
    order = sum(deriv)
    if order > 2:
        raise DomainError("E derivatives supported up to order 2")
    r2 = float(np.dot(x, x))
    if r2 == 0.0:
        raise SingularPointError("E is singular at the origin")
    r = math.sqrt(r2)
    area = sphere_area(n)
    if order == 0:
        if n == 2:
            return KernelValue(-math.log(r) / (2.0 * math.pi), 0.0)
        return KernelValue(c_fundamental(n) * r ** (2 - n), 0.0)
    axes = [k for k, m in enumerate(deriv) for _ in range(m)]
    if order == 1:
        i = axes[0]
        return KernelValue(-x[i] / (area * r ** n), 0.0)
    i, j = axes
    val = -((1.0 if i == j else 0.0) * r ** (-n)
            - n * x[i] * x[j] * r ** (-n - 2)) / area
    return KernelValue(float(val), 0.0)


# ---------------------------------------------------------------------------
# angular moments on S^{n-2}

_SMALL_KAPPA = 1e-6


def _phi(mu: float, kappa):
    """exp(-kappa) kappa^{-mu} I_mu(kappa), stable for all kappa >= 0."""
    kappa = np.asarray(kappa, dtype=float)
    out = np.empty_like(kappa)
    small = kappa < _SMALL_KAPPA
    if np.any(small):
        k = kappa[small]
        series = (0.5 ** mu / gamma_fn(mu + 1.0)
                  * (1.0 + k * k / (4.0 * (mu + 1.0))))
        out[small] = series * np.exp(-k)
    big = ~small
    if np.any(big):
        k = kappa[big]
        out[big] = ive(mu, k) / k ** mu
    return out


def _omega_chain(kappa, n: int, top: int):
    """Scaled angular moments exp(-kappa) * d^m/dkappa^m of
    int_{S^{n-2}} exp(kappa <omega, e>) domega, for m = 0..top."""
    nu = (n - 3) / 2.0
    c = (2.0 * math.pi) ** ((n - 1) / 2.0)
    kappa = np.asarray(kappa, dtype=float)
    phis = [_phi(nu + j, kappa) for j in range(top + 2)]
    out = [c * phis[0]]
    if top >= 1:
        out.append(c * kappa * phis[1])
    if top >= 2:
        out.append(c * (phis[1] + kappa * kappa * phis[2]))
    if top >= 3:
        out.append(c * (3.0 * kappa * phis[2] + kappa ** 3 * phis[3]))
    return out


def _gauss_omega_derivs(d: float, rho, t: float, n: int, top: int, base: int = 0):
    """Scaled d-derivatives of exp(-(d^2+rho^2)/4t) Omega_base(d rho / 2t).

    Returns the list for derivative orders 0..top, each to be multiplied by
    exp(-(d - rho)^2 / 4t).
    """
    rho = np.asarray(rho, dtype=float)
    kappa = d * rho / (2.0 * t)
    om = _omega_chain(kappa, n, top + base)
    om = om[base:]
    out = [om[0]]
    if top >= 1:
        out.append(-(d / (2 * t)) * om[0] + (rho / (2 * t)) * om[1])
    if top >= 2:
        out.append((d * d / (4 * t * t) - 1.0 / (2 * t)) * om[0]
                   - (d * rho / (2 * t * t)) * om[1]
                   + (rho / (2 * t)) ** 2 * om[2])
    if top >= 3:
        out.append((3 * d / (4 * t * t) - d ** 3 / (8 * t ** 3)) * om[0]
                   + (3 * d * d * rho / (8 * t ** 3) - 3 * rho / (4 * t * t)) * om[1]
                   - (3 * d * rho * rho / (8 * t ** 3)) * om[2]
                   + (rho / (2 * t)) ** 3 * om[3])
    return out


def _radial_hints(d: float, t: float, extra_scales=()):
    w = math.sqrt(4.0 * t)
    hints = [d + k * w for k in (-6, -3, -1, 0, 1, 3, 6)]
    for s in extra_scales:
        if s > 0:
            hints.extend([0.3 * s, s, 3.0 * s, 10.0 * s])
    return [h for h in hints if h > 0]


def _rho_cutoff(d: float, t: float) -> float:
    return d + 9.0 * math.sqrt(4.0 * t) + 1e-3


# ---------------------------------------------------------------------------
# radial-function calculus


def _radial_scalar_derivs(vhat, S, dist, alpha):
    """Multi-index tangential derivatives of a radial scalar S(|v'|).

    S is the list [S, S', S'', (S''')] of radial derivatives; alpha the
    multi-index (total order <= 3).
    """
    order = sum(alpha)
    if order == 0:
        return S[0]
    axes = [k for k, m in enumerate(alpha) for _ in range(m)]
    if order == 1:
        return vhat[axes[0]] * S[1]
    if order == 2:
        j, k = axes
        dd = 1.0 if j == k else 0.0
        return vhat[j] * vhat[k] * S[2] + (dd - vhat[j] * vhat[k]) * S[1] / dist
    i, j, k = axes
    vi, vj, vk = vhat[i], vhat[j], vhat[k]
    dij = 1.0 if i == j else 0.0
    dik = 1.0 if i == k else 0.0
    djk = 1.0 if j == k else 0.0
    triple = S[3] - 3.0 * S[2] / dist + 3.0 * S[1] / dist ** 2
    pair = S[2] / dist - S[1] / dist ** 2
    return (vi * vj * vk * triple
            + (dij * vk + dik * vj + djk * vi) * pair)


def _radial_vector_derivs(vhat, comp_i, S, dist, alpha):
    """Multi-index tangential derivatives of a vector field vhat_i S(|v'|)."""
    order = sum(alpha)
    if order == 0:
        return vhat[comp_i] * S[0]
    axes = [k for k, m in enumerate(alpha) for _ in range(m)]
    if order == 1:
        j = axes[0]
        dij = 1.0 if comp_i == j else 0.0
        return vhat[comp_i] * vhat[j] * S[1] + (dij - vhat[comp_i] * vhat[j]) * S[0] / dist
    j, k = axes
    vi, vj, vk = vhat[comp_i], vhat[j], vhat[k]
    dij = 1.0 if comp_i == j else 0.0
    dik = 1.0 if comp_i == k else 0.0
    djk = 1.0 if j == k else 0.0
    triple = S[2] - 3.0 * S[1] / dist + 3.0 * S[0] / dist ** 2
    pair = S[1] / dist - S[0] / dist ** 2
    return (vi * vj * vk * triple
            + (dij * vk + dik * vj + djk * vi) * pair)


# ---------------------------------------------------------------------------
# the flux kernel K and the layer function B


def kernel_K(xprime, t: float, spec: QuadSpec | None = None,
             radial_derivs: int = 0):
    """K(x', t) = int exp(-|x'-z'|^2/4t) |z'|^{2-n} dz' over the boundary.

    Returns a KernelValue for radial_derivs == 0, else the list of
    KernelValue for radial derivative orders 0..radial_derivs.  Dimension
    is inferred from len(x') + 1 and must be >= 3.
    """
    xprime = np.atleast_1d(np.asarray(xprime, dtype=float))
    n = xprime.size + 1
    if n < 3:
        raise DimensionError("the flux kernel K requires n >= 3")
    spec = spec or QuadSpec()
    d = float(np.linalg.norm(xprime))
    top = radial_derivs

    def integrand(rho):
        gauss = np.exp(-(d - rho) ** 2 / (4.0 * t))
        chain = _gauss_omega_derivs(d, rho, t, n, top)
        return np.stack([gauss * c for c in chain], axis=-1)

    res = integrate_interval(integrand, 0.0, _rho_cutoff(d, t), spec,
                             split_at=_radial_hints(d, t))
    vals = np.atleast_1d(res.value)
    out = [KernelValue(float(vals[j]), res.abs_error) for j in range(top + 1)]
    return out[0] if radial_derivs == 0 else out


def _b_tangential_profile(d: float, t: float, n: int, spec: QuadSpec, top: int):
    """Radial profile W(d) with B(x, t) = exp(-x_n^2/4t) (4 pi t)^{-n/2} W(|x'|)
    and its radial derivatives 0..top."""
    if n >= 3:
        ck = c_fundamental(n)

        def integrand(rho):
            gauss = np.exp(-(d - rho) ** 2 / (4.0 * t))
            chain = _gauss_omega_derivs(d, rho, t, n, top)
            return np.stack([ck * gauss * c for c in chain], axis=-1)

        hints = _radial_hints(d, t)
        lo_sing = ()
    else:
        def integrand(rho):
            gauss = np.exp(-(d - rho) ** 2 / (4.0 * t))
            chain = _gauss_omega_derivs(d, rho, t, n, top)
            w = -np.log(rho) / (2.0 * math.pi)
            return np.stack([w * gauss * c for c in chain], axis=-1)

        hints = _radial_hints(d, t, extra_scales=(1e-4, 1e-2, 0.3))
        lo_sing = (Singularity(0.0, "power", -1e-9),)

    sub = spec.with_singularities(*lo_sing) if lo_sing else spec
    res = integrate_interval(integrand, 0.0, _rho_cutoff(d, t), sub,
                             split_at=hints)
    return np.atleast_1d(res.value), res.abs_error


def func_B(x, t: float, deriv=None, spec: QuadSpec | None = None) -> KernelValue:
    """B(x, t) and derivatives (tangential multi-index plus normal order).

    ``deriv`` is a length-n multi-index; the last entry is the normal
    order k (l + k <= 3).  The normal derivative enters only through the
    Gaussian factor exp(-x_n^2/4t), so k = 1 realizes the identity
    d_n B = -(x_n / 2t) B with no extra quadrature.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    spec = spec or QuadSpec()
    if t <= 0.0:
        raise DomainError("B requires t > 0")
    deriv = tuple(deriv) if deriv is not None else tuple([0] * n)
    if len(deriv) != n:
        raise DomainError("derivative multi-index must have length n")
    alpha, k = deriv[:-1], deriv[-1]
    if sum(alpha) + k > 3 or sum(alpha) > 3:
        raise DomainError("B derivatives supported up to total order 3")
    xprime, xn = x[:-1], x[-1]
    d = float(np.linalg.norm(xprime))
    top = sum(alpha)
    d_eval = max(d, _D_FLOOR) if top > 0 else d
    prof, err = _b_tangential_profile(d_eval, t, n, spec, top)
    pref = (4.0 * math.pi * t) ** (-n / 2.0)
    vhat = xprime / d if d > 0 else np.eye(n - 1)[0]
    tang = _radial_scalar_derivs(vhat, [pref * p for p in prof], d_eval, alpha)
    gauss = math.exp(-xn * xn / (4.0 * t)) * float(_hermite_factor(xn, t, k))
    return KernelValue(float(tang) * gauss, err * pref * abs(gauss))


def func_B_dt(x, t: float, spec: QuadSpec | None = None) -> KernelValue:
    """Time derivative of B via the heat equation (B is caloric in x, t)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    lap = KernelValue(0.0, 0.0)
    total = 0.0
    err = 0.0
    for i in range(n):
        deriv = [0] * n
        deriv[i] = 2
        part = func_B(x, t, deriv, spec)
        total += part.value
        err += part.abs_error
    lap = KernelValue(total, err)
    return lap


# ---------------------------------------------------------------------------
# the layer function A


def _a_radial_profile(d: float, xn: float, t: float, n: int, spec: QuadSpec,
                      top: int, hn: int):
    """Radial profile of A and derivatives: returns array with entries
    [d-order 0..top] for the x_n-derivative order hn."""

    def e_weight(rho):
        r2 = rho * rho + xn * xn
        if n >= 3:
            ck = c_fundamental(n)
            if hn == 0:
                return ck * r2 ** ((2.0 - n) / 2.0)
            if hn == 1:
                return ck * (2.0 - n) * xn * r2 ** (-n / 2.0)
            return ck * (2.0 - n) * (r2 ** (-n / 2.0)
                                     - n * xn * xn * r2 ** (-n / 2.0 - 1.0))
        if hn == 0:
            return -np.log(r2) / (4.0 * math.pi)
        if hn == 1:
            return -xn / (2.0 * math.pi * r2)
        return -(1.0 / r2 - 2.0 * xn * xn / r2 ** 2) / (2.0 * math.pi)

    def integrand(rho):
        gauss = np.exp(-(d - rho) ** 2 / (4.0 * t))
        chain = _gauss_omega_derivs(d, rho, t, n, top)
        w = rho ** (n - 2) * e_weight(rho)
        return np.stack([w * gauss * c for c in chain], axis=-1)

    hints = _radial_hints(d, t, extra_scales=(abs(xn),))
    sing = ()
    if n >= 3 and xn == 0.0:
        pass  # rho^{n-2} * rho^{2-n} is regular
    elif n == 2 and xn == 0.0:
        sing = (Singularity(0.0, "power", -1e-9),)
    sub = spec.with_singularities(*sing) if sing else spec
    res = integrate_interval(integrand, 0.0, _rho_cutoff(d, t), sub,
                             split_at=hints)
    pref = (4.0 * math.pi * t) ** (-n / 2.0)
    return pref * np.atleast_1d(res.value), pref * res.abs_error


def func_A(x, t: float, deriv=None, spec: QuadSpec | None = None,
           form: str = "radial") -> KernelValue:
    """A(x, t) and derivatives (tangential multi-index, normal order <= 2).

    ``form`` selects the evaluation route: "radial" reduces the boundary
    integral to a radial Bessel-moment quadrature; "direct" integrates the
    second displayed form over the plane with plain 2-D cubature (value
    only), kept as an independent route for the change-of-variables check.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    spec = spec or QuadSpec()
    if t <= 0.0:
        raise DomainError("A requires t > 0")
    deriv = tuple(deriv) if deriv is not None else tuple([0] * n)
    alpha, hn = deriv[:-1], deriv[-1]
    if sum(alpha) > 2 or hn > 2:
        raise DomainError("A derivatives supported up to order 2 per type")
    xprime, xn = x[:-1], x[-1]
    if xn == 0.0 and np.all(xprime == 0.0):
        raise SingularPointError("A undefined at the boundary origin")
    if form == "direct":
        if sum(alpha) or hn:
            raise DomainError("direct form evaluates the value only")
        return _func_a_direct(xprime, xn, t, n, spec)
    d = float(np.linalg.norm(xprime))
    d_eval = max(d, _D_FLOOR) if sum(alpha) > 0 else d
    prof, err = _a_radial_profile(d_eval, xn, t, n, spec, sum(alpha), hn)
    vhat = xprime / d if d > 0 else np.eye(n - 1)[0]
    val = _radial_scalar_derivs(vhat, list(prof), d_eval, alpha)
    return KernelValue(float(val), err)


def _func_a_direct(xprime, xn, t, n, spec):
    from .quad import integrate_disk

    if n - 1 > 2:
        raise DimensionError("direct form implemented for n <= 3")
    radius = 9.0 * math.sqrt(4.0 * t)
    pref = (4.0 * math.pi * t) ** (-n / 2.0)

    def f(z):
        diff = np.asarray(xprime)[None, :] - z
        gauss = np.exp(-np.sum(diff * diff, axis=-1) / (4.0 * t))
        r2 = np.sum(z * z, axis=-1) + xn * xn
        if n >= 3:
            ew = c_fundamental(n) * r2 ** ((2.0 - n) / 2.0)
        else:
            ew = -np.log(r2) / (4.0 * math.pi)
        return gauss * ew

    # integrand: Gamma(x'-z', 0, t) E(z', x_n); Gaussian centered at x'
    sing = None
    if xn == 0.0:
        sing = tuple(np.zeros(n - 1))
    res = integrate_disk(f, tuple(np.asarray(xprime, dtype=float)), radius,
                         spec, singular_point=sing)
    return KernelValue(pref * float(res.value), pref * res.abs_error)


def func_A_dt(x, t: float, spec: QuadSpec | None = None) -> KernelValue:
    """d/dt A via the identity dt A = -d_n^2 A - A / (2t) (E harmonic)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    dnn = [0] * n
    dnn[-1] = 2
    second = func_A(x, t, dnn, spec)
    base = func_A(x, t, None, spec)
    return KernelValue(-second.value - base.value / (2.0 * t),
                       second.abs_error + base.abs_error / (2.0 * t))


# ---------------------------------------------------------------------------
# the layer functions C_i

_D_FLOOR = 1e-7


def _ci_inner_profiles(tangential: bool, d: float, zn, t: float, n: int,
                       top: int, spec: QuadSpec):
    """z'-slice integrals of C_i as radial profiles in d = |x' - y'|.

    Returns (array of shape (len(zn), top+1), abs_error): radial derivative
    orders 0..top of the slice integral, per slice height z_n.  For
    tangential i the profile multiplies vhat_i, for the normal one it is
    the radial scalar itself.
    """
    zn = np.asarray(np.atleast_1d(zn), dtype=float)
    area = sphere_area(n)
    pref = (4.0 * math.pi * t) ** (-(n - 1) / 2.0)
    base = 1 if tangential else 0
    rho_pow = n - 1 if tangential else n - 2

    def integrand(rho):
        gauss = np.exp(-(d - rho) ** 2 / (4.0 * t))[:, None]
        weight = rho[:, None] ** rho_pow \
            * (rho[:, None] ** 2 + zn[None, :] ** 2) ** (-n / 2.0)
        if not tangential:
            weight = weight * zn[None, :]
        chain = _gauss_omega_derivs(d, rho, t, n, top, base=base)
        return np.stack([gauss * weight * c[:, None] for c in chain], axis=-1)

    zmin, zmax = float(np.min(np.abs(zn))), float(np.max(np.abs(zn)))
    hints = _radial_hints(d, t, extra_scales=(zmin, zmax))
    res = integrate_interval(integrand, 0.0, _rho_cutoff(d, t), spec,
                             split_at=hints)
    scale = -pref / area
    return scale * np.atleast_2d(res.value), abs(scale) * res.abs_error


def func_Ci(i: int, x, y, t: float, dxprime=None, dyn: int = 0,
            spec: QuadSpec | None = None) -> KernelValue:
    """The slab layer function C_i(x, y, t) and selected derivatives.

    ``i`` is 1-based (i = n is the normal direction).  ``dxprime`` is a
    tangential multi-index on x' (total order <= 2), ``dyn`` the y_n
    derivative order (<= 1).  Normal x_n derivatives are not offered here;
    use :func:`ci_normal_derivative`, which goes through the layer
    identities instead of differentiating the quadrature.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    spec = spec or QuadSpec()
    if not (1 <= i <= n):
        raise DomainError("axis index out of range")
    if x[-1] <= 0.0:
        raise DomainError("C_i requires x_n > 0")
    if dyn not in (0, 1):
        raise DomainError("y_n derivatives supported up to order 1")
    alpha = tuple(dxprime) if dxprime is not None else tuple([0] * (n - 1))
    if len(alpha) != n - 1 or sum(alpha) > 2:
        raise DomainError("tangential derivatives supported up to order 2")
    if t <= 0.0:
        return KernelValue(0.0, 0.0)

    xn = float(x[-1])
    wn = xn + float(y[-1])
    vprime = x[:-1] - y[:-1]
    d = float(np.linalg.norm(vprime))
    tangential = i < n
    if tangential and d == 0.0 and sum(alpha) == 0:
        return KernelValue(0.0, 0.0)  # odd in the i-th tangential offset
    d_eval = max(d, _D_FLOOR)
    vhat = vprime / d if d > 0 else np.eye(n - 1)[0]
    top = sum(alpha)

    inner_spec = spec.tightened(10.0)
    inner_err = [0.0]

    def z_integrand(zn):
        profs, err = _ci_inner_profiles(tangential, d_eval, zn, t, n, top,
                                        inner_spec)
        inner_err[0] = max(inner_err[0], err)
        w = wn - zn
        gfac = (_hermite_factor(w, t, 1 + dyn)
                * np.exp(-w * w / (4.0 * t)) / math.sqrt(4.0 * math.pi * t))
        return profs * gfac[:, None]

    width = math.sqrt(4.0 * t)
    hints = [wn + k * width for k in (-3, -1, 0, 1, 3)]
    hints += [s * min(xn, 1.0) for s in (1e-3, 1e-2, 0.1, 0.3)]
    res = integrate_interval(z_integrand, 0.0, xn, spec,
                             split_at=[h for h in hints if 0 < h < xn])
    z_profiles = list(np.atleast_1d(res.value))
    if tangential:
        val = _radial_vector_derivs(vhat, i - 1, z_profiles, d_eval, alpha)
    else:
        val = _radial_scalar_derivs(vhat, z_profiles, d_eval, alpha)
    return KernelValue(float(val), res.abs_error + inner_err[0] * xn)


def ci_normal_derivative(i: int, x, y, t: float, dxprime=None,
                         spec: QuadSpec | None = None) -> KernelValue:
    """d/dx_n of C_i via the layer identities (no normal-derivative kernel
    is ever integrated).

    For tangential i:  d_n C_i = d_i C_n + d_i d_n B(x - y*, t).
    For i = n:         d_n C_n = - sum_k d_k C_k - (1/2) d_n Gamma(x - y*, t).
    An optional extra tangential multi-index ``dxprime`` (total <= 1) is
    applied on top.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    spec = spec or QuadSpec()
    alpha = list(dxprime) if dxprime is not None else [0] * (n - 1)
    if sum(alpha) > 1:
        raise DomainError("extra tangential order limited to 1")
    xref = x - np.array(list(y[:-1]) + [-y[-1]])  # x - y*
    if i < n:
        a_ci = list(alpha)
        a_ci[i - 1] += 1
        cpart = func_Ci(n, x, y, t, dxprime=a_ci, spec=spec)
        bder = list(a_ci) + [1]
        bpart = func_B(xref, t, bder, spec)
        return KernelValue(cpart.value + bpart.value,
                           cpart.abs_error + bpart.abs_error)
    total = 0.0
    err = 0.0
    for k in range(1, n):
        a_ci = list(alpha)
        a_ci[k - 1] += 1
        part = func_Ci(k, x, y, t, dxprime=a_ci, spec=spec)
        total -= part.value
        err += part.abs_error
    gder = list(alpha) + [1]
    total -= 0.5 * heat_kernel(xref, t, gder).value
    return KernelValue(total, err)


def ci_yn_derivative(i: int, x, y, t: float,
                     spec: QuadSpec | None = None) -> KernelValue:
    """d/dy_n of C_i (differentiates the Gaussian slab factor only)."""
    return func_Ci(i, x, y, t, dyn=1, spec=spec)


# ---------------------------------------------------------------------------
# the Golovkin tensor


def golovkin(i: int, j: int, x, t: float, deriv=None,
             spec: QuadSpec | None = None) -> KernelValue:
    """Function part of the Golovkin tensor (the Poisson kernel of the
    half-space Stokes system) for t > 0, x_n > 0.

    ``deriv`` is (tangential multi-index, normal order k <= 1).  For j < n
    the defining combination of the heat kernel and C_i is used; for j = n
    the alternative tangential-derivative form, which is what makes the
    normal-direction estimates one power better.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    spec = spec or QuadSpec()
    if not (1 <= i <= n and 1 <= j <= n):
        raise DomainError("tensor indices out of range")
    if t <= 0.0:
        raise DomainError("the function part is defined for t > 0")
    if x[-1] <= 0.0:
        raise DomainError("golovkin requires x_n > 0")
    if deriv is None:
        alpha, k = tuple([0] * (n - 1)), 0
    else:
        alpha, k = tuple(deriv[0]), int(deriv[1])
    if k not in (0, 1):
        raise DomainError("normal derivatives supported up to order 1")
    if k == 1 and sum(alpha) > 0:
        raise DomainError("k = 1 supports no extra tangential derivatives")
    origin = np.zeros(n)

    def ci_tang(comp, extra_axis):
        a = list(alpha)
        a[extra_axis - 1] += 1
        if k == 0:
            return func_Ci(comp, x, origin, t, dxprime=a, spec=spec)
        return ci_normal_derivative(comp, x, origin, t, dxprime=a, spec=spec)

    err = 0.0
    val = 0.0
    if j < n:
        if i == j:
            gder = list(alpha) + [k + 1]
            val -= 2.0 * heat_kernel(x, t, gder).value
        part = ci_tang(i, j)
        val -= 4.0 * part.value
        err += 4.0 * part.abs_error
        return KernelValue(val, err)
    if i < n:
        part = ci_tang(n, i)
        bder = list(alpha)
        bder[i - 1] += 1
        bpart = func_B(x, t, bder + [k + 1], spec)
        val = -4.0 * part.value - 4.0 * bpart.value
        err = 4.0 * part.abs_error + 4.0 * bpart.abs_error
        return KernelValue(val, err)
    for kk in range(1, n):
        part = ci_tang(kk, kk)
        val += 4.0 * part.value
        err += 4.0 * part.abs_error
    return KernelValue(val, err)
