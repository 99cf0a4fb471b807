"""The Stokes flow generated by the boundary flux: velocity, gradient,
pressure, the singular main term, boundary-trace diagnostics, and energy.

Every term reduces to nested 1-D integrals with closed-form cores.  The
tangential convolution of any layer kernel with the flux profile is the
heat-smoothed bump of :mod:`stokesflux.flux` evaluated at a shifted
smoothing time, through two Gaussian subordination identities:

* Poisson averages   P_h[G](s) = (1/sqrt(pi)) int v^{-1/2} e^{-v}
  G(x', s + h^2/(4v)) dv   -- a fixed generalized Gauss-Laguerre rule;
* E-kernel averages  E_h[G](s) = int sigma^{-1/2} e^{-h^2/(4 sigma)}
  G(x', s + sigma) dsigma = V[G](s) - sqrt(pi) int_0^h P_r[G](s) dr,
  where V[G](s) = E_0[G](s) carries no h dependence.

The slab integrals over z_n in (0, x_n) then collapse onto weighted
h-integrals of P_h, with weights that are plain 1-D heat-kernel factors.
The time integral runs over the support of the flux only, so the flow is
exactly zero for t < 1/4.  Evaluation is batched over points sharing a
time slice, which keeps the energy quadrature tractable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .flux import FluxSpec, h_time, smoothed_profile_factor
from .kernels import KernelValue, bn_constant, c_fundamental, cn_constant
from .quad import QuadSpec, Singularity, integrate_interval

__all__ = [
    "EvalPoint",
    "FlowSample",
    "velocity",
    "gradient",
    "flow_sample",
    "pressure",
    "main_term_dnI2",
    "dnI2_true_profile",
    "boundary_trace_check",
    "energy",
    "evaluate_batch",
]

_POINT_CHUNK = 32


@dataclass(frozen=True)
class EvalPoint:
    """A space-time evaluation point (x', x_n, t) in the closed half-space."""

    xprime: tuple
    xn: float
    t: float

    def __post_init__(self):
        if self.xn < 0:
            raise DomainError("xn must be >= 0")
        if not (0.0 <= self.t <= 2.0):
            raise DomainError("t must lie in [0, 2]")

    @classmethod
    def of(cls, x, t: float) -> "EvalPoint":
        x = np.asarray(x, dtype=float)
        return cls(tuple(x[:-1]), float(x[-1]), float(t))

    @property
    def n(self) -> int:
        return len(self.xprime) + 1


@dataclass
class FlowSample:
    """Velocity, gradient matrix (entry [i, j] = d_j v_i), pressure, and
    error estimates."""

    velocity: np.ndarray
    gradient: np.ndarray | None = None
    pressure: float | None = None
    velocity_error: float = 0.0
    gradient_error: float = 0.0
    pressure_error: float = 0.0


# ---------------------------------------------------------------------------
# smoothed-bump columns for batches of derivative multi-indices


def _g_columns(spec: FluxSpec, xaxes, tau, orders_list):
    """G_beta(x', tau) for each beta in orders_list.

    ``xaxes`` is a list of per-axis coordinate arrays broadcastable against
    ``tau``; the result has shape broadcast(tau) + (ncols,).
    """
    m = spec.n - 1
    factors = {}

    def factor(axis, order):
        key = (axis, order)
        if key not in factors:
            if spec.shape == "dipole" and axis == 0:
                factors[key] = (
                    smoothed_profile_factor(xaxes[0] + 10.0, tau, order, spec.n),
                    smoothed_profile_factor(xaxes[0] - 10.0, tau, order, spec.n),
                )
            else:
                factors[key] = smoothed_profile_factor(
                    xaxes[axis], tau, order, spec.n)
        return factors[key]

    cols = []
    for orders in orders_list:
        if spec.shape == "dipole":
            plus, minus = factor(0, orders[0])
            acc = (plus - minus) * factor(1, orders[1])
        else:
            acc = None
            for axis in range(m):
                f = factor(axis, orders[axis])
                acc = f if acc is None else acc * f
        cols.append(acc)
    return np.stack(cols, axis=-1)


_Y_CUT = 6.5  # exp(-y^2) below 4e-19 past here


def _poisson_hints(hmin, hmax):
    """y-scales where G(s + h^2/(4 y^2)) turns over: y ~ h / (2 sqrt(tau))
    for the smoothing scales tau the bump responds to."""
    hints = {0.4, 1.0, 2.0, 3.5}
    for h in (hmin, hmax):
        if h > 0:
            for tau in (0.02, 0.2, 1.5):
                hints.add(h / (2.0 * math.sqrt(tau)))
    return sorted(c for c in hints if 0.0 < c < _Y_CUT)


# ---------------------------------------------------------------------------
# the batched evaluator


class _FlowBatch:
    """Flow quantities for a batch of points sharing the time t.

    xprimes has shape (npts, n-1), xns shape (npts,).  Quantities are
    requested as tuples: ("v", i), ("dv", i, j), ("dnI2", i), ("p",) with
    1-based indices, the n-th axis being the normal.
    """

    def __init__(self, spec: FluxSpec, qspec: QuadSpec, t: float,
                 xprimes, xns):
        if spec.n < 3:
            raise DimensionError("flow evaluation requires n >= 3")
        self.spec = spec
        self.qspec = qspec
        self.t = float(t)
        self.xp = np.atleast_2d(np.asarray(xprimes, dtype=float))
        self.xn = np.atleast_1d(np.asarray(xns, dtype=float))
        if np.any(self.xn <= 0.0):
            raise DomainError("flow evaluation requires x_n > 0")
        self.P = self.xn.size
        self.m = spec.n - 1
        self.ce = c_fundamental(spec.n) * bn_constant(spec.n)
        self.sq = math.sqrt(math.pi)
        self.ht = float(h_time(self.t, spec.a))
        # reported error: top-level integral estimates plus local terms;
        # raw inner-integrand errors are kept separately as diagnostics
        # (they do not map one-to-one onto the output error)
        self.err = 0.0
        self.noise = 0.0

    # -- generic helpers ------------------------------------------------

    def _xaxes(self, extra_axes: int):
        shape = (self.P,) + (1,) * extra_axes
        return [self.xp[:, j].reshape(shape) for j in range(self.m)]

    def _poisson(self, h, s, orders_list, extra_axes, y_power: int = 0):
        """P_h[G_beta](s) = (2/sqrt(pi)) int_0^inf exp(-y^2)
        G(x', s + h^2/(4 y^2)) dy, adaptively (the integrand turns over at
        h-dependent scales a fixed rule cannot track).

        y_power 2 instead computes 2 int y^2 exp(-y^2) G dy, the
        sigma^{-5/2} subordination moment used by the normal-normal
        gradient entry.
        """
        h_arr = np.asarray(h, dtype=float)
        s_arr = np.asarray(s, dtype=float)
        xaxes = self._xaxes(extra_axes + 1)
        pos = h_arr[h_arr > 0]
        hmin = float(np.min(pos)) if pos.size else 0.0
        hmax = float(np.max(h_arr))

        def integrand(y):
            ratio = h_arr[..., None] / (2.0 * y)
            tau = s_arr[..., None] + ratio * ratio
            cols = _g_columns(self.spec, xaxes, tau, orders_list)
            weight = np.exp(-y * y) * (y ** y_power if y_power else 1.0)
            out = cols * weight[:, None]
            return np.moveaxis(out, -2, 0)

        res = integrate_interval(integrand, 0.0, _Y_CUT, self.qspec,
                                 split_at=_poisson_hints(hmin, hmax))
        self.noise = max(self.noise, res.abs_error)
        scale = 2.0 if y_power else 2.0 / self.sq
        return scale * res.value

    def _v_columns(self, s, orders_list, extra_axes):
        """V[G_beta](s) = int_0^inf sigma^{-1/2} G_beta(x', s + sigma) dsigma
        via w = sqrt(sigma) plus an exact tail map; s has shape
        (P,) + extras."""
        s_arr = np.asarray(s, dtype=float)
        smax = float(np.max(s_arr))
        W1 = max(6.0, 2.5 * math.sqrt(smax + 1.0))
        xaxes = self._xaxes(extra_axes + 1)

        def head(wn):
            tau = s_arr[..., None] + wn ** 2
            cols = _g_columns(self.spec, xaxes, tau, orders_list)
            return np.moveaxis(2.0 * cols, -2, 0)

        res = integrate_interval(head, 0.0, W1, self.qspec,
                                 split_at=(0.5, 1.0, 2.0, 4.0))

        def tail(u):
            wn = W1 / u
            tau = s_arr[..., None] + wn ** 2
            cols = _g_columns(self.spec, xaxes, tau, orders_list)
            jac = (W1 / u ** 2)
            out = 2.0 * cols * jac[:, None]
            return np.moveaxis(out, -2, 0)

        tres = integrate_interval(tail, 0.0, 1.0, self.qspec,
                                  split_at=(0.05, 0.3))
        self.noise = max(self.noise, res.abs_error + tres.abs_error)
        return res.value + tres.value

    def _e0_at(self, h, s, orders_list, extra_axes):
        """E_h[G_beta](s) = V[G](s) - sqrt(pi) int_0^h P_r[G](s) dr."""
        vpart = self._v_columns(np.broadcast_to(s, np.shape(h)), orders_list,
                                extra_axes)
        gl_r, gl_w = np.polynomial.legendre.leggauss(24)
        h_arr = np.asarray(h, dtype=float)
        r = 0.5 * h_arr[..., None] * (gl_r + 1.0)  # (..., 24)
        s_b = np.broadcast_to(np.asarray(s, dtype=float)[..., None], r.shape)
        pcols = self._poisson(r, s_b, orders_list, extra_axes + 1)
        integral = 0.5 * h_arr[..., None] * np.tensordot(
            pcols, gl_w, axes=([-2], [0]))
        return vpart - self.sq * integral

    # -- slab h-integrals -------------------------------------------------

    def _slab_columns(self, s_arr, jobs):
        """int_0^{xn} weight(xn - r, s) P_r[G_beta](s) dr for each job.

        jobs: list of (weight_kind, orders); weight kinds: "g1", "g2",
        "gE" (gamma, gamma', gamma - gamma(0) factors).  Returns
        (P, S, njobs).
        """
        S = s_arr.size
        orders_list = sorted({j[1] for j in jobs})
        order_pos = {o: k for k, o in enumerate(orders_list)}

        def integrand(taus):
            # layout (P, T, S) so the point axis stays leading for the
            # bump-factor broadcasting, then move the node axis up front
            T = taus.size
            r = self.xn[:, None, None] * taus[None, :, None]  # (P, T, 1)
            r = np.broadcast_to(r, (self.P, T, S))
            s3 = np.broadcast_to(s_arr[None, None, :], (self.P, T, S))
            pcols = self._poisson(r, s3, orders_list, extra_axes=2)
            w = self.xn[:, None, None] - r  # xn - r
            out = np.empty((self.P, T, S, len(jobs)))
            cache = {}
            for cidx, (kind, orders) in enumerate(jobs):
                if kind not in cache:
                    cache[kind] = _gamma_weight(kind, w, s3)
                out[..., cidx] = pcols[..., order_pos[orders]] * cache[kind]
            out = out * self.xn[:, None, None, None]
            return np.moveaxis(out, 1, 0)  # (T, P, S, njobs)

        smid = float(np.median(s_arr))
        hints = []
        for xnv in (float(np.min(self.xn)), float(np.max(self.xn))):
            scale = math.sqrt(4.0 * smid) / max(xnv, 1e-12)
            hints += [1.0 - k * scale for k in (0.5, 2.0, 5.0)]
        hints = [h for h in hints if 0.0 < h < 1.0]
        res = integrate_interval(integrand, 0.0, 1.0, self.qspec,
                                 split_at=hints)
        self.noise = max(self.noise, res.abs_error)
        return res.value  # (P, S, njobs)

    # -- quantity assembly --------------------------------------------------

    def evaluate(self, quantities):
        """Returns array (npts, nquant) of the requested quantities."""
        out = np.zeros((self.P, len(quantities)))
        lo = max(0.0, self.t - 1.0)
        hi = self.t - 0.25
        if hi <= lo and self.ht == 0.0:
            return out  # flow vanishes before the flux switches on

        slab_jobs = []      # (kind, orders)
        v_orders = set()    # orders needing V-columns inside the s-integral
        pressure_wanted = any(q[0] == "p" for q in quantities)
        for q in quantities:
            for (kind, orders) in _slab_jobs_for(q, self.m):
                if (kind, orders) not in slab_jobs:
                    slab_jobs.append((kind, orders))
            v_orders.update(_v_orders_for(q, self.m))
        v_orders = sorted(v_orders)
        vpos = {o: k for k, o in enumerate(v_orders)}
        jpos = {j: k for k, j in enumerate(slab_jobs)}

        if hi > lo and (slab_jobs or v_orders or pressure_wanted):
            def s_integrand(sb):
                S = sb.size
                cols = []
                if slab_jobs:
                    slab = self._slab_columns(sb, slab_jobs)  # (P,S,K)
                    cols.append(slab)
                if v_orders:
                    s_b = np.broadcast_to(sb[None, :], (self.P, S))
                    vcols = self._v_columns(s_b, v_orders, extra_axes=1)
                    cols.append(vcols)  # (P,S,KV)
                if pressure_wanted:
                    s_b = np.broadcast_to(sb[None, :], (self.P, S))
                    h_b = np.broadcast_to(self.xn[:, None], (self.P, S))
                    porders = [_zero(self.m)] + [_unit2(self.m, k)
                                                 for k in range(self.m)]
                    pcols = self._poisson(h_b, s_b, porders, extra_axes=1)
                    cols.append(pcols)
                stacked = np.concatenate(cols, axis=-1)  # (P,S,C)
                hvals = h_time(self.t - sb, self.spec.a)
                quant = np.empty((self.P, S, len(quantities)))
                for qidx, q in enumerate(quantities):
                    quant[..., qidx] = self._assemble_time_integrand(
                        q, sb, stacked, jpos, vpos, len(slab_jobs), hvals)
                return np.moveaxis(quant, 1, 0)  # (S,P,nq)

            spec_t = self.qspec
            sings = []
            if lo == 0.0:
                sings.append(Singularity(0.0, "power", -0.5))
            elif pressure_wanted:
                sings.append(Singularity(lo, "power", self.spec.a - 1.0))
            if sings:
                spec_t = self.qspec.with_singularities(*sings)
            hints = [self.t - 0.5]
            xmin = float(np.min(self.xn))
            hints += [xmin * xmin * c for c in (0.25, 1.0, 4.0)]
            if lo > 0.0:
                hints += [lo + 10.0 ** (-k) for k in (1, 2, 3)]
            res = integrate_interval(
                s_integrand, lo, hi, spec_t,
                split_at=[h for h in hints if lo < h < hi])
            out += res.value
            self.err += res.abs_error

        # time-local terms (the E-only terms with h(t) or h'(t) factors)
        for qidx, q in enumerate(quantities):
            lv = self._local_term(q)
            out[:, qidx] += lv
            self.err += float(np.max(np.abs(lv))) * 3.0 * self.qspec.rel_tol
        return out

    def _assemble_time_integrand(self, q, sb, cols, jpos, vpos, nslab, hvals):
        """Per-quantity s-integrand from the stacked columns."""
        P, S = self.P, sb.size
        xn = self.xn[:, None]
        s2 = sb[None, :]
        ce, sq = self.ce, self.sq
        c2 = ce / sq
        ess = np.exp(-xn * xn / (4.0 * s2))

        def slab(kind, orders):
            return cols[..., jpos[(kind, orders)]]

        def vcol(orders):
            return cols[..., nslab + vpos[orders]]

        kind = q[0]
        if kind == "p":
            base = len(cols[0, 0]) - (self.m + 1)
            p0 = cols[..., base]
            plap = np.sum(cols[..., base + 1:base + 1 + self.m], axis=-1)
            hprime = h_time(self.t - sb, self.spec.a, 1)[None, :]
            return 2.0 * ce * s2 ** -0.5 * (hprime * p0 - hvals[None, :] * plap)
        if kind == "v":
            i = q[1]
            if i <= self.m:
                val = 2.0 * slab("g1", _unit(self.m, i - 1))
                val += c2 * xn * s2 ** -1.5 * ess * vcol(_unit(self.m, i - 1))
            else:
                val = np.zeros((P, S))
                g0 = _gamma0(xn, s2) - _gamma0(0.0, s2)
                for k in range(self.m):
                    o = _unit2(self.m, k)
                    val += 4.0 * ce * (g0 * vcol(o) - sq * slab("gE", o))
            return val * hvals[None, :]
        if kind == "dnI2":
            i = q[1]
            val = c2 * (1.0 - xn * xn / (2.0 * s2)) * s2 ** -1.5 * ess \
                * vcol(_unit(self.m, i - 1))
            return val * hvals[None, :]
        # gradients
        _, i, j = q
        if i <= self.m and j <= self.m:
            o = _unit(self.m, i - 1, j - 1)
            val = 2.0 * slab("g1", o)
            val += c2 * xn * s2 ** -1.5 * ess * vcol(o)
        elif i <= self.m:  # j = n
            o = _unit(self.m, i - 1)
            val = 2.0 * slab("g2", o)
            val += c2 * (1.0 - xn * xn / (2.0 * s2)) * s2 ** -1.5 * ess * vcol(o)
        elif j <= self.m:  # i = n
            val = np.zeros((P, S))
            g0 = _gamma0(xn, s2) - _gamma0(0.0, s2)
            for k in range(self.m):
                o = _unit2(self.m, k, j - 1)
                val += 4.0 * ce * (g0 * vcol(o) - sq * slab("gE", o))
        else:  # i = j = n
            val = np.zeros((P, S))
            g1 = _gamma_weight("g1", xn, s2)
            for k in range(self.m):
                o = _unit2(self.m, k)
                val += 4.0 * ce * (g1 * vcol(o) - sq * slab("g1", o))
        return val * hvals[None, :]

    def _local_term(self, q):
        """Terms outside the time integral: the E(x)-layer contribution
        J (with factor h(t)) and the local pressure terms."""
        kind = q[0]
        if kind == "dnI2":
            return np.zeros(self.P)
        if kind == "p":
            if self.ht == 0.0 and h_time(self.t, self.spec.a, 1) == 0.0:
                return np.zeros(self.P)
            orders = [_zero(self.m)] + [_unit2(self.m, k) for k in range(self.m)]
            e0 = self._e0_at(self.xn, np.zeros(self.P), orders, extra_axes=0)
            hp = float(h_time(self.t, self.spec.a, 1))
            lap = np.sum(e0[..., 1:], axis=-1)
            return 2.0 * self.ce * (hp * e0[..., 0] + self.ht * lap)
        if self.ht == 0.0:
            return np.zeros(self.P)
        zero_s = np.zeros(self.P)
        if kind == "v":
            i = q[1]
            if i <= self.m:
                e0 = self._e0_at(self.xn, zero_s, [_unit(self.m, i - 1)], 0)
                return -2.0 * self.ht * self.ce * e0[..., 0]
            pc = self._poisson(self.xn, zero_s, [_zero(self.m)], 0)
            return 2.0 * self.sq * self.ce * self.ht * pc[..., 0]
        _, i, j = q
        if i <= self.m and j <= self.m:
            e0 = self._e0_at(self.xn, zero_s, [_unit(self.m, i - 1, j - 1)], 0)
            return -2.0 * self.ht * self.ce * e0[..., 0]
        if i <= self.m:  # j = n
            pc = self._poisson(self.xn, zero_s, [_unit(self.m, i - 1)], 0)
            return 2.0 * self.sq * self.ce * self.ht * pc[..., 0]
        if j <= self.m:  # i = n
            pc = self._poisson(self.xn, zero_s, [_unit(self.m, j - 1)], 0)
            return 2.0 * self.sq * self.ce * self.ht * pc[..., 0]
        # d_n^2 of the E-layer: ((xn^2/4) p2 - p1/2) with the subordination
        # moments p1 = (2/xn) int v^{-1/2} e^{-v} G, p2 = (8/xn^3) int
        # v^{1/2} e^{-v} G; combines to (2 m2 - m1) / xn
        m1 = self.sq * self._poisson(self.xn, zero_s, [_zero(self.m)], 0)
        m2 = self._poisson(self.xn, zero_s, [_zero(self.m)], 0, y_power=2)
        val = (2.0 * m2[..., 0] - m1[..., 0]) / self.xn
        return -2.0 * self.ht * self.ce * val


def _gamma0(w, s):
    return np.exp(-np.asarray(w) ** 2 / (4.0 * s)) / np.sqrt(4.0 * math.pi * s)


def _gamma_weight(kind, w, s):
    g = _gamma0(w, s)
    if kind == "g1":
        return -(w / (2.0 * s)) * g
    if kind == "g2":
        return (w * w / (4.0 * s * s) - 1.0 / (2.0 * s)) * g
    if kind == "gE":
        return g - _gamma0(0.0, s)
    raise ValueError(kind)


def _zero(m):
    return tuple([0] * m)


def _unit(m, *axes):
    o = [0] * m
    for a in axes:
        o[a] += 1
    return tuple(o)


def _unit2(m, axis, extra=None):
    o = [0] * m
    o[axis] = 2
    if extra is not None:
        o[extra] += 1
    return tuple(o)


def _slab_jobs_for(q, m):
    kind = q[0]
    if kind in ("p", "dnI2"):
        return []
    if kind == "v":
        i = q[1]
        if i <= m:
            return [("g1", _unit(m, i - 1))]
        return [("gE", _unit2(m, k)) for k in range(m)]
    _, i, j = q
    if i <= m and j <= m:
        return [("g1", _unit(m, i - 1, j - 1))]
    if i <= m:
        return [("g2", _unit(m, i - 1))]
    if j <= m:
        return [("gE", _unit2(m, k, j - 1)) for k in range(m)]
    return [("g1", _unit2(m, k)) for k in range(m)]


def _v_orders_for(q, m):
    kind = q[0]
    if kind == "p":
        return []
    if kind == "v":
        i = q[1]
        if i <= m:
            return [_unit(m, i - 1)]
        return [_unit2(m, k) for k in range(m)]
    if kind == "dnI2":
        return [_unit(m, q[1] - 1)]
    _, i, j = q
    if i <= m and j <= m:
        return [_unit(m, i - 1, j - 1)]
    if i <= m:
        return [_unit(m, i - 1)]
    if j <= m:
        return [_unit2(m, k, j - 1) for k in range(m)]
    return [_unit2(m, k) for k in range(m)]


# ---------------------------------------------------------------------------
# public API


def evaluate_batch(spec: FluxSpec, qspec: QuadSpec, t: float, xprimes, xns,
                   quantities):
    """Evaluate flow quantities for points sharing the time t.

    Returns (values array of shape (npts, nquant), abs_error estimate).
    Quantities: ("v", i), ("dv", i, j), ("dnI2", i), ("p",), 1-based.
    """
    xprimes = np.atleast_2d(np.asarray(xprimes, dtype=float))
    xns = np.atleast_1d(np.asarray(xns, dtype=float))
    npts = xns.size
    vals = np.zeros((npts, len(quantities)))
    err = 0.0
    for start in range(0, npts, _POINT_CHUNK):
        sl = slice(start, min(start + _POINT_CHUNK, npts))
        batch = _FlowBatch(spec, qspec, t, xprimes[sl], xns[sl])
        vals[sl] = batch.evaluate(list(quantities))
        err = max(err, batch.err)
    return vals, err


def _point_quantities(point: EvalPoint, spec, qspec, quantities):
    vals, err = evaluate_batch(spec, qspec, point.t,
                               np.asarray([point.xprime]),
                               np.asarray([point.xn]), quantities)
    return vals[0], err


def velocity(point: EvalPoint, spec: FluxSpec,
             qspec: QuadSpec | None = None):
    """Velocity vector at an interior point; returns (vector, abs_error)."""
    qspec = qspec or QuadSpec()
    if point.xn == 0.0:
        raise DomainError("interior evaluation needs x_n > 0; "
                          "use boundary_trace_check for the trace")
    n = point.n
    quantities = [("v", i) for i in range(1, n + 1)]
    vals, err = _point_quantities(point, spec, qspec, quantities)
    return vals, err


def gradient(point: EvalPoint, spec: FluxSpec, qspec: QuadSpec | None = None,
             method: str = "analytic"):
    """Gradient matrix d_j v_i at an interior point.

    method "analytic" uses the integrated-by-parts representations;
    "fd" central finite differences of the velocity (the cross-validation
    oracle); "both" computes the two and warns when they disagree by more
    than 1e-3 relative.
    """
    qspec = qspec or QuadSpec()
    if point.xn == 0.0:
        raise DomainError("gradient needs x_n > 0")
    n = point.n
    if method in ("analytic", "both"):
        quantities = [("dv", i, j) for i in range(1, n + 1)
                      for j in range(1, n + 1)]
        vals, err = _point_quantities(point, spec, qspec, quantities)
        grad = vals.reshape(n, n)
        if method == "analytic":
            return grad, err
    fd = _gradient_fd(point, spec, qspec)
    if method == "fd":
        return fd, 0.0
    scale = float(np.max(np.abs(grad))) or 1.0
    if np.max(np.abs(grad - fd)) > 1e-3 * scale:
        warnings.warn("analytic and finite-difference gradients disagree "
                      "beyond 1e-3 relative", stacklevel=2)
    return grad, err


def _gradient_fd(point: EvalPoint, spec, qspec):
    n = point.n
    x = np.array(list(point.xprime) + [point.xn])
    out = np.empty((n, n))
    for j in range(n):
        h = max(1e-4, 1e-4 * abs(x[j]))
        if j == n - 1:
            h = min(h, 0.49 * point.xn)  # stay inside the half-space
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        vp, _ = velocity(EvalPoint.of(xp, point.t), spec, qspec)
        vm, _ = velocity(EvalPoint.of(xm, point.t), spec, qspec)
        out[:, j] = (vp - vm) / (2.0 * h)
    return out


def flow_sample(point: EvalPoint, spec: FluxSpec,
                qspec: QuadSpec | None = None,
                include_pressure: bool = False) -> FlowSample:
    qspec = qspec or QuadSpec()
    vel, verr = velocity(point, spec, qspec)
    grad, gerr = gradient(point, spec, qspec)
    pres = perr = None
    if include_pressure:
        kv = pressure(point, spec, qspec)
        pres, perr = kv.value, kv.abs_error
    return FlowSample(velocity=vel, gradient=grad, pressure=pres,
                      velocity_error=verr, gradient_error=gerr,
                      pressure_error=perr or 0.0)


def pressure(point: EvalPoint, spec: FluxSpec,
             qspec: QuadSpec | None = None) -> KernelValue:
    """Pressure at an interior point; t = 1 is rejected (the envelope is
    infinite there for a < 1)."""
    qspec = qspec or QuadSpec()
    if point.t == 1.0:
        raise DomainError("pressure is singular at t = 1")
    if point.xn == 0.0:
        raise DomainError("pressure needs x_n > 0")
    vals, err = _point_quantities(point, spec, qspec, [("p",)])
    return KernelValue(float(vals[0]), err)


def dnI2_true_profile(i: int, point: EvalPoint, spec: FluxSpec,
                      qspec: QuadSpec | None = None) -> KernelValue:
    """d_n I_2 with the true temporal profile h (the main singular part of
    d_n v_i; the bounded remainder is estimated in the envelope checks)."""
    qspec = qspec or QuadSpec()
    if not (1 <= i <= point.n - 1):
        raise DomainError("the main term exists for tangential components")
    vals, err = _point_quantities(point, spec, qspec, [("dnI2", i)])
    return KernelValue(float(vals[0]), err)


def main_term_dnI2(i: int, point: EvalPoint, spec: FluxSpec,
                   qspec: QuadSpec | None = None) -> KernelValue:
    """The blow-up driver at t = 1 with the idealized power profile
    h(1 - s) = s^a continued over the whole time integral.

    Evaluated in the sigma = x_n^2/(4 s) variable, where the essential
    Gaussian factor becomes exp(-sigma) exactly.
    """
    qspec = qspec or QuadSpec()
    n = point.n
    if n < 3:
        raise DimensionError("the lower-bound features require n >= 3")
    if not (1 <= i <= n - 1):
        raise DomainError("i must be tangential")
    if point.t != 1.0:
        raise DomainError("the main term is defined at t = 1")
    if point.xn <= 0.0:
        raise DomainError("x_n must be positive")
    a = spec.a
    xn = point.xn
    xp = np.asarray(point.xprime, dtype=float)
    m = n - 1
    batch = _FlowBatch(spec, qspec, 1.0, xp[None, :], np.asarray([xn]))
    q = xn * xn / 4.0
    pref = cn_constant(n) * (4.0 * math.pi) ** ((n - 1) / 2.0) \
        * bn_constant(n) * q ** (a - 0.5)

    def integrand(sig):
        s_vals = q / sig  # in (0, 1]
        s_b = np.broadcast_to(s_vals[None, :], (1, sig.size))
        vcols = batch._v_columns(s_b, [_unit(m, i - 1)], extra_axes=1)
        return (np.exp(-sig) * (0.5 - sig) * sig ** (-a - 0.5)
                * vcols[0, :, 0])

    sig_lo = q
    sig_hi = sig_lo + 80.0
    hints = [sig_lo * 8.0 ** k for k in range(1, 12)]
    hints += [0.1, 0.5, 1.0, 5.0, 20.0]
    res = integrate_interval(integrand, sig_lo, sig_hi, qspec,
                             split_at=[h for h in hints
                                       if sig_lo < h < sig_hi])
    return KernelValue(pref * float(res.value),
                       pref * res.abs_error + batch.err)


def boundary_trace_check(xprime, t: float, spec: FluxSpec, xn_sequence,
                         qspec: QuadSpec | None = None):
    """Convergence of v(x', x_n, t) to the boundary data as x_n -> 0.

    Returns a list of dicts with the velocity, the flux value, and the
    normal-component mismatch per x_n.
    """
    from .flux import flux as flux_vec

    qspec = qspec or QuadSpec()
    rows = []
    target = flux_vec(xprime, t, spec)
    for xn in xn_sequence:
        vel, err = velocity(EvalPoint(tuple(xprime), float(xn), t), spec, qspec)
        rows.append({
            "xn": float(xn),
            "velocity": vel,
            "flux": target,
            "normal_mismatch": float(vel[-1] - target[-1]),
            "tangential_norm": float(np.linalg.norm(vel[:-1])),
            "abs_error": err,
        })
    return rows


# ---------------------------------------------------------------------------
# energy


def _fejer1_weights(npts: int):
    """Fejer-1 quadrature weights for Chebyshev points of the first kind
    on [-1, 1]."""
    k = np.arange(npts)
    theta = (2.0 * k + 1.0) * math.pi / (2.0 * npts)
    w = np.zeros(npts)
    for idx, th in enumerate(theta):
        acc = 1.0
        for mm in range(1, npts // 2 + 1):
            acc -= 2.0 * math.cos(2.0 * mm * th) / (4.0 * mm * mm - 1.0)
        w[idx] = 2.0 * acc / npts
    return np.cos(theta), w


def _panel_nodes(panels, counts):
    nodes, weights = [], []
    for (lo, hi), c in zip(zip(panels[:-1], panels[1:]), counts):
        x, w = np.polynomial.legendre.leggauss(c)
        nodes.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def energy(spec: FluxSpec, qspec: QuadSpec | None = None, R: float = 20.0,
           n_time: int = 32, tangential_panels=(0.0, 1.2, 4.0, 10.0, 20.0),
           tangential_counts=(3, 2, 2, 2),
           normal_panels=(0.0, 0.5, 2.0, 8.0, 20.0),
           normal_counts=(3, 2, 2, 2)):
    """Desk-scale energy: sup-in-time kinetic energy over B_R^+, the full
    space-time dissipation, and analytic tail bounds for |x| > R.

    The quadrature grid is tensorized Gauss-Legendre panels graded toward
    the flux support, restricted to a quadrant by the parity of the flow;
    panel edges at 10 and 20 let one run report both truncation radii.
    Returns a dict keyed by truncation radius with kinetic_sup,
    dissipation, and tail_bound entries.
    """
    qspec = qspec or QuadSpec(rel_tol=3e-4, abs_tol=1e-9, max_depth=24)
    if spec.n != 3:
        raise DimensionError("the desk-scale energy is implemented for n = 3")
    panels_t = [p for p in tangential_panels if p <= R + 1e-12]
    panels_n = [p for p in normal_panels if p <= R + 1e-12]
    xt, wt = _panel_nodes(panels_t, tangential_counts[:len(panels_t) - 1])
    xn, wn = _panel_nodes(panels_n, normal_counts[:len(panels_n) - 1])

    # quadrant grid (x1, x2 >= 0); squares of components are even in each
    # tangential coordinate for both bump shapes
    X1, X2, XN = np.meshgrid(xt, xt, xn, indexing="ij")
    W = (wt[:, None, None] * wt[None, :, None] * wn[None, None, :]) * 4.0
    pts_xp = np.stack([X1.ravel(), X2.ravel()], axis=-1)
    pts_xn = XN.ravel()
    wflat = W.ravel()
    r2 = np.sum(pts_xp ** 2, axis=1) + pts_xn ** 2
    inner10 = r2 <= 100.0

    tnodes, tweights = _fejer1_weights(n_time)
    tgrid = 1.0 + tnodes  # Chebyshev points on [0, 2], never exactly 1

    quantities = [("v", i) for i in (1, 2, 3)] + \
        [("dv", i, j) for i in (1, 2, 3) for j in (1, 2, 3)]
    kin = {10.0: np.zeros(n_time), R: np.zeros(n_time)}
    dis = {10.0: 0.0, R: 0.0}
    for k, t in enumerate(tgrid):
        if t <= 0.25:
            continue
        vals, _ = evaluate_batch(spec, qspec, float(t), pts_xp, pts_xn,
                                 quantities)
        v2 = np.sum(vals[:, :3] ** 2, axis=1)
        g2 = np.sum(vals[:, 3:] ** 2, axis=1)
        for rad, mask in ((10.0, inner10), (R, slice(None))):
            kin[rad][k] = float(np.sum((v2 * wflat)[mask]))
            dis[rad] += tweights[k] * float(np.sum((g2 * wflat)[mask]))

    # analytic tail bounds from calibrated envelope constants
    probe_r = np.array([2.0, 5.0, 9.0, 15.0, 19.0])
    probe_xp = np.stack([probe_r / math.sqrt(2.0)] * 2, axis=-1)
    probe_xn = np.full(probe_r.size, 0.5)
    pv, _ = evaluate_batch(spec, qspec, 0.9, probe_xp, probe_xn, quantities)
    rr2 = np.sum(probe_xp ** 2, axis=1) + probe_xn ** 2
    c_kin = 1.5 * float(np.max(np.sqrt(np.sum(pv[:, :3] ** 2, axis=1))
                               * (1.0 + rr2)))
    ln_probe = (probe_xn ** 2 + abs(0.9 - 1.0)) ** (spec.a - 0.5)
    if spec.a == 0.5:
        ln_probe = ln_probe + np.log(2.0 + 1.0 / (probe_xn ** 2 + 0.1))
    env_g = (1.0 + rr2) ** -1.5 + ln_probe * (1.0 + rr2) ** -1.0 \
        * (probe_xn + 1.0) ** (-2.0 * spec.a)
    c_grad = 1.5 * float(np.max(np.sqrt(np.sum(pv[:, 3:] ** 2, axis=1)) / env_g))
    c_log = 7.3  # int_0^2 log^2(2 + 1/|t-1|) dt, rounded up
    c_a = c_log if spec.a == 0.5 else 1.0 / spec.a

    out = {}
    for rad in (10.0, R):
        tail_kin = c_kin ** 2 * 2.0 * math.pi / rad
        tail_dis = (c_grad ** 2 * 2.0 * (2.0 * math.pi) *
                    (2.0 / (3.0 * rad ** 3) + c_a / rad))
        out[rad] = {
            "kinetic_sup": float(np.max(kin[rad])),
            "dissipation": float(dis[rad]),
            "tail_bound": float(tail_kin + tail_dis),
        }
    return out
