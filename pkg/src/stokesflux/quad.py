"""Adaptive Gauss-Kronrod quadrature tuned for the singular integrands here.

The integrands this package meets are 1-D slices of layer potentials:
endpoint power singularities like s**(-1/2) and (1-t+s)**(a-1), essential
Gaussian factors exp(-xn**2/(4*s)), and smooth tails that must be truncated
deterministically.  Everything is built on a nested (G7, K15) pair with
bisection refinement, deterministic subdivision order, and a final sum in
left-to-right interval order so results do not depend on processing order.

Integrands are called with a numpy array of nodes and must return an array
of the same leading shape; vector-valued integrands (shape ``(m, k)``) are
supported, with the error controlled in the max norm across components.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import QuadratureError

__all__ = [
    "QuadSpec",
    "QuadResult",
    "Singularity",
    "integrate_interval",
    "integrate_halfline",
    "integrate_time_sigma",
    "integrate_disk",
]

# Kronrod-15 abscissae on [-1, 1]; odd entries are the embedded Gauss-7 nodes.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)


@dataclass(frozen=True)
class Singularity:
    """Annotation for an integrable endpoint singularity.

    ``kind`` is one of ``"power"`` (integrand ~ |s - location|**exponent with
    exponent > -1), ``"essential-gaussian"`` (factor exp(-c/|s - location|),
    handled by graded refinement), or ``"none"``.
    """

    location: float
    kind: str = "power"
    exponent: float | None = None

    def __post_init__(self):
        if self.kind not in ("power", "essential-gaussian", "none"):
            raise ValueError(f"unknown singularity kind {self.kind!r}")
        if self.kind == "power":
            if self.exponent is None or self.exponent <= -1:
                raise ValueError("power singularity needs exponent > -1")


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and subdivision limits for the adaptive engine."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_depth: int = 40
    singularities: tuple[Singularity, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")

    def tightened(self, factor: float) -> "QuadSpec":
        return QuadSpec(self.rel_tol / factor, self.abs_tol / factor,
                        self.max_depth, self.singularities)

    def with_singularities(self, *sings: Singularity) -> "QuadSpec":
        return QuadSpec(self.rel_tol, self.abs_tol, self.max_depth,
                        tuple(sings))


@dataclass
class QuadResult:
    """Value, error estimate, and bookkeeping for one integral."""

    value: float | np.ndarray
    abs_error: float
    evaluations: int
    converged: bool = True
    truncated_at: float | None = None

    def __post_init__(self):
        if self.abs_error < 0:
            raise ValueError("abs_error must be >= 0")


def _panel(f, lo, hi):
    """Apply the (G7, K15) pair on [lo, hi]; returns (valK, err, n_evals)."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid + half * _XK
    y = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(y)):
        raise QuadratureError(
            f"non-finite integrand values in [{lo}, {hi}]")
    valk = half * np.tensordot(_WK, y, axes=(0, 0))
    valg = half * np.tensordot(_WG, y[_GAUSS_IDX], axes=(0, 0))
    err = float(np.max(np.abs(valk - valg)))
    return valk, err, x.size


def _power_sub(f, lo, hi, exponent, at_lo):
    """Substitution flattening a |s-endpoint|**exponent singularity.

    With p = 2/(1+exponent) and s = endpoint +/- u**p the transformed
    integrand behaves like u near the endpoint.
    """
    p = 2.0 / (1.0 + exponent)

    def wrap(u, s, live):
        if not np.any(live):
            return np.zeros_like(u)
        vals = np.asarray(f(s[live]), dtype=float)
        jac = p * u[live] ** (p - 1.0)
        jac = jac.reshape(jac.shape + (1,) * (vals.ndim - 1))
        out = np.zeros(u.shape + vals.shape[1:])
        out[live] = vals * jac
        return out

    if at_lo:
        def g(u):
            s = lo + u ** p
            return wrap(u, s, s > lo)
    else:
        def g(u):
            s = hi - u ** p
            return wrap(u, s, s < hi)
    return g, 0.0, (hi - lo) ** (1.0 / p)


_MAX_SEGMENTS = 4000


def _adapt(f, segments, spec):
    """Adaptive refinement over an initial list of (lo, hi) segments."""
    heap = []
    results = {}
    evals = 0
    for (lo, hi) in segments:
        if hi <= lo:
            continue
        val, err, n = _panel(f, lo, hi)
        evals += n
        results[(lo, hi)] = (val, err, 0)
        heapq.heappush(heap, (-err, lo, hi, 0))

    def totals():
        tot = None
        tot_err = 0.0
        for (lo, hi) in sorted(results):
            val, err, _ = results[(lo, hi)]
            tot = val if tot is None else tot + val
            tot_err += err
        return tot, tot_err

    while True:
        tot, tot_err = totals()
        scale = float(np.max(np.abs(tot))) if tot is not None else 0.0
        tol = max(spec.abs_tol, spec.rel_tol * scale)
        if tot_err <= tol or not heap or len(results) >= _MAX_SEGMENTS:
            return tot, tot_err, evals, tot_err <= tol
        neg_err, lo, hi, depth = heapq.heappop(heap)
        if (lo, hi) not in results:
            continue
        if -neg_err <= 1e-3 * tol / max(len(results), 1):
            continue
        if depth >= spec.max_depth:
            # leave the segment as is; convergence check decides the flag
            continue
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            continue
        del results[(lo, hi)]
        for (a, b) in ((lo, mid), (mid, hi)):
            val, err, n = _panel(f, a, b)
            evals += n
            results[(a, b)] = (val, err, depth + 1)
            heapq.heappush(heap, (-err, a, b, depth + 1))


def integrate_interval(f, lo: float, hi: float, spec: QuadSpec | None = None,
                       split_at=()) -> QuadResult:
    """Integrate ``f`` over (lo, hi) honoring the spec's endpoint annotations.

    ``split_at`` lists interior points where the initial partition is cut
    (length scales of the integrand); they make refinement deterministic and
    cheap but do not change the converged value.
    """
    spec = spec or QuadSpec()
    if not (lo < hi):
        raise ValueError("need lo < hi")

    sing_lo = sing_hi = None
    for s in spec.singularities:
        if s.kind != "power":
            continue
        if math.isclose(s.location, lo, rel_tol=0.0, abs_tol=1e-300) or s.location == lo:
            sing_lo = s
        elif math.isclose(s.location, hi, rel_tol=0.0, abs_tol=1e-300) or s.location == hi:
            sing_hi = s

    cuts = sorted({float(c) for c in split_at if lo < c < hi})

    if sing_lo is not None and sing_hi is not None:
        mid = cuts[len(cuts) // 2] if cuts else 0.5 * (lo + hi)
        left = integrate_interval(
            f, lo, mid, spec.with_singularities(sing_lo),
            split_at=[c for c in cuts if c < mid])
        right = integrate_interval(
            f, mid, hi, spec.with_singularities(sing_hi),
            split_at=[c for c in cuts if c > mid])
        return QuadResult(left.value + right.value,
                          left.abs_error + right.abs_error,
                          left.evaluations + right.evaluations,
                          left.converged and right.converged)

    if sing_lo is not None:
        if lo == 0.0:
            g, a, b = _power_sub(f, lo, hi, sing_lo.exponent, at_lo=True)
            p = 2.0 / (1.0 + sing_lo.exponent)
            mapped = [(c - lo) ** (1.0 / p) for c in cuts]
            segs = _segments(a, b, mapped)
        else:
            return _endpoint_completion(f, lo, hi, sing_lo.exponent, True,
                                        spec, cuts)
    elif sing_hi is not None:
        if hi == 0.0:
            g, a, b = _power_sub(f, lo, hi, sing_hi.exponent, at_lo=False)
            p = 2.0 / (1.0 + sing_hi.exponent)
            mapped = [(hi - c) ** (1.0 / p) for c in cuts]
            segs = _segments(a, b, mapped)
        else:
            return _endpoint_completion(f, lo, hi, sing_hi.exponent, False,
                                        spec, cuts)
    else:
        g = f
        segs = _segments(lo, hi, cuts)

    val, err, evals, ok = _adapt(g, segs, spec)
    return QuadResult(val, err, evals, ok)


def _endpoint_completion(f, lo, hi, e, at_lo, spec, cuts):
    """Power endpoints away from the origin: geometric panels plus an
    analytic two-term tail completion.

    Floats near a nonzero endpoint cannot represent distances below about
    eps * |endpoint|, where an integrand ~ d**e with e near -1 still holds
    real mass, so instead of refining into the quantization floor the last
    resolved panels are extrapolated with the model c1*d**(1+e) +
    c2*d**(2+e).
    """
    span = hi - lo
    ep = lo if at_lo else hi
    floor = max(1e9 * np.finfo(float).eps * abs(ep), 1e-13 * span)
    deltas = [span / 4.0]
    while deltas[-1] > floor:
        deltas.append(deltas[-1] / 4.0)

    def seg(d_far, d_near):
        if at_lo:
            a, b = lo + d_near, lo + d_far
        else:
            a, b = hi - d_far, hi - d_near
        return integrate_interval(f, a, b, QuadSpec(
            spec.rel_tol, spec.abs_tol, spec.max_depth))

    far_lo, far_hi = (lo + deltas[0], hi) if at_lo else (lo, hi - deltas[0])
    far = integrate_interval(f, far_lo, far_hi,
                             QuadSpec(spec.rel_tol, spec.abs_tol, spec.max_depth),
                             split_at=[c for c in cuts if far_lo < c < far_hi])
    total = far.value
    tot_err = far.abs_error
    evals = far.evaluations
    masses = []
    for j in range(len(deltas) - 1):
        res = seg(deltas[j], deltas[j + 1])
        total = total + res.value
        tot_err += res.abs_error
        evals += res.evaluations
        masses.append(res.value)
    # two-term completion of the unresolved tail below the last delta
    d1, d2, d3 = deltas[-3], deltas[-2], deltas[-1]
    p1, p2 = 1.0 + e, 2.0 + e
    a11 = d2 ** p1 - d3 ** p1
    a12 = d2 ** p2 - d3 ** p2
    a21 = d1 ** p1 - d2 ** p1
    a22 = d1 ** p2 - d2 ** p2
    det = a11 * a22 - a12 * a21
    m_last, m_prev = masses[-1], masses[-2]
    if det != 0.0 and np.ndim(m_last) == 0:
        c1 = (m_last * a22 - a12 * m_prev) / det
        c2 = (a11 * m_prev - m_last * a21) / det
        tail = c1 * d3 ** p1 + c2 * d3 ** p2
        tail_err = abs(c2 * d3 ** p2) * 1e-3 + abs(tail) * 1e-8
    else:
        # vector integrands: first-order completion per component
        c1 = m_last / a11
        tail = c1 * d3 ** p1
        tail_err = float(np.max(np.abs(tail))) * 1e-2
    total = total + tail
    tot_err += float(np.max(np.abs(tail_err)))
    ok = tot_err <= max(spec.abs_tol, spec.rel_tol * float(np.max(np.abs(total))))
    return QuadResult(total, tot_err, evals, ok)


def _segments(lo, hi, cuts):
    pts = [lo] + sorted(c for c in cuts if lo < c < hi) + [hi]
    return list(zip(pts[:-1], pts[1:]))


def integrate_halfline(f, lo: float, spec: QuadSpec | None = None,
                       scale: float = 1.0, split_at=(),
                       tail_start: float | None = None) -> QuadResult:
    """Integrate ``f`` over (lo, infinity).

    The head (lo, T) uses :func:`integrate_interval`; the tail maps onto
    (0, 1] through sigma = T/w, which turns algebraic decay sigma**(-q)
    into an integrable w**(q-2) endpoint handled by refinement.
    """
    spec = spec or QuadSpec()
    T = tail_start if tail_start is not None else max(lo + 10.0 * scale,
                                                      4.0 * abs(lo) + 10.0 * scale)
    head = integrate_interval(f, lo, T, spec, split_at=split_at)

    def tail_map(w):
        s = T / w
        return f(s) * T / w ** 2

    tail = integrate_interval(tail_map, 0.0, 1.0, spec,
                              split_at=(0.01, 0.1, 0.5))
    return QuadResult(head.value + tail.value,
                      head.abs_error + tail.abs_error,
                      head.evaluations + tail.evaluations,
                      head.converged and tail.converged)


def integrate_time_sigma(smooth_part, xn: float, t_range, spec: QuadSpec | None = None,
                         split_at=()) -> QuadResult:
    """Integrate exp(-xn**2/(4 s)) * smooth_part(s) over a time interval.

    Substituting sigma = xn**2/(4 s) maps s in (0, t] to sigma in
    [xn**2/(4 t), infinity) and makes the essential factor a plain
    exp(-sigma); the Gaussian tail is truncated where it is below 1e-16 of
    the retained range, and the truncation point is recorded.
    """
    spec = spec or QuadSpec()
    if xn <= 0:
        raise ValueError("xn must be positive for the sigma substitution")
    t_lo, t_hi = t_range
    if not (0 <= t_lo < t_hi):
        raise ValueError("need 0 <= t_lo < t_hi")
    q = xn * xn / 4.0
    sig_lo = q / t_hi
    sig_hi = q / t_lo if t_lo > 0 else math.inf
    # exp(-sigma) < 1e-16 * exp(-sig_lo) beyond sig_lo + 37; pad for
    # polynomial growth of the smooth part.
    sig_cut = min(sig_hi, sig_lo + 80.0)

    def g(sigma):
        s = q / sigma
        return np.exp(-sigma) * smooth_part(s) * q / sigma ** 2

    cuts = [sig_lo + 1.0, sig_lo + 5.0, sig_lo + 20.0]
    cuts += [q / c for c in split_at if t_lo < c < t_hi]
    res = integrate_interval(g, sig_lo, sig_cut, spec,
                             split_at=[c for c in cuts if sig_lo < c < sig_cut])
    res.truncated_at = sig_cut
    return res


def integrate_disk(f, center, r: float, spec: QuadSpec | None = None,
                   singular_point=None, radial_exponent: float = 0.0,
                   breakpoints=()) -> QuadResult:
    """Adaptive integral of ``f`` over a ball in 1 or 2 tangential dimensions.

    ``f`` takes an array of shape (m, d) of points.  With ``singular_point``
    set (must lie inside the disk) the integral is done in polar coordinates
    around it so the Jacobian rho cancels one power of the singularity;
    ``radial_exponent`` annotates what remains (e.g. -1.0 + 1.0 = 0 for a
    1/|x| integrand after the Jacobian).  Without it the disk is integrated
    as an iterated Cartesian integral over chords, with ``breakpoints``
    splitting the axes at known kinks of the integrand.
    """
    spec = spec or QuadSpec()
    center = np.atleast_1d(np.asarray(center, dtype=float))
    d = center.size
    if d == 1:
        def f1(x):
            return f(x.reshape(-1, 1))
        cuts = [b for b in breakpoints if center[0] - r < b < center[0] + r]
        if singular_point is not None:
            sp = float(np.atleast_1d(singular_point)[0])
            s = Singularity(sp, "power", radial_exponent) if radial_exponent != 0.0 else None
            sub = spec.with_singularities(s) if s else spec
            lo, hi = center[0] - r, center[0] + r
            if lo < sp < hi:
                left = integrate_interval(f1, lo, sp, sub, split_at=[c for c in cuts if c < sp])
                right = integrate_interval(f1, sp, hi, sub, split_at=[c for c in cuts if c > sp])
                return QuadResult(left.value + right.value,
                                  left.abs_error + right.abs_error,
                                  left.evaluations + right.evaluations,
                                  left.converged and right.converged)
        return integrate_interval(f1, center[0] - r, center[0] + r, spec, split_at=cuts)
    if d != 2:
        raise NotImplementedError("disk integrals support 1 or 2 tangential dims")

    if singular_point is not None:
        sp = np.asarray(singular_point, dtype=float)
        off = sp - center
        dist = float(np.hypot(off[0], off[1]))
        if dist >= r:
            raise ValueError("singular point must lie inside the disk")
        evals = 0

        def radial(rho_arr):
            out = np.empty_like(rho_arr)
            for idx, rho in enumerate(rho_arr):
                if rho == 0.0:
                    out[idx] = 0.0
                    continue
                if dist == 0.0 or rho <= r - dist:
                    th_lo, th_hi = 0.0, 2.0 * math.pi
                else:
                    cosp = (rho * rho + dist * dist - r * r) / (2.0 * rho * dist)
                    cosp = min(1.0, max(-1.0, cosp))
                    half_arc = math.acos(cosp)
                    base = math.atan2(-off[1], -off[0])
                    th_lo, th_hi = base - half_arc, base + half_arc

                def ang(theta):
                    pts = np.stack([sp[0] + rho * np.cos(theta),
                                    sp[1] + rho * np.sin(theta)], axis=-1)
                    return f(pts)

                sub = integrate_interval(ang, th_lo, th_hi, spec)
                out[idx] = sub.value * rho
            return out

        rspec = spec
        if radial_exponent != 0.0:
            rspec = spec.with_singularities(Singularity(0.0, "power", radial_exponent))
        res = integrate_interval(radial, 0.0, r + dist, rspec)
        return res

    cx, cy = center

    def outer(ys):
        out = np.empty_like(ys)
        for idx, y in enumerate(ys):
            chord = math.sqrt(max(r * r - (y - cy) ** 2, 0.0))
            if chord == 0.0:
                out[idx] = 0.0
                continue

            def inner(xs):
                pts = np.stack([xs, np.full_like(xs, y)], axis=-1)
                return f(pts)

            cuts = [b for b in breakpoints if cx - chord < b < cx + chord]
            sub = integrate_interval(inner, cx - chord, cx + chord, spec,
                                     split_at=cuts)
            out[idx] = sub.value
        return out

    # chord length has sqrt behavior at both y endpoints; handle via split
    cuts_y = sorted(set([cy - 0.9 * r, cy, cy + 0.9 * r]
                        + [b for b in breakpoints if cy - r < b < cy + r]))
    res = integrate_interval(outer, cy - r, cy + r, spec, split_at=cuts_y)
    return res
