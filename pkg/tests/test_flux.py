"""Boundary-flux profile, bridge, norms, and exact smoothing checks."""

import json
import math

import numpy as np
import pytest

from stokesflux.errors import ConfigError, DimensionError, DomainError
from stokesflux.flux import (
    FluxSpec,
    bump_breakpoints,
    bump_profile,
    flux,
    flux_norms,
    g_spatial,
    h_time,
    smoothed_g,
    smoothed_profile_factor,
)
from stokesflux.quad import QuadSpec, integrate_interval

SINGLE = FluxSpec(a=0.5, shape="single", n=3)
DIPOLE = FluxSpec(a=0.5, shape="dipole", n=3)


class TestBumpProfile:
    def test_plateau(self):
        assert bump_profile(0.0, 3) == 1.0
        assert bump_profile(0.3, 3) == 1.0  # 0.3 < 1/(2 sqrt 2) ~ 0.3536

    def test_support(self):
        # 4/(5 sqrt 2) ~ 0.5657
        assert bump_profile(0.57, 3) == 0.0
        assert bump_profile(-0.6, 3) == 0.0

    def test_even_and_monotone(self):
        assert bump_profile(-0.4, 3) == bump_profile(0.4, 3)
        zs = np.linspace(0.0, 0.6, 200)
        vals = bump_profile(zs, 3)
        assert np.all(np.diff(vals) <= 1e-14)
        assert bump_profile(0.4, 3, deriv=1) <= 0.0

    def test_c2_smoothness_at_knots(self):
        # one-sided values agree across the knots up to the local variation
        # of the next derivative over the probe distance
        tol = {0: 1e-5, 1: 1e-4, 2: 1e-2}
        for knot in bump_breakpoints(3):
            for d in (0, 1, 2):
                left = bump_profile(knot - 1e-7, 3, d)
                right = bump_profile(knot + 1e-7, 3, d)
                assert abs(left - right) < tol[d]

    def test_derivative_against_finite_difference(self):
        h = 1e-6
        for z in (0.37, 0.45, -0.52, 0.55):
            fd = (bump_profile(z + h, 3) - bump_profile(z - h, 3)) / (2 * h)
            assert abs(fd - bump_profile(z, 3, 1)) < 1e-6


class TestGSpatial:
    def test_single_center(self):
        assert g_spatial((0.0, 0.0), SINGLE) == 1.0

    def test_dipole_signs(self):
        assert g_spatial((-10.0, 0.0), DIPOLE) == pytest.approx(1.0)
        assert g_spatial((10.0, 0.0), DIPOLE) == pytest.approx(-1.0)

    def test_plateau_derivative_vanishes(self):
        # 0.3 < 1/(2 sqrt 2): inside the plateau of the first factor
        assert g_spatial((0.3, 0.0), SINGLE, deriv=(1, 0)) == 0.0
        h = 1e-6
        fd = (g_spatial((0.3 + h, 0.0), SINGLE) - g_spatial((0.3 - h, 0.0), SINGLE)) / (2 * h)
        assert abs(fd) < 1e-12

    def test_parities(self):
        pt = (0.41, -0.22)
        assert g_spatial(pt, SINGLE) == g_spatial((-pt[0], pt[1]), SINGLE)
        assert g_spatial(pt, SINGLE) == g_spatial((pt[0], -pt[1]), SINGLE)
        assert g_spatial((0.6, 0.1), DIPOLE) == -g_spatial((-0.6, 0.1), DIPOLE)

    def test_nonnegative_single(self):
        rng = np.random.RandomState(7)
        pts = rng.uniform(-1.2, 1.2, size=(500, 2))
        assert np.all(g_spatial(pts, SINGLE) >= 0.0)

    def test_dipole_needs_n3(self):
        with pytest.raises(DimensionError):
            FluxSpec(a=0.5, shape="dipole", n=4)


class TestHTime:
    def test_values_on_main_branch(self):
        assert h_time(0.75, 0.5) == pytest.approx(0.5)
        assert h_time(0.75, 0.25) == pytest.approx(0.25 ** 0.25)

    def test_support(self):
        assert h_time(0.2, 0.5) == 0.0
        assert h_time(1.1, 0.5) == 0.0
        assert h_time(0.24, 0.25) == 0.0

    def test_continuity_on_fine_grid(self):
        # away from the Hoelder cusp at s = 1 the 1e-5 grid increments are
        # tiny; at the cusp they follow the exact modulus (1 - s)**a
        s = np.linspace(0.0, 1.2, 120001)
        vals = h_time(s, 0.5)
        jumps = np.abs(np.diff(vals))
        away = s[:-1] < 1.0 - 3e-3
        assert np.max(jumps[away]) < 1e-4
        near = ~away & (s[1:] <= 1.0)
        moduli = np.abs((1.0 - s[:-1][near]) ** 0.5 - (1.0 - s[1:][near]) ** 0.5)
        assert np.max(jumps[near] - moduli) <= 1e-12

    def test_c1_match_at_half(self):
        for a in (0.25, 0.5):
            left = h_time(0.5 - 1e-9, a, 1)
            right = h_time(0.5 + 1e-9, a, 1)
            assert abs(left - right) < 1e-5

    def test_derivative_bound_on_main_branch(self):
        a = 0.5
        s = np.linspace(0.5, 1.0 - 1e-9, 1000)
        assert np.all(np.abs(h_time(s, a, 1)) <= a * (1 - s) ** (a - 1) + 1e-12)

    def test_infinite_slope_at_one(self):
        assert h_time(1.0, 0.25, 1) == -math.inf

    def test_nonnegative(self):
        s = np.linspace(0.0, 1.5, 30001)
        assert np.min(h_time(s, 0.3)) >= 0.0


class TestFluxVector:
    def test_only_normal_component(self):
        v = flux((0.1, -0.2), 0.8, SINGLE)
        assert v[0] == 0.0 and v[1] == 0.0 and v[2] != 0.0

    def test_value(self):
        v = flux((0.0, 0.0), 0.75, FluxSpec(a=0.5, shape="single", n=3))
        assert v[2] == pytest.approx(0.25 ** 0.5)

    def test_vanishes_before_quarter(self):
        assert np.all(flux((0.0, 0.0), 0.2, SINGLE) == 0.0)


class TestSerialization:
    def test_round_trip(self):
        spec = FluxSpec(a=0.25, shape="dipole", n=3)
        blob = json.dumps(spec.to_json_dict())
        back = FluxSpec.from_json_dict(json.loads(blob))
        assert back == spec

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            FluxSpec.from_json_dict({"a": 0.5, "shape": "single", "n": 3, "zz": 1})

    def test_bad_a(self):
        with pytest.raises(ConfigError):
            FluxSpec(a=0.75)


class TestSmoothedFactors:
    """The closed-form Gaussian smoothing is the core of the flow module;
    validate it against direct quadrature of the convolution integral."""

    @pytest.mark.parametrize("m", [0, 1, 2, 3])
    @pytest.mark.parametrize("tau", [1e-6, 1e-3, 0.05, 1.0, 25.0])
    def test_against_direct_convolution(self, m, tau):
        spec = QuadSpec(rel_tol=1e-11, abs_tol=1e-15)
        breaks = bump_breakpoints(3)
        for u in (0.0, 0.2, 0.45, 0.8, -3.0, 12.0):
            def integrand(xi):
                return (np.exp(-(u - xi) ** 2 / (4.0 * tau))
                        / math.sqrt(4.0 * math.pi * tau)
                        * bump_profile(xi, 3, m))

            width = math.sqrt(4.0 * tau)
            hints = list(breaks[1:-1]) + [u + k * width for k in (-3, -1, 0, 1, 3)
                                          if breaks[0] < u + k * width < breaks[-1]]
            ref = integrate_interval(integrand, breaks[0], breaks[-1], spec,
                                     split_at=tuple(hints)).value
            got = smoothed_profile_factor(u, tau, m, 3)
            assert got == pytest.approx(ref, abs=2e-10, rel=1e-8)

    def test_zero_tau_is_profile(self):
        assert smoothed_profile_factor(0.3, 0.0, 0, 3) == bump_profile(0.3, 3)

    def test_mass_conservation(self):
        # smoothing preserves the integral of the profile
        spec = QuadSpec(rel_tol=1e-11, abs_tol=1e-15)
        breaks = bump_breakpoints(3)
        mass = integrate_interval(lambda z: bump_profile(z, 3), breaks[0],
                                  breaks[-1], spec,
                                  split_at=tuple(breaks[1:-1])).value
        u = np.linspace(-12.0, 12.0, 20001)
        smoothed_mass = np.trapezoid(smoothed_profile_factor(u, 2.0, 0, 3), u)
        assert smoothed_mass == pytest.approx(mass, rel=1e-7)

    def test_parity(self):
        u = np.array([0.17, 0.42, 1.3])
        even = smoothed_profile_factor(u, 0.3, 0, 3)
        even_neg = smoothed_profile_factor(-u, 0.3, 0, 3)
        odd = smoothed_profile_factor(u, 0.3, 1, 3)
        odd_neg = smoothed_profile_factor(-u, 0.3, 1, 3)
        assert np.array_equal(even, even_neg)
        assert np.array_equal(odd, -odd_neg)

    def test_smoothed_g_product_and_dipole(self):
        tau = 0.4
        w = np.array([0.3, -0.1])
        single = smoothed_g(SINGLE, w, tau)
        f1 = smoothed_profile_factor(0.3, tau, 0, 3)
        f2 = smoothed_profile_factor(-0.1, tau, 0, 3)
        assert single == pytest.approx(f1 * f2, rel=1e-14)
        dip = smoothed_g(DIPOLE, np.array([-10.0, -0.1]), tau)
        near = smoothed_profile_factor(0.0, tau, 0, 3)
        far = smoothed_profile_factor(-20.0, tau, 0, 3)
        assert dip == pytest.approx((near - far) * f2, rel=1e-10)

    def test_broadcast_against_tau_array(self):
        taus = np.array([1e-4, 0.1, 2.0])
        out = smoothed_g(SINGLE, np.array([0.2, 0.1]), taus)
        assert out.shape == taus.shape
        for i, tau in enumerate(taus):
            assert out[i] == pytest.approx(
                smoothed_profile_factor(0.2, tau, 0, 3)
                * smoothed_profile_factor(0.1, tau, 0, 3), rel=1e-13)


class TestFluxNorms:
    def test_finite_and_ordered(self):
        for spec in (SINGLE, DIPOLE, FluxSpec(a=0.25, shape="single", n=3)):
            norms = flux_norms(spec)
            assert math.isfinite(norms.n1) and math.isfinite(norms.n2)
            assert 0.0 < norms.n1 <= norms.n2

    def test_single_n1_lower_bound(self):
        # g and h both reach 1 * max h; N1 at least max |phi|
        norms = flux_norms(SINGLE)
        assert norms.n1 >= h_time(0.75, 0.5)


def test_g_spatial_rejects_bad_index():
    with pytest.raises(DomainError):
        g_spatial((0.1, 0.2), SINGLE, deriv=(2, 2))
