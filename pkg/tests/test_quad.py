"""Closed-form checks for the adaptive quadrature engine."""

import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from stokesflux.quad import (
    QuadSpec,
    Singularity,
    integrate_disk,
    integrate_halfline,
    integrate_interval,
    integrate_time_sigma,
)

TIGHT = QuadSpec(rel_tol=1e-11, abs_tol=1e-14)


def test_inverse_sqrt_endpoint():
    spec = TIGHT.with_singularities(Singularity(0.0, "power", -0.5))
    res = integrate_interval(lambda s: s ** -0.5, 0.0, 1.0, spec)
    assert abs(res.value - 2.0) < 1e-10
    assert res.converged


@pytest.mark.parametrize("a", [0.25, 0.5])
def test_power_endpoint_at_one(a):
    spec = TIGHT.with_singularities(Singularity(1.0, "power", a - 1.0))
    res = integrate_interval(lambda s: (1.0 - s) ** (a - 1.0), 0.0, 1.0, spec)
    assert abs(res.value - 1.0 / a) < 1e-10


def test_gamma_via_halfline():
    a = 0.25
    spec = QuadSpec(rel_tol=1e-10, abs_tol=1e-13).with_singularities(
        Singularity(0.0, "power", -0.5 - a))
    res = integrate_halfline(lambda s: np.exp(-s) * s ** (-0.5 - a), 0.0, spec,
                             tail_start=50.0)
    assert abs(res.value - gamma_fn(0.5 - a)) < 1e-9 * gamma_fn(0.5 - a)


def test_split_hints_do_not_change_value():
    f = lambda s: np.sin(3 * s) * np.exp(-s)
    base = integrate_interval(f, 0.0, 4.0, TIGHT)
    hinted = integrate_interval(f, 0.0, 4.0, TIGHT, split_at=(0.3, 1.7, 2.9))
    assert abs(base.value - hinted.value) < 1e-12


def test_determinism():
    f = lambda s: np.abs(np.sin(7.0 * s)) ** 1.5
    r1 = integrate_interval(f, 0.0, 2.0, QuadSpec())
    r2 = integrate_interval(f, 0.0, 2.0, QuadSpec())
    assert r1.value == r2.value and r1.abs_error == r2.abs_error


def test_symmetric_integrand_antisymmetric_part():
    # odd integrand over symmetric interval: exact zero up to roundoff
    res = integrate_interval(lambda s: s * np.exp(-s * s), -3.0, 3.0, TIGHT)
    assert abs(res.value) < 1e-12


def test_error_overestimates_on_closed_forms():
    cases = []
    for k in range(1, 11):
        cases.append((lambda s, k=k: s ** k, 0.0, 1.0, 1.0 / (k + 1)))
    cases.append((lambda s: np.exp(s), 0.0, 1.0, math.e - 1.0))
    cases.append((lambda s: np.cos(s), 0.0, math.pi / 3, math.sin(math.pi / 3)))
    cases.append((lambda s: 1.0 / (1.0 + s * s), 0.0, 1.0, math.pi / 4))
    cases.append((lambda s: np.log1p(s), 0.0, 1.0, 2.0 * math.log(2.0) - 1.0))
    cases.append((lambda s: np.sqrt(s), 0.0, 1.0, 2.0 / 3.0))
    cases.append((lambda s: np.exp(-s * s), -2.0, 2.0, math.sqrt(math.pi) * math.erf(2.0)))
    cases.append((lambda s: np.sin(10 * s), 0.0, 1.0, (1 - math.cos(10.0)) / 10.0))
    cases.append((lambda s: s * np.exp(s), 0.0, 2.0, math.exp(2.0) + 1.0))
    cases.append((lambda s: 1.0 / np.sqrt(4.0 - s), 0.0, 3.0, 2.0 * (2.0 - 1.0)))
    cases.append((lambda s: np.cosh(s), 0.0, 1.0, math.sinh(1.0)))
    overestimates = 0
    for f, lo, hi, exact in cases:
        res = integrate_interval(f, lo, hi, QuadSpec(rel_tol=1e-9, abs_tol=1e-13))
        true_err = abs(res.value - exact)
        if res.abs_error >= true_err:
            overestimates += 1
    assert overestimates >= math.ceil(0.95 * len(cases))


def test_vector_valued_integrand():
    def f(s):
        return np.stack([s, s ** 2, np.exp(-s)], axis=-1)

    res = integrate_interval(f, 0.0, 1.0, TIGHT)
    expect = np.array([0.5, 1.0 / 3.0, 1.0 - math.exp(-1.0)])
    assert np.allclose(res.value, expect, atol=1e-11)


def test_time_sigma_lower_limit_and_basic_value():
    xn = 0.1
    # integral of exp(-xn^2/(4 s)) * s^(-3/2) over (0, 1]:
    # substitute sigma: (2/xn) * int_{xn^2/4}^inf e^-sigma sigma^(-1/2) dsigma
    res = integrate_time_sigma(lambda s: s ** -1.5, xn, (0.0, 1.0),
                               QuadSpec(rel_tol=1e-10, abs_tol=1e-14))
    sig_lo = xn * xn / 4.0
    ref = integrate_halfline(
        lambda sig: np.exp(-sig) * sig ** -0.5, sig_lo,
        QuadSpec(rel_tol=1e-11, abs_tol=1e-15).with_singularities(
            Singularity(sig_lo, "power", -0.5)),
        tail_start=60.0)
    assert abs(res.value - 2.0 / xn * ref.value) < 1e-8 * abs(res.value)
    assert res.truncated_at is not None


def test_time_sigma_matches_direct_s_integration():
    xn, a = 0.1, 0.25

    def smooth(s):
        return s ** (a - 1.5) * (xn * xn / (4.0 * s) - 0.5)

    via_sigma = integrate_time_sigma(smooth, xn, (0.0, 1.0),
                                     QuadSpec(rel_tol=1e-10, abs_tol=1e-14))

    def direct(s):
        return np.exp(-xn * xn / (4.0 * s)) * smooth(s)

    ref = integrate_interval(direct, 1e-9, 1.0,
                             QuadSpec(rel_tol=1e-11, abs_tol=1e-16, max_depth=48),
                             split_at=(1e-6, 1e-4, 1e-2, xn * xn))
    assert abs(via_sigma.value - ref.value) < 1e-6 * abs(ref.value)


def test_disk_area():
    res = integrate_disk(lambda p: np.ones(p.shape[0]), (0.0, 0.0), 1.0,
                         QuadSpec(rel_tol=1e-11, abs_tol=1e-13))
    assert abs(res.value - math.pi) < 1e-10


def test_disk_inverse_distance_polar_patch():
    res = integrate_disk(lambda p: 1.0 / np.hypot(p[:, 0], p[:, 1]),
                         (0.0, 0.0), 1.0, QuadSpec(rel_tol=1e-9, abs_tol=1e-12),
                         singular_point=(0.0, 0.0), radial_exponent=0.0)
    assert abs(res.value - 2.0 * math.pi) < 1e-8


def test_plane_gaussian():
    res = integrate_disk(lambda p: np.exp(-(p[:, 0] ** 2 + p[:, 1] ** 2) / 4.0),
                         (0.0, 0.0), 30.0, QuadSpec(rel_tol=1e-9, abs_tol=1e-12))
    assert abs(res.value - 4.0 * math.pi) < 1e-7


def test_interval_disk_dim1():
    res = integrate_disk(lambda p: p[:, 0] ** 2, (0.5,), 1.0,
                         QuadSpec(rel_tol=1e-11, abs_tol=1e-13))
    # int_{-0.5}^{1.5} x^2 dx = (1.5^3 + 0.5^3)/3
    assert abs(res.value - (1.5 ** 3 + 0.5 ** 3) / 3.0) < 1e-10
