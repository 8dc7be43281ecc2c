"""Hitting times, spectral gap, gap sandwich, mixing profiles, diagnostics."""

import math

import numpy as np
import pytest

from conftest import dense_gap, equilibrated_kernel, solve_hitting

from bdcutoff.analysis import (CutoffProduct, analyze, cutoff_product,
                               dlp_window, expected_hitting_time,
                               miclo_bounds, mixing_profile, mixing_time,
                               pairwise_distance_profile,
                               separation_decay_bound, sd_mixing_bound,
                               spectral_gap, tv_distance)
from bdcutoff.dist import make_distribution
from bdcutoff.errors import (NonErgodicError, NotMixedError, ParameterError)
from bdcutoff.kernel import kernel_from_superdiagonal, metropolis_kernel
from bdcutoff.sampler import stream_fingerprint

FAMILIES = (("uniform", {}), ("geometric", {"a": 2.0}), ("binomial", {}))


def sampled(family, kw, n, seed):
    return equilibrated_kernel(make_distribution(family, n, **kw), seed)


def full_mixing_two_state():
    return kernel_from_superdiagonal(make_distribution("uniform", 2), [0.5])


def brute_force_bound(kern):
    """Direct evaluation of the two weighted-path maxima in plain floats.

    Inner sums run from just past the median out to the cut x; the
    outer factor is the stationary mass of the far side including x.
    """
    dist = kern.dist
    K = kern.dense()
    pi = dist.mass
    n = kern.n
    m = dist.quantile(0.5)
    b_minus = 0.0
    for x in range(m):
        inner = sum(1.0 / (pi[y] * K[y, y + 1]) for y in range(x, m))
        b_minus = max(b_minus, inner * pi[:x + 1].sum())
    b_plus = 0.0
    for x in range(m + 1, n):
        inner = sum(1.0 / (pi[z] * K[z, z - 1]) for z in range(m + 1, x + 1))
        b_plus = max(b_plus, inner * pi[x:].sum())
    return max(b_minus, b_plus)


# hitting times

def test_hitting_same_state_is_zero():
    kern = metropolis_kernel(make_distribution("uniform", 5))
    assert expected_hitting_time(kern, 2, 2) == 0.0


def test_hitting_uniform_metropolis_path():
    kern = metropolis_kernel(make_distribution("uniform", 4))
    assert expected_hitting_time(kern, 0, 3) == pytest.approx(24.0, rel=1e-12)
    assert expected_hitting_time(kern, 3, 0) == pytest.approx(24.0, rel=1e-12)
    oracle = solve_hitting(kern, 3)
    assert expected_hitting_time(kern, 0, 3) == pytest.approx(
        oracle[0], rel=1e-10)


def test_hitting_two_state_geometric_wait():
    kern = full_mixing_two_state()
    assert expected_hitting_time(kern, 0, 1) == pytest.approx(2.0, rel=1e-12)


def test_hitting_matches_linear_solve_oracle():
    for rep, (family, kw) in enumerate(FAMILIES):
        kern = sampled(family, kw, 16, stream_fingerprint(50, rep)).lazy(0.5)
        for target in (0, 9, 15):
            oracle = solve_hitting(kern, target)
            for start in (0, 4, 15):
                got = expected_hitting_time(kern, start, target)
                assert got == pytest.approx(oracle[start], rel=1e-9)


def test_hitting_blocked_path():
    kern = kernel_from_superdiagonal(
        make_distribution("uniform", 4), [0.5, 0.0, 0.2])
    assert expected_hitting_time(kern, 0, 1) > 0
    with pytest.raises(NonErgodicError) as err:
        expected_hitting_time(kern, 0, 2)
    assert err.value.edge == 1
    with pytest.raises(NonErgodicError):
        expected_hitting_time(kern, 3, 1)
    with pytest.raises(IndexError):
        expected_hitting_time(kern, 0, 4)


# gap sandwich

def test_bound_matches_brute_force_at_small_n():
    for family, kw in FAMILIES:
        kern = metropolis_kernel(make_distribution(family, 8, **kw))
        got = miclo_bounds(kern)
        assert got.B == pytest.approx(brute_force_bound(kern), rel=1e-12)
        assert got.B == max(got.B_plus, got.B_minus)
        assert got.lower == pytest.approx(1.0 / (4.0 * got.B), rel=1e-12)
        assert got.upper == pytest.approx(2.0 / got.B, rel=1e-12)


def test_gap_sandwich_on_sampled_kernels():
    for rep in range(30):
        family, kw = FAMILIES[rep % 3]
        kern = sampled(family, kw, 16, stream_fingerprint(51, rep)).lazy(0.5)
        b = miclo_bounds(kern)
        gap = spectral_gap(kern)
        assert not b.degenerate
        assert b.lower <= gap <= b.upper, (family, rep, b, gap)


def test_gap_sandwich_holds_at_three_states():
    # both sides of the median carry at least the cut state, so the
    # bound is informative even this small
    kern = metropolis_kernel(make_distribution("uniform", 3))
    b = miclo_bounds(kern)
    assert not b.degenerate and b.B > 0.0
    assert b.lower <= spectral_gap(kern) <= b.upper


def test_bound_requires_ergodicity():
    kern = kernel_from_superdiagonal(
        make_distribution("uniform", 5), [0.5, 0.0, 0.2, 0.1])
    with pytest.raises(NonErgodicError):
        miclo_bounds(kern)


# spectral gap

def test_gap_two_state_full_mixing():
    assert spectral_gap(full_mixing_two_state()) == pytest.approx(1.0, abs=1e-12)


def test_gap_identity_kernel():
    kern = kernel_from_superdiagonal(make_distribution("uniform", 4),
                                     np.zeros(3))
    assert spectral_gap(kern) == pytest.approx(0.0, abs=1e-12)


def test_gap_matches_dense_eigensolver():
    kern = metropolis_kernel(make_distribution("uniform", 16))
    assert spectral_gap(kern) == pytest.approx(dense_gap(kern), abs=1e-9)
    for rep in range(6):
        family, kw = FAMILIES[rep % 3]
        k = sampled(family, kw, 12, stream_fingerprint(52, rep)).lazy(0.5)
        assert spectral_gap(k) == pytest.approx(dense_gap(k), abs=1e-9)


# total variation

def test_tv_distance_basics():
    assert tv_distance([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert tv_distance([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.25)
    with pytest.raises(ParameterError):
        tv_distance([0.5, 0.5], [0.2, 0.3, 0.5])


# mixing times

def test_mixing_time_two_state_full_mixing():
    assert mixing_time(full_mixing_two_state(), 0.25) == 1


def test_mixing_time_identity_never_mixes():
    kern = kernel_from_superdiagonal(make_distribution("uniform", 3),
                                     np.zeros(2))
    with pytest.raises(NotMixedError):
        mixing_time(kern, 0.25, horizon=500)


def test_default_starts_match_exhaustive():
    """Endpoint starts realize the worst case over all starts."""
    met = metropolis_kernel(make_distribution("uniform", 8))
    assert mixing_time(met, 0.25) == mixing_time(met, 0.25, exhaustive=True)
    for rep in range(100):
        family, kw = FAMILIES[rep % 3]
        kern = sampled(family, kw, 16, stream_fingerprint(53, rep)).lazy(0.5)
        assert mixing_time(kern, 0.25) == mixing_time(kern, 0.25,
                                                      exhaustive=True), rep


def test_mixing_profile_levels_and_validation():
    kern = sampled("uniform", {}, 12, stream_fingerprint(54)).lazy(0.5)
    prof = mixing_profile(kern, [0.1, 0.25, 0.5])
    assert prof[0.5] <= prof[0.25] <= prof[0.1]
    with pytest.raises(ParameterError):
        mixing_profile(kern, [0.0])
    with pytest.raises(ParameterError):
        mixing_time(kern, 0.25, starts=[99])
    with pytest.raises(ParameterError):
        mixing_time(kern, 0.25, starts=[])


# standardized distance

def test_pairwise_profile_two_state():
    prof = pairwise_distance_profile(full_mixing_two_state(), 3)
    assert prof.shape == (4,)
    assert prof[0] == 1.0
    assert np.allclose(prof[1:], 0.0, atol=1e-15)


def test_pairwise_profile_submultiplicative_smoke():
    kern = sampled("uniform", {}, 8, stream_fingerprint(55)).lazy(0.5)
    d = pairwise_distance_profile(kern, 60)
    for s in range(1, 30):
        for t in range(1, 30):
            assert d[s + t] <= d[s] * d[t] + 1e-10


# window diagnostics

def test_dlp_window_two_state():
    win = dlp_window(full_mixing_two_state(), eps=0.1)
    assert win.window == 0
    assert win.bound == pytest.approx(1.0)
    assert win.ratio == pytest.approx(0.0)


def test_dlp_window_nonnegative():
    kern = sampled("binomial", {}, 24, stream_fingerprint(56)).lazy(0.5)
    win = dlp_window(kern, eps=0.1)
    assert win.window >= 0
    assert win.bound > 0
    with pytest.raises(ParameterError):
        dlp_window(kern, eps=0.5)


# conditional-dependence decay bounds

def test_sd_mixing_bound_flat_mass():
    uni = make_distribution("uniform", 40)
    got = sd_mixing_bound(uni, 3, 1)
    assert got.product == pytest.approx(15.0 * math.log(16.0 / 15.0),
                                        rel=1e-12)
    assert got.product == pytest.approx(0.96808, abs=5e-6)
    assert not got.clamped
    assert sd_mixing_bound(uni, 3, 0) == (1.0, 1.0, False)
    assert sd_mixing_bound(uni, 3, 4).alt_product == pytest.approx(
        (23.0 / 27.0) ** 2, rel=1e-12)


def test_sd_mixing_bound_clamps_steep_descent():
    dist = make_distribution("if", 20, eps=0.25, a=32.0)
    got = sd_mixing_bound(dist, 24, 1)
    assert got.clamped
    assert got.product == 1.0


def test_sd_mixing_bound_validation():
    uni = make_distribution("uniform", 10)
    with pytest.raises(IndexError):
        sd_mixing_bound(uni, 9, 0)
    with pytest.raises(ParameterError):
        sd_mixing_bound(uni, 0, -1)
    with pytest.raises(ParameterError):
        sd_mixing_bound(uni, 0, 4)


def test_separation_decay_bound_values():
    assert separation_decay_bound(0) == 1.0
    assert separation_decay_bound(4) == pytest.approx((23.0 / 27.0) ** 4,
                                                      rel=1e-12)
    assert separation_decay_bound(4) == pytest.approx(0.5266, abs=1e-4)
    with pytest.raises(ParameterError):
        separation_decay_bound(-1)


# full report

def test_analyze_exact_path():
    kern = sampled("uniform", {}, 10, stream_fingerprint(57))
    rep = analyze(kern)
    lazy = kern.lazy(0.5)
    assert rep.gap == pytest.approx(spectral_gap(lazy), rel=1e-12)
    assert not rep.proxy_flag and rep.tau is not None
    assert rep.tau == mixing_time(lazy, 0.25)
    assert rep.cutoff_product == pytest.approx(rep.tau * rep.gap, rel=1e-12)
    assert rep.dlp_window == pytest.approx(math.sqrt(rep.tau / rep.gap),
                                           rel=1e-12)
    assert rep.tau_proxy == max(rep.hit_up, rep.hit_down)
    q = kern.dist.quantile(0.75)
    assert rep.hit_up == pytest.approx(
        expected_hitting_time(lazy, 0, q), rel=1e-12)
    assert rep.miclo.lower <= rep.gap <= rep.miclo.upper


def test_analyze_proxy_path():
    kern = sampled("uniform", {}, 10, stream_fingerprint(57))
    rep = analyze(kern, exact_tau_limit=0)
    assert rep.proxy_flag and rep.tau is None and rep.dlp_window is None
    assert rep.cutoff_product == pytest.approx(rep.tau_proxy * rep.gap,
                                               rel=1e-12)


def test_analyze_raw_kernel_and_validation():
    kern = sampled("geometric", {"a": 2.0}, 10, stream_fingerprint(58))
    rep = analyze(kern, lazy=False)
    assert rep.gap == pytest.approx(spectral_gap(kern), rel=1e-12)
    with pytest.raises(ParameterError):
        analyze(kern, delta=0.4)
    dead = kernel_from_superdiagonal(make_distribution("uniform", 4),
                                     np.zeros(3))
    with pytest.raises(NonErgodicError):
        analyze(dead)


def test_cutoff_product_two_state():
    cp = cutoff_product(full_mixing_two_state(), lazy=False)
    assert isinstance(cp, CutoffProduct)
    assert cp.exact == pytest.approx(1.0, rel=1e-12)
    assert not cp.proxy_used
    assert cp.proxy == pytest.approx(2.0, rel=1e-12)
