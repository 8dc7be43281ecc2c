"""Exact and bounding computations on a single kernel.

Hitting times and the gap sandwich are evaluated in log space
throughout, so families whose masses span thousands of orders of
magnitude stay inside double range: every exponentiated quantity is a
ratio of a cumulative mass to a nearby point mass.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .dist import StationaryDist
from .errors import (NonErgodicError, NotMixedError, ParameterError,
                     SpectrumError)
from .kernel import BDKernel

EXACT_TAU_LIMIT = 512       # above this the hitting proxy stands in for tau
DEFAULT_HORIZON = 10_000_000


def _first_cut(kernel: BDKernel):
    z = np.nonzero(kernel.c == 0.0)[0]
    return int(z[0]) if z.size else None


def expected_hitting_time(kernel: BDKernel, i: int, j: int) -> float:
    """Expected steps from state i to first visit of state j.

    On a path graph the walk must cross every intermediate edge, and
    each crossing time has a closed form: the expected time from v to
    v+1 is (mass of states <= v) / (pi(v) K(v, v+1)), and the mirror
    statement holds going down.
    """
    n = kernel.n
    for s in (i, j):
        if not 0 <= s <= n - 1:
            raise IndexError(f"state {s} out of range [0, {n - 1}]")
    if i == j:
        return 0.0
    dist = kernel.dist
    c = kernel.c
    if i < j:
        vs = np.arange(i, j)
        edges = vs
        logout = dist.log_prefix[vs] - dist.log_mass[vs]
    else:
        vs = np.arange(j + 1, i + 1)
        edges = vs - 1
        logout = dist.log_suffix[vs] - dist.log_mass[vs - 1]
    ce = c[edges]
    blocked = np.nonzero(ce == 0.0)[0]
    if blocked.size:
        raise NonErgodicError(int(edges[blocked[0]]))
    return float(np.exp(logout - np.log(ce)).sum())


class MicloBounds(NamedTuple):
    """Gap sandwich data: 1/(4B) <= gap <= 2/B with B = max(B_plus, B_minus)."""

    B_plus: float
    B_minus: float
    B: float
    lower: float
    upper: float
    degenerate: bool


def _miclo_log_curves(kernel: BDKernel):
    """Log values of the two weighted-path maxima, per candidate cut x.

    Returns (m, vals_minus, vals_plus) where vals_minus[x] covers
    x in [0, m) and vals_plus[x - m - 1] covers x in (m, n). The outer
    factor is the mass of the side INCLUDING the cut state itself:
    with the exclusive reading the lower gap bound demonstrably fails
    on sharply varying mass (factor 16 seen on sampled binomial
    kernels), while the inclusive form holds with margin.
    """
    dist = kernel.dist
    n = kernel.n
    m = dist.quantile(0.5)
    cut = _first_cut(kernel)
    if cut is not None:
        raise NonErgodicError(cut)
    lc = np.log(kernel.c)
    lm = dist.log_mass

    if m >= 1:
        terms = -lm[:m] - lc[:m]
        inner = np.logaddexp.accumulate(terms[::-1])[::-1]
        vals_minus = inner + dist.log_prefix[:m]
    else:
        vals_minus = np.empty(0)

    if m <= n - 2:
        terms = -lm[m:n - 1] - lc[m:n - 1]
        inner = np.logaddexp.accumulate(terms)
        vals_plus = inner + dist.log_suffix[m + 1:]
    else:
        vals_plus = np.empty(0)
    return m, vals_minus, vals_plus


def miclo_bounds(kernel: BDKernel) -> MicloBounds:
    """Weighted-path bounds on the spectral gap around the median state.

    A single-state chain has no candidate cut on either side; that
    degenerate case reports bounds (0, inf) with a flag rather than
    failing, since the kernel itself is fine.
    """
    _, vals_minus, vals_plus = _miclo_log_curves(kernel)
    b_minus = float(np.exp(vals_minus.max())) if vals_minus.size else 0.0
    b_plus = float(np.exp(vals_plus.max())) if vals_plus.size else 0.0
    b = max(b_plus, b_minus)
    if b == 0.0:
        return MicloBounds(b_plus, b_minus, 0.0, 0.0, np.inf, True)
    return MicloBounds(b_plus, b_minus, b, 1.0 / (4.0 * b), 2.0 / b, False)


def spectral_gap(kernel: BDKernel) -> float:
    """Exact gap 1 - lambda_2 via the symmetrized tridiagonal form.

    The symmetrization keeps the same diagonal and replaces each
    off-diagonal pair by its geometric mean, which stays order one even
    when the mass ratios do not. Only the top two eigenvalues are
    extracted (bisection), so cost is O(n) per call.
    """
    n = kernel.n
    e = np.sqrt(kernel.c * kernel.sub)
    vals = eigh_tridiagonal(kernel.diag, e, eigvals_only=True,
                            select="i", select_range=(n - 2, n - 1))
    lam2, lam1 = float(vals[0]), float(vals[1])
    if abs(lam1 - 1.0) > 1e-8:
        raise SpectrumError(
            f"top eigenvalue {lam1!r} differs from 1 beyond 1e-8")
    return 1.0 - lam2


def tv_distance(mu, nu) -> float:
    """Total variation distance, half the L1 gap."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise ParameterError(
            f"length mismatch: {mu.shape} vs {nu.shape}")
    return 0.5 * float(np.abs(mu - nu).sum())


def _crossing_times(kernel: BDKernel, start: int, levels, horizon: int):
    """First t >= 1 with TV(start law at t, pi) < level, per level.

    levels must be sorted descending. Raises NotMixedError at the
    horizon, or earlier when TV stops moving at all (stuck chain).
    """
    pi = kernel.dist.mass
    v = np.zeros(kernel.n)
    v[start] = 1.0
    times = {}
    idx = 0
    prev = np.inf
    stall = 0
    tv = 1.0
    for t in range(1, horizon + 1):
        v = kernel.evolve(v)
        tv = 0.5 * float(np.abs(v - pi).sum())
        assert tv <= prev + 1e-12, "total variation to stationarity increased"
        while idx < len(levels) and tv < levels[idx]:
            times[levels[idx]] = t
            idx += 1
        if idx == len(levels):
            return times
        if tv == prev:
            stall += 1
            if stall >= 64:
                raise NotMixedError(tv, t)
        else:
            stall = 0
        prev = tv
    raise NotMixedError(tv, horizon)


def _resolve_starts(kernel: BDKernel, starts, exhaustive: bool):
    n = kernel.n
    if exhaustive or starts == "all":
        return range(n)
    if starts is None:
        return (0, n - 1) if n > 1 else (0,)
    out = []
    for s in starts:
        s = int(s)
        if not 0 <= s <= n - 1:
            raise ParameterError(f"start {s} out of range [0, {n - 1}]")
        out.append(s)
    if not out:
        raise ParameterError("starts must be nonempty")
    return out


def mixing_profile(kernel: BDKernel, levels, *, starts=None,
                   exhaustive: bool = False,
                   horizon: int = DEFAULT_HORIZON) -> dict:
    """Worst-start threshold times for several TV levels in one sweep."""
    levels = [float(e) for e in levels]
    for e in levels:
        if not 0.0 < e < 1.0:
            raise ParameterError(f"TV level must be in (0, 1), got {e}")
    desc = sorted(set(levels), reverse=True)
    out = {e: 0 for e in desc}
    for s in _resolve_starts(kernel, starts, exhaustive):
        times = _crossing_times(kernel, s, desc, horizon)
        for e, t in times.items():
            if t > out[e]:
                out[e] = t
    return out


def mixing_time(kernel: BDKernel, eps: float = 0.25, *, starts=None,
                exhaustive: bool = False,
                horizon: int = DEFAULT_HORIZON) -> int:
    """Smallest t >= 1 with worst-start TV to stationarity below eps.

    The worst case is taken over the two endpoint starts by default;
    pass exhaustive=True (or explicit starts) to widen the set. For
    birth and death chains the endpoints are the extreme starts, which
    a recorded test checks against exhaustive evaluation.
    """
    prof = mixing_profile(kernel, [eps], starts=starts,
                          exhaustive=exhaustive, horizon=horizon)
    return prof[float(eps)]


def pairwise_distance_profile(kernel: BDKernel, tmax: int) -> np.ndarray:
    """Max-over-start-pairs TV between evolved laws, for t = 0..tmax.

    This is the standardized distance whose submultiplicativity the
    tests exercise; it needs all n starts, so keep n modest.
    """
    n = kernel.n
    p = np.eye(n)
    out = np.empty(tmax + 1)
    out[0] = 1.0 if n > 1 else 0.0
    for t in range(1, tmax + 1):
        q = p * kernel.diag
        q[:, 1:] += p[:, :-1] * kernel.c
        q[:, :-1] += p[:, 1:] * kernel.sub
        p = q
        diff = np.abs(p[:, None, :] - p[None, :, :]).sum(axis=2)
        out[t] = 0.5 * float(diff.max())
    return out


class DlpWindow(NamedTuple):
    """Mixing-window width against the gap-based scale sqrt(tau/gap)."""

    bound: float
    window: int
    ratio: float


def dlp_window(kernel: BDKernel, eps: float = 0.1, *, starts=None,
               exhaustive: bool = False,
               horizon: int = DEFAULT_HORIZON) -> DlpWindow:
    """Measure tau(eps) - tau(1-eps) and the scale it is bounded by.

    For lazy chains the window is at most a constant (depending on eps
    alone) times sqrt(tau(1/4)/gap); the returned ratio is the
    empirical constant.
    """
    if not 0.0 < eps < 0.5:
        raise ParameterError(f"eps must be in (0, 0.5), got {eps}")
    prof = mixing_profile(kernel, [eps, 1.0 - eps, 0.25], starts=starts,
                          exhaustive=exhaustive, horizon=horizon)
    window = prof[eps] - prof[1.0 - eps]
    gap = spectral_gap(kernel)
    bound = math.sqrt(prof[0.25] / gap)
    return DlpWindow(bound=bound, window=window, ratio=window / bound)


class MixingBoundResult(NamedTuple):
    """Decay of conditional dependence along the super-diagonal.

    product multiplies one factor per two coordinates of separation;
    alt_product is the coarser alternating-representation rate at the
    matching distance. clamped marks factors where no contraction is
    guaranteed (steeply falling mass) and 1 was used.
    """

    product: float
    alt_product: float
    clamped: bool


def _contraction_complement(cq: float) -> float:
    # 1 - R where R = 1 + (C-1) log(1 - 1/C); no guarantee for C <= 1
    if cq <= 1.0:
        return 1.0
    return -(cq - 1.0) * math.log1p(-1.0 / cq)


def sd_mixing_bound(dist: StationaryDist, i: int, ell: int) -> MixingBoundResult:
    """Influence bound between coordinate i and coordinates 2*ell away.

    Each factor is the one-step contraction of conditional dependence
    across two coordinates; their product bounds how much conditioning
    at distance 2*ell can move the marginal of coordinate i.
    """
    m = dist.n - 1
    if not 0 <= i <= m - 1:
        raise IndexError(f"coordinate {i} out of range [0, {m - 1}]")
    if ell < 0:
        raise ParameterError(f"ell must be >= 0, got {ell}")
    if ell and i + 2 * ell + 2 > dist.n - 2:
        raise ParameterError(
            f"separation 2*{ell} from coordinate {i} leaves the chain "
            f"(need i + 2*ell + 4 <= n = {dist.n})")
    product = 1.0
    clamped = False
    for q in range(1, ell + 1):
        cq = 16.0 * min(float(dist.ratios[i + 2 * q + 2]), 1.0)
        if cq <= 1.0:
            clamped = True
        product *= _contraction_complement(cq)
    return MixingBoundResult(product=product,
                             alt_product=(23.0 / 27.0) ** (ell // 2),
                             clamped=clamped)


def separation_decay_bound(ell: int) -> float:
    """Alternating-representation dependence bound at separation 4*ell.

    Decays geometrically with ratio 23/27 per unit of ell.
    """
    if ell < 0:
        raise ParameterError(f"ell must be >= 0, got {ell}")
    return (23.0 / 27.0) ** ell


class CutoffProduct(NamedTuple):
    exact: float | None
    proxy: float
    proxy_used: bool


@dataclass(frozen=True)
class AnalysisReport:
    """Mixing summary of one kernel.

    tau and dlp_window are None when the exact mixing time was skipped
    for cost (proxy_flag True); cutoff_product then uses the
    hitting-time proxy.
    """

    gap: float
    miclo: MicloBounds
    hit_up: float
    hit_down: float
    tau: int | None
    tau_proxy: float
    proxy_flag: bool
    cutoff_product: float
    dlp_window: float | None


def analyze(kernel: BDKernel, *, lazy: bool = True, delta: float = 0.75,
            exact_tau_limit: int = EXACT_TAU_LIMIT,
            horizon: int = DEFAULT_HORIZON,
            exhaustive: bool = False) -> AnalysisReport:
    """Build the standard report for one kernel.

    Mixing statements concern the half-lazy version of the chain, so by
    default the kernel is mixed with the identity first; pass
    lazy=False to analyze exactly the kernel given. The exact mixing
    time is computed for n <= exact_tau_limit (pass 0 to force the
    hitting proxy everywhere).
    """
    if not 0.5 <= delta < 1.0:
        raise ParameterError(f"proxy quantile delta must be in [0.5, 1), got {delta}")
    base = kernel.lazy(0.5) if lazy else kernel
    cut = _first_cut(base)
    if cut is not None:
        raise NonErgodicError(cut)
    n = base.n
    dist = base.dist
    gap = spectral_gap(base)
    miclo = miclo_bounds(base)
    hit_up = expected_hitting_time(base, 0, dist.quantile(delta))
    hit_down = expected_hitting_time(base, n - 1, dist.quantile(1.0 - delta))
    tau_proxy = max(hit_up, hit_down)
    if 0 < n <= exact_tau_limit:
        tau = mixing_time(base, 0.25, exhaustive=exhaustive, horizon=horizon)
        return AnalysisReport(gap=gap, miclo=miclo, hit_up=hit_up,
                              hit_down=hit_down, tau=tau, tau_proxy=tau_proxy,
                              proxy_flag=False, cutoff_product=tau * gap,
                              dlp_window=math.sqrt(tau / gap))
    return AnalysisReport(gap=gap, miclo=miclo, hit_up=hit_up,
                          hit_down=hit_down, tau=None, tau_proxy=tau_proxy,
                          proxy_flag=True, cutoff_product=tau_proxy * gap,
                          dlp_window=None)


def cutoff_product(kernel: BDKernel, *, lazy: bool = True,
                   delta: float = 0.75,
                   exact_tau_limit: int = EXACT_TAU_LIMIT,
                   horizon: int = DEFAULT_HORIZON) -> CutoffProduct:
    """tau(1/4)*gap when exact tau is affordable, and the proxy variant.

    A bounded product along a family of chains rules cutoff out, which
    is what makes this the headline ensemble statistic.
    """
    rep = analyze(kernel, lazy=lazy, delta=delta,
                  exact_tau_limit=exact_tau_limit, horizon=horizon)
    exact = None if rep.tau is None else rep.tau * rep.gap
    return CutoffProduct(exact=exact, proxy=rep.tau_proxy * rep.gap,
                         proxy_used=rep.tau is None)
