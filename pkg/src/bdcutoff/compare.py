"""Comparison of sampled kernels against the Metropolis reference chain.

The Metropolis chain for a distribution is the deterministic benchmark:
if it does not exhibit cutoff, neither do typical random kernels with
the same stationary law. The apparatus here mirrors that argument at
finite n: quartile hitting statistics for the reference chain, a cut
index chosen where the gap-bound sums peak, two weighted functionals
with their normalizers, and an ensemble diagnostic flagging replicates
whose mixing product exceeds the comparison threshold.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import logsumexp

from .analysis import (_miclo_log_curves, analyze, expected_hitting_time,
                       miclo_bounds, spectral_gap)
from .dist import StationaryDist
from .errors import DomainError, EmptyEnsembleError, ParameterError
from .kernel import BDKernel, metropolis_kernel

FLAG_CONSTANT = 24576.0  # comparison threshold multiplier, over alpha


class MetropolisReport(NamedTuple):
    """Quartiles and mixing statistics of the reference chain."""

    u: int
    m: int
    v: int
    tau_met: float
    gap_met: float
    B_met: float
    product_met: float


def metropolis_report(dist: StationaryDist) -> MetropolisReport:
    """Reference-chain summary: quartile hitting time, gap, gap bound.

    tau_met is the larger of the two crossing times between an endpoint
    and the far quartile; for the Metropolis chain this tracks the true
    mixing time within universal constants.
    """
    if dist.n < 5:
        raise ParameterError(
            f"comparison statistics need n >= 5, got {dist.n}")
    met = metropolis_kernel(dist)
    u = dist.quantile(0.25)
    m = dist.quantile(0.5)
    v = dist.quantile(0.75)
    tau_met = max(expected_hitting_time(met, 0, v),
                  expected_hitting_time(met, dist.n - 1, u))
    gap_met = spectral_gap(met)
    b_met = miclo_bounds(met).B
    return MetropolisReport(u=u, m=m, v=v, tau_met=tau_met, gap_met=gap_met,
                            B_met=b_met, product_met=tau_met * gap_met)


class XnSelection(NamedTuple):
    x_n: int
    side: str           # "minus" (below the median) or "plus" (above)
    alpha_achieved: float


def find_xn(dist: StationaryDist, alpha: float | None = None) -> XnSelection:
    """Cut index where the Metropolis gap-bound sums peak.

    Scans every candidate on both sides of the median. With alpha=None
    (the default) the global argmax is returned, realizing the largest
    possible fraction of the overall bound B; ties between sides
    resolve to the minus side for determinism. A requested alpha keeps
    the weaker minus side whenever it attains that fraction of B,
    since the downstream comparison functional is built on the
    below-median window.

    The discrete median breaks mirror symmetry at even state counts:
    the central edge joins the upper sum, so for an even symmetric
    distribution the default argmax sits a quarter of the mass below
    the top rather than above the bottom. Requesting, say, alpha=0.9
    recovers the below-median quarter cut.
    """
    if alpha is not None and not 0.0 < alpha <= 1.0:
        raise ParameterError(
            f"alpha must be in (0, 1], got {alpha}")
    met = metropolis_kernel(dist)
    m, vals_minus, vals_plus = _miclo_log_curves(met)
    best_minus = float(vals_minus.max()) if vals_minus.size else -np.inf
    best_plus = float(vals_plus.max()) if vals_plus.size else -np.inf
    logb = max(best_minus, best_plus)
    if not np.isfinite(logb):
        raise ParameterError(
            f"no usable cut index at n = {dist.n}; need mass strictly "
            "beyond a candidate cut on at least one side")
    frac_minus = float(np.exp(best_minus - logb))
    take_minus = (best_minus >= best_plus
                  or (alpha is not None and frac_minus >= alpha))
    if take_minus:
        x = int(np.argmax(vals_minus))
        side = "minus"
        achieved = frac_minus
    else:
        x = m + 1 + int(np.argmax(vals_plus))
        side = "plus"
        achieved = 1.0
    return XnSelection(x_n=x, side=side, alpha_achieved=achieved)


def _logdot(logterms: np.ndarray, w: np.ndarray) -> float:
    """log of sum(w * exp(logterms)) for nonnegative w; -inf when empty."""
    mask = w > 0.0
    if not mask.any():
        return -np.inf
    return float(logsumexp(logterms[mask] + np.log(w[mask])))


def _check_weights(dist: StationaryDist, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (dist.n,):
        raise ParameterError(
            f"weights have length {w.size}, expected {dist.n}")
    if not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite")
    if np.any(w < 0.0):
        raise DomainError("weights must be nonnegative")
    return w


def _g_window(dist: StationaryDist, x_n: int):
    """Log terms, weight slice, and log outer tail for the g functional."""
    m = dist.quantile(0.5)
    n = dist.n
    if 1 <= x_n <= m - 1:
        # average over [x_n, m) against 1/pi, tail mass strictly below x_n
        logterms = -dist.log_mass[x_n:m]
        sl = slice(x_n, m)
        outer = float(dist.log_prefix[x_n - 1])
    elif m + 1 <= x_n <= n - 2:
        # mirror window (m, x_n] against 1/pi(v-1), tail strictly above
        logterms = -dist.log_mass[m:x_n]
        sl = slice(m + 1, x_n + 1)
        outer = float(dist.log_suffix[x_n + 1])
    else:
        raise ParameterError(
            f"x_n = {x_n} leaves no window against median {m} "
            f"(need 1 <= x_n <= {m - 1} or {m + 1} <= x_n <= {n - 2})")
    return logterms, sl, outer


@dataclass(frozen=True)
class ComparisonFunctionals:
    """Normalized weighted functionals for the comparison argument.

    f_hat and g_hat evaluate the raw (unnormalized) functionals on a
    length-n nonnegative weight vector; beta1 and beta2 are the
    matching normalizers, chosen so the all-ones vector maps to 1 on
    the first branch and on the g window respectively.
    """

    x_n: int
    side: str
    alpha_achieved: float
    beta1: float
    beta2: float
    f_hat: Callable[[np.ndarray], float]
    g_hat: Callable[[np.ndarray], float]


def eval_functionals(dist: StationaryDist, x_n: int,
                     weights) -> tuple[float, float]:
    """Normalized f and g values of a weight vector.

    f is the larger of two branches: mass-ratio weighted sums below the
    3/4 quantile (prefix form) and above the 1/4 quantile (suffix
    form), normalized by the first branch at all-ones. g averages the
    weights over the window between x_n and the median with 1/pi
    weighting; its tail factor cancels in the normalization.
    """
    w = _check_weights(dist, weights)
    u = dist.quantile(0.25)
    v = dist.quantile(0.75)
    lt1 = dist.log_prefix[:v] - dist.log_mass[:v]
    lt2 = dist.log_suffix[u + 1:] - dist.log_mass[u + 1:]
    b1 = _logdot(lt1, w[:v])
    b2 = _logdot(lt2, w[u + 1:])
    b1_ones = _logdot(lt1, np.ones(v))
    if not np.isfinite(b1_ones):
        raise ParameterError(
            f"first branch is empty (3/4 quantile at state {v})")
    f_value = float(np.exp(max(b1, b2) - b1_ones))

    logterms, sl, _ = _g_window(dist, x_n)
    g_num = _logdot(logterms, w[sl])
    g_den = _logdot(logterms, np.ones(len(logterms)))
    g_value = float(np.exp(g_num - g_den))
    return f_value, g_value


def build_functionals(dist: StationaryDist,
                      alpha: float | None = None) -> ComparisonFunctionals:
    """Select x_n and package the raw functionals with their normalizers."""
    sel = find_xn(dist, alpha)
    u = dist.quantile(0.25)
    v = dist.quantile(0.75)
    lt1 = dist.log_prefix[:v] - dist.log_mass[:v]
    lt2 = dist.log_suffix[u + 1:] - dist.log_mass[u + 1:]
    logterms, sl, outer = _g_window(dist, sel.x_n)

    def f_hat(weights) -> float:
        w = _check_weights(dist, weights)
        return float(np.exp(max(_logdot(lt1, w[:v]),
                                _logdot(lt2, w[u + 1:]))))

    def g_hat(weights) -> float:
        w = _check_weights(dist, weights)
        return float(np.exp(outer + _logdot(logterms, w[sl])))

    b1_ones = _logdot(lt1, np.ones(v))
    g_ones = outer + _logdot(logterms, np.ones(len(logterms)))
    beta1 = float(np.exp(-b1_ones))
    beta2 = float(np.exp(-g_ones))
    ones = np.ones(dist.n)
    if _logdot(lt1, ones[:v]) >= _logdot(lt2, ones[u + 1:]):
        assert abs(beta1 * f_hat(ones) - 1.0) < 1e-12
    return ComparisonFunctionals(x_n=sel.x_n, side=sel.side,
                                 alpha_achieved=sel.alpha_achieved,
                                 beta1=beta1, beta2=beta2,
                                 f_hat=f_hat, g_hat=g_hat)


@dataclass(frozen=True)
class ComparisonReport:
    """Ensemble of sampled kernels against the Metropolis benchmark.

    products holds each replicate's proxy mixing product (half-lazy
    kernel); ratios divides by the reference product. flagged is a
    boolean mask, aligned with products, marking replicates whose
    product exceeds threshold = (24576/alpha) * product_met; the
    comparison argument says that event becomes rare as n grows.
    """

    metropolis: MetropolisReport
    x_n: int
    side: str
    alpha: float
    products: np.ndarray
    ratios: np.ndarray
    ratio_quantiles: dict
    threshold: float
    flagged: np.ndarray
    proxy: bool = True


_RATIO_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)


def comparison_diagnostic(dist: StationaryDist, kernels,
                          alpha: float | None = None) -> ComparisonReport:
    """Proxy mixing products of an ensemble, relative to Metropolis."""
    kernels = list(kernels)
    if not kernels:
        raise EmptyEnsembleError("comparison needs at least one kernel")
    for k in kernels:
        if k.dist is not dist and not (
                k.dist.n == dist.n
                and np.array_equal(k.dist.log_mass, dist.log_mass)):
            raise ParameterError(
                "all kernels must share the reference distribution")
    met = metropolis_report(dist)
    sel = find_xn(dist, alpha)
    alpha_used = sel.alpha_achieved if alpha is None else float(alpha)
    products = np.array([
        analyze(k, lazy=True, exact_tau_limit=0).cutoff_product
        for k in kernels])
    ratios = products / met.product_met
    quantiles = {q: float(np.quantile(ratios, q)) for q in _RATIO_QUANTILES}
    threshold = (FLAG_CONSTANT / alpha_used) * met.product_met
    flagged = products > threshold
    return ComparisonReport(metropolis=met, x_n=sel.x_n, side=sel.side,
                            alpha=alpha_used, products=products,
                            ratios=ratios, ratio_quantiles=quantiles,
                            threshold=threshold, flagged=flagged)
