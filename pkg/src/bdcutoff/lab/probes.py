"""Statistical probes of the sampled-kernel ensemble.

Each probe runs equilibrated samples through one distributional check
and returns a ProbeResult: a flat summary dict plus per-row statistics,
every row carrying its sample count and a standard error. The module
also exposes the reusable interval/tail/conditional checks that the
test suite applies to both Gibbs output and the small-n rejection
oracle.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ks_2samp

from ..errors import ParameterError
from ..sampler import (SamplerConfig, collect_window, oracle_samples,
                       run_coupled_pair, run_gibbs, stream_fingerprint,
                       substream)
from .config import ExperimentConfig

SIN_REFERENCE_MEDIAN = 1.0 / 3.0


def sin_reference_cdf(x):
    """The sine limit curve for a superdiagonal entry under flat mass.

    Exact for the EDGE coordinate (or given a neighbor pinned at zero);
    interior coordinates equilibrate to interior_reference_cdf instead.
    The marginal probe reports distance to both.
    """
    return np.sin(0.5 * np.pi * np.clip(x, 0.0, 1.0))


def interior_reference_cdf(x):
    """Equilibrium law of an interior superdiagonal entry, flat mass.

    Density 1 + cos(pi x) on [0, 1]: the square of the transfer
    operator's top eigenfunction, against the sine curve's single
    power at the boundary. Median ~0.26, against the sine curve's 1/3.
    """
    x = np.clip(x, 0.0, 1.0)
    return x + np.sin(np.pi * x) / np.pi


def coupon_miss_reference(c: float) -> float:
    """Limit fraction of runs with an untouched coordinate at t = n(ln n - c)/k."""
    return 1.0 - math.exp(-math.exp(c))


@dataclass(frozen=True)
class ProbeResult:
    probe: str
    summary: dict
    fieldnames: tuple
    rows: list = field(default_factory=list)
    flags: tuple = ()


def _auto_thin(cfg: ExperimentConfig, m: int) -> int:
    """Spacing between retained states.

    A coordinate refreshes roughly every (m/k) block updates, so the
    config default thin=1 would hand back near-duplicate values; space
    retained states by about a quarter of a refresh interval unless the
    caller set probe_thin explicitly.
    """
    if cfg.probe_thin is not None:
        return max(1, int(cfg.probe_thin))
    return max(1, m // (4 * cfg.k))


def _center_coord(cfg: ExperimentConfig, m: int) -> int:
    coord = cfg.coord if cfg.coord is not None else m // 2
    if not 0 <= coord < m:
        raise ParameterError(f"coordinate {coord} outside [0, {m - 1}]")
    return coord


def _window_samples(cfg, dist, coords, count, tag, thin=None):
    budget = cfg.equilibration_budget(dist.n)
    if thin is None:
        thin = _auto_thin(cfg, dist.n - 1)
    seed = int(stream_fingerprint(cfg.seed, tag))
    vals = collect_window(dist, coords, count, k=cfg.k, w=cfg.w,
                          burnin=budget, thin=thin, seed=seed)
    return vals, budget, thin


def _quantile_se(sorted_vals: np.ndarray, q: float) -> float:
    """Order-statistic standard error via the binomial band at q."""
    n = len(sorted_vals)
    if n < 4:
        return float("inf")
    half = math.sqrt(q * (1.0 - q) / n)
    lo = float(np.quantile(sorted_vals, max(0.0, q - half)))
    hi = float(np.quantile(sorted_vals, min(1.0, q + half)))
    return 0.5 * (hi - lo)


def _ks_against(sorted_samples: np.ndarray, cdf) -> float:
    ref = cdf(sorted_samples)
    n = len(sorted_samples)
    hi = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(hi - ref, ref - (hi - 1.0 / n))))


def probe_marginal(cfg: ExperimentConfig) -> ProbeResult:
    """Empirical CDF of one coordinate against the sine limit curve.

    Uses n_list[0]; flat mass is the family the reference law belongs
    to. The KS distance is computed from the full sorted sample, not
    the table grid. ks is against the sine curve; ks_interior against
    the interior law, which is what a mid-chain coordinate actually
    follows (the sine curve matches the edge; see the reference-cdf
    docstrings).
    """
    dist = cfg.make_dist(cfg.n_list[0])
    m = dist.n - 1
    coord = _center_coord(cfg, m)
    flags = []
    if min(coord, m - 1 - coord) < 20:
        flags.append(f"coordinate {coord} is within 20 of a boundary")
    vals, budget, thin = _window_samples(
        cfg, dist, [coord], cfg.probe_samples, tag=3)
    samples = np.sort(vals[:, 0])
    count = len(samples)

    ks = _ks_against(samples, sin_reference_cdf)
    ks_interior = _ks_against(samples, interior_reference_cdf)

    rows = []
    for x in np.linspace(0.05, 1.0, 20):
        r = float(sin_reference_cdf(x))
        emp = float(np.searchsorted(samples, x, side="right")) / count
        rows.append({
            "x": round(float(x), 10), "empirical": emp, "reference": r,
            "reference_interior": float(interior_reference_cdf(x)),
            "abs_gap": abs(emp - r),
            "se": math.sqrt(r * (1.0 - r) / count), "count": count})
    summary = {
        "n": dist.n, "coord": coord, "samples": count, "burnin": budget,
        "thin": thin, "ks": ks, "ks_interior": ks_interior,
        "empirical_median": float(np.quantile(samples, 0.5)),
        "reference_median": SIN_REFERENCE_MEDIAN}
    return ProbeResult(
        probe="marginal", summary=summary,
        fieldnames=("x", "empirical", "reference", "reference_interior",
                    "abs_gap", "se", "count"),
        rows=rows, flags=tuple(flags))


def probe_tail(cfg: ExperimentConfig) -> ProbeResult:
    """Tail regularity f(x) = x P[c < 1/x] on the configured grid.

    f should be nondecreasing and bounded by 16 times the coordinate
    cap. For flat mass its large-x limit is the marginal density at 0:
    pi/2 at the edge coordinate, 2 at interior coordinates.
    """
    dist = cfg.make_dist(cfg.n_list[0])
    m = dist.n - 1
    coord = _center_coord(cfg, m)
    flags = []
    if min(coord, m - 1 - coord) < 20:
        flags.append(f"coordinate {coord} is within 20 of a boundary")
    vals, budget, thin = _window_samples(
        cfg, dist, [coord], cfg.probe_samples, tag=4)
    samples = vals[:, 0]
    count = len(samples)
    cap = float(dist.caps[coord])
    bound = 16.0 * cap

    grid = sorted(float(x) for x in cfg.tail_grid)
    if not grid or grid[0] <= 0:
        raise ParameterError("tail grid must be positive")
    rows = []
    for x in grid:
        p = float(np.mean(samples < 1.0 / x))
        se = x * math.sqrt(p * (1.0 - p) / count)
        rows.append({"x": x, "prob": p, "f": x * p, "se": se,
                     "count": count, "bound": bound,
                     "bound_ok": x * p <= bound + 3.0 * se,
                     "monotone_ok": True})
    for prev, row in zip(rows, rows[1:]):
        slack = 3.0 * math.hypot(prev["se"], row["se"])
        if row["f"] < prev["f"] - slack:
            row["monotone_ok"] = False
    monotone_violations = sum(not r["monotone_ok"] for r in rows)
    bound_violations = sum(not r["bound_ok"] for r in rows)
    if monotone_violations:
        flags.append(f"{monotone_violations} monotonicity violations over 3 SE")
    if bound_violations:
        flags.append(f"{bound_violations} cap-bound violations over 3 SE")
    summary = {
        "n": dist.n, "coord": coord, "samples": count, "burnin": budget,
        "thin": thin, "f_last": rows[-1]["f"], "x_last": rows[-1]["x"],
        "limit_target": math.pi / 2.0, "limit_target_interior": 2.0,
        "monotone_violations": monotone_violations,
        "bound_violations": bound_violations}
    return ProbeResult(
        probe="tail", summary=summary,
        fieldnames=("x", "prob", "f", "se", "count", "bound", "bound_ok",
                    "monotone_ok"),
        rows=rows, flags=tuple(flags))


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if len(x) < 4 or np.std(x) == 0.0 or np.std(y) == 0.0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def _partial_corr(left, mid, right) -> float:
    """Correlation of the flanks with the middle regressed out.

    Plain within-bin correlation would not vanish under conditional
    independence: the middle value still varies inside a bin and drives
    both flanks. Each flank is residualized on [1, mid, mid^2], which
    removes that leakage through quadratic order; the linear-only
    version leaves a visible ~0.01 floor at realistic bin widths.
    """
    design = np.column_stack([np.ones(mid.size), mid, mid * mid])
    try:
        res_l = left - design @ np.linalg.lstsq(design, left, rcond=None)[0]
        res_r = right - design @ np.linalg.lstsq(design, right, rcond=None)[0]
    except np.linalg.LinAlgError:
        return float("nan")
    return _pearson(res_l, res_r)


def _binned_rho(mid, left, right, edges, min_count):
    """Per-bin partial correlation of the flanking coordinates."""
    rows = []
    which = np.digitize(mid, edges)
    for b in range(len(edges) + 1):
        sel = which == b
        count = int(np.sum(sel))
        lo = float(edges[b - 1]) if b > 0 else float("-inf")
        hi = float(edges[b]) if b < len(edges) else float("inf")
        excluded = count < min_count
        rho = float("nan") if excluded \
            else _partial_corr(left[sel], mid[sel], right[sel])
        if not excluded and math.isnan(rho):
            excluded = True
        # Fisher-style error for a partial correlation with two
        # regressors controlled (mid and its square)
        se = float("nan") if excluded else 1.0 / math.sqrt(count - 5)
        rows.append({"bin": b, "lo": lo, "hi": hi, "count": count,
                     "rho": rho, "se": se, "excluded": excluded})
    return rows


def probe_markov(cfg: ExperimentConfig) -> ProbeResult:
    """Conditional independence of c[i-1] and c[i+1] given c[i].

    Sampled states should show near-zero correlation of the flanks
    within bins of the middle value, while raw adjacent coordinates are
    genuinely anticorrelated. A shuffled control (permuting the right
    flank across samples) calibrates the noise floor.
    """
    n = cfg.n_list[0]
    if n < 6:
        raise ParameterError(f"markov probe needs n >= 6, got {n}")
    dist = cfg.make_dist(n)
    m = dist.n - 1
    coord = _center_coord(cfg, m)
    if not 1 <= coord <= m - 2:
        raise ParameterError(f"coordinate {coord} needs both neighbors")

    count = cfg.probe_samples
    if dist.n <= 12:
        sampler_used = "oracle"
        rng = substream(cfg.seed, 5)
        full = oracle_samples(dist, count, rng)
        trio = full[:, coord - 1:coord + 2]
        budget = thin = 0
    else:
        sampler_used = "gibbs"
        # max-over-bins statistics are sensitive to residual chain
        # autocorrelation, so default to a full sweep per retained
        # sample rather than the quarter sweep the scalar probes use
        sweep = cfg.probe_thin or max(1, m // max(1, cfg.k))
        trio, budget, thin = _window_samples(
            cfg, dist, [coord - 1, coord, coord + 1], count, tag=5,
            thin=max(1, int(sweep)))
    left, mid, right = trio[:, 0], trio[:, 1], trio[:, 2]

    bins = 10
    min_count = 100
    qs = np.linspace(0.0, 1.0, bins + 1)[1:-1]
    edges = np.unique(np.quantile(mid, qs))
    rows = _binned_rho(mid, left, right, edges, min_count)

    perm = substream(cfg.seed, 5, 1).permutation(count)
    control_rows = _binned_rho(mid, left, right[perm], edges, min_count)
    for row, ctl in zip(rows, control_rows):
        row["control_rho"] = ctl["rho"]

    kept = [r for r in rows if not r["excluded"]]
    max_abs = max((abs(r["rho"]) for r in kept), default=float("nan"))
    control_max = max((abs(r["control_rho"]) for r in kept
                       if not math.isnan(r["control_rho"])),
                      default=float("nan"))
    flags = []
    excluded = sum(r["excluded"] for r in rows)
    if excluded:
        flags.append(f"{excluded} bins excluded below {min_count} samples")
    summary = {
        "n": dist.n, "coord": coord, "samples": count,
        "sampler": sampler_used, "burnin": budget, "thin": thin,
        "bins": len(rows), "max_abs_rho": max_abs,
        "control_max_abs_rho": control_max,
        "adjacent_corr": _pearson(mid, right), "excluded_bins": excluded}
    return ProbeResult(
        probe="markov", summary=summary,
        fieldnames=("bin", "lo", "hi", "count", "rho", "se", "excluded",
                    "control_rho"),
        rows=rows, flags=tuple(flags))


def probe_levy_sum(cfg: ExperimentConfig) -> ProbeResult:
    """Stability of centered reciprocal sums over nested windows.

    For each replicate, S(n') = sum(W)/(2n') - ln(2n') with W = 1/c
    over an interior window of n' coordinates, computed at window
    lengths n' and 2n' (the spectral-sum scale is heavy tailed, so the
    recentered sums should share one limit shape). Reports the
    two-sample KS distance, medians, and the median growth ratio of the
    raw sums.
    """
    dist = cfg.make_dist(cfg.n_list[0])
    m = dist.n - 1
    nprime = int(cfg.window) if cfg.window is not None else 64
    if nprime < 2:
        raise ParameterError(f"window must be >= 2, got {nprime}")
    if 2 * nprime > m:
        raise ParameterError(
            f"window 2*{nprime} does not fit {m} coordinates")
    lo = (m - 2 * nprime) // 2
    flags = []
    if lo < 20:
        flags.append(f"window start {lo} is within 20 of a boundary")

    reps = max(1, cfg.reps)
    budget = cfg.equilibration_budget(dist.n)
    s_half = np.empty(reps)
    s_full = np.empty(reps)
    sums_half = np.empty(reps)
    sums_full = np.empty(reps)
    for r in range(reps):
        seed = int(stream_fingerprint(cfg.seed, 7, r))
        run = run_gibbs(SamplerConfig(
            dist=dist, k=cfg.k, w=cfg.w, steps=0, burnin=budget, seed=seed,
            max_rejection_tries=cfg.max_rejection_tries))
        window = run.final[lo:lo + 2 * nprime]
        with np.errstate(divide="ignore"):
            w = 1.0 / window
        sums_half[r] = np.sum(w[:nprime])
        sums_full[r] = np.sum(w)
        s_half[r] = sums_half[r] / (2.0 * nprime) - math.log(2.0 * nprime)
        s_full[r] = sums_full[r] / (4.0 * nprime) - math.log(4.0 * nprime)

    ks = float(ks_2samp(s_half, s_full).statistic) if reps > 1 else float("nan")
    ratio = float(np.median(sums_full) / np.median(sums_half))
    rows = []
    sh, sf = np.sort(s_half), np.sort(s_full)
    for q in (0.1, 0.25, 0.5, 0.75, 0.9):
        rows.append({
            "q": q,
            "s_short": float(np.quantile(sh, q)),
            "se_short": _quantile_se(sh, q),
            "s_long": float(np.quantile(sf, q)),
            "se_long": _quantile_se(sf, q),
            "count": reps})
    summary = {
        "n": dist.n, "window": nprime, "window_start": lo, "reps": reps,
        "burnin": budget, "ks": ks,
        "median_short": float(np.median(s_half)),
        "median_long": float(np.median(s_full)),
        "sum_ratio": ratio}
    return ProbeResult(
        probe="levy", summary=summary,
        fieldnames=("q", "s_short", "se_short", "s_long", "se_long", "count"),
        rows=rows, flags=tuple(flags))


def _coverage_miss(counts: np.ndarray, k: int, m: int) -> bool:
    """True when some coordinate was touched by no chosen block."""
    if k == 1:
        return bool(np.any(counts == 0))
    covered = np.zeros(m, dtype=bool)
    for s in np.nonzero(counts)[0]:
        covered[s:s + k] = True
    return not covered.all()


def probe_contraction(cfg: ExperimentConfig) -> ProbeResult:
    """Coalescence scaling of the coupled pair across chain sizes.

    Per n: coalescence-time statistics over cfg.reps coupled runs
    (censored at 80 n ln n updates), plus a coupon-collector check that
    the fraction of single-chain runs with an untouched coordinate at
    t = n(ln n - c)/k matches the classical limit law.
    """
    results = []
    flags = []
    expected = coupon_miss_reference(cfg.coupon_c)
    reps = max(1, cfg.reps)
    for n in sorted(cfg.n_list):
        dist = cfg.make_dist(n)
        m = dist.n - 1
        horizon = max(1, int(round(80.0 * dist.n * math.log(dist.n))))
        times = []
        censored = 0
        for r in range(reps):
            seed = int(stream_fingerprint(cfg.seed, 11, dist.n, r))
            trace = run_coupled_pair(SamplerConfig(
                dist=dist, k=cfg.k, w=cfg.w, steps=horizon, burnin=0,
                thin=horizon, seed=seed,
                max_rejection_tries=cfg.max_rejection_tries))
            if trace.coalesced_at is None:
                censored += 1
            else:
                times.append(trace.coalesced_at)
        times = np.asarray(times, dtype=float)
        got = len(times)
        if censored:
            flags.append(f"n={dist.n}: {censored} runs hit the horizon")

        t_coupon = max(1, int(round(
            dist.n * (math.log(dist.n) - cfg.coupon_c) / cfg.k)))
        misses = 0
        for r in range(cfg.coupon_runs):
            seed = int(stream_fingerprint(cfg.seed, 13, dist.n, r))
            run = run_gibbs(SamplerConfig(
                dist=dist, k=cfg.k, w=cfg.w, steps=0, burnin=t_coupon,
                seed=seed, max_rejection_tries=cfg.max_rejection_tries))
            if _coverage_miss(run.update_counts, cfg.k, m):
                misses += 1
        frac = misses / cfg.coupon_runs if cfg.coupon_runs else float("nan")
        coupon_se = math.sqrt(max(frac * (1.0 - frac), 1e-12)
                              / cfg.coupon_runs) if cfg.coupon_runs \
            else float("nan")

        scale = dist.n * math.log(dist.n)
        results.append({
            "n": dist.n, "reps": reps, "coalesced": got,
            "censored": censored,
            "mean": float(np.mean(times)) if got else float("nan"),
            "se": float(np.std(times) / math.sqrt(got)) if got
            else float("nan"),
            "median": float(np.median(times)) if got else float("nan"),
            "q10": float(np.quantile(times, 0.1)) if got else float("nan"),
            "q90": float(np.quantile(times, 0.9)) if got else float("nan"),
            "normalized": float(np.mean(times)) / scale if got
            else float("nan"),
            "coupon_T": t_coupon, "coupon_runs": cfg.coupon_runs,
            "coupon_fraction": frac, "coupon_se": coupon_se,
            "coupon_expected": expected})

    exponent = None
    fit = [(math.log(r["n"] * math.log(r["n"])), math.log(r["mean"]))
           for r in results if r["coalesced"] and r["mean"] > 0]
    if len({x for x, _ in fit}) >= 2:
        xs, ys = zip(*fit)
        exponent = float(np.polyfit(xs, ys, 1)[0])
    summary = {
        "k": cfg.k, "w": cfg.w, "n_values": list(int(r["n"]) for r in results),
        "fitted_exponent": exponent, "coupon_c": cfg.coupon_c,
        "coupon_expected": expected}
    return ProbeResult(
        probe="contraction", summary=summary,
        fieldnames=("n", "reps", "coalesced", "censored", "mean", "se",
                    "median", "q10", "q90", "normalized", "coupon_T",
                    "coupon_runs", "coupon_fraction", "coupon_se",
                    "coupon_expected"),
        rows=results, flags=tuple(flags))


PROBES = {
    "marginal": probe_marginal,
    "tail": probe_tail,
    "markov": probe_markov,
    "levy": probe_levy_sum,
    "contraction": probe_contraction,
}


# Reusable interval/tail/conditional checks. The test suite applies
# them to both Gibbs windows and the small-n rejection oracle; each
# returns (rows, violation_count) with violations judged at z SEs.

def half_interval_rows(values, intervals=None, z: float = 3.0):
    """Lower-half mass of each interval should dominate the upper half."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if intervals is None:
        intervals = [(j / 10.0, j / 10.0 + 0.2) for j in range(9)]
        intervals += [(0.0, 0.5), (0.5, 1.0), (0.0, 1.0)]
    rows = []
    bad = 0
    for a, b in intervals:
        if not 0.0 <= a < b <= 1.0:
            raise ParameterError(f"bad interval ({a}, {b})")
        mid = 0.5 * (a + b)
        p_lo = float(np.mean((values > a) & (values < mid)))
        p_hi = float(np.mean((values > mid) & (values < b)))
        # disjoint indicators: Var(p1 - p2) has a +2 p1 p2 covariance term
        se = math.sqrt((p_lo * (1 - p_lo) + p_hi * (1 - p_hi)
                        + 2 * p_lo * p_hi) / n)
        ok = p_lo >= p_hi - z * se
        bad += not ok
        rows.append({"a": a, "b": b, "p_lower": p_lo, "p_upper": p_hi,
                     "se": se, "count": n, "ok": ok})
    return rows, bad


def uniform_domination_rows(values, cap: float, xs=None, z: float = 3.0):
    """Tail of c/cap should sit below the uniform tail 1 - x."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    if xs is None:
        xs = [j / 10.0 for j in range(1, 10)]
    rows = []
    bad = 0
    for x in xs:
        p = float(np.mean(values >= x * cap))
        se = math.sqrt(p * (1.0 - p) / n)
        ok = p <= (1.0 - x) + z * se
        bad += not ok
        rows.append({"x": x, "tail": p, "limit": 1.0 - x, "se": se,
                     "count": n, "ok": ok})
    return rows, bad


def small_value_rows(left, mid, right, cap_mid: float, ratio_mid: float,
                     d_values=(4, 8, 16), bins: int = 3,
                     min_count: int = 200, z: float = 3.0):
    """Conditional small-value bound for the middle of five coordinates.

    left and right are the entries two sites away on each side; the
    conditioning is on coarse quantile bins of the pair. The bound is
    (16/D) * cap; when the mass ratio at the middle site is >= 1 the
    sharper 3/(D-1) form applies as well and is reported, but only the
    16/D form counts as a violation.
    """
    left = np.asarray(left, dtype=float)
    mid = np.asarray(mid, dtype=float)
    right = np.asarray(right, dtype=float)
    edges_l = np.unique(np.quantile(left, np.linspace(0, 1, bins + 1)[1:-1]))
    edges_r = np.unique(np.quantile(right, np.linspace(0, 1, bins + 1)[1:-1]))
    bin_l = np.digitize(left, edges_l)
    bin_r = np.digitize(right, edges_r)
    rows = []
    bad = 0
    for bl in range(len(edges_l) + 1):
        for br in range(len(edges_r) + 1):
            sel = (bin_l == bl) & (bin_r == br)
            count = int(np.sum(sel))
            if count < min_count:
                rows.append({"bin_left": bl, "bin_right": br, "count": count,
                             "D": float("nan"), "prob": float("nan"),
                             "bound": float("nan"), "sharp_bound": float("nan"),
                             "se": float("nan"), "ok": True,
                             "excluded": True})
                continue
            sub = mid[sel]
            for d in d_values:
                p = float(np.mean(sub < 1.0 / d))
                se = math.sqrt(p * (1.0 - p) / count)
                bound = (16.0 / d) * cap_mid
                sharp = 3.0 / (d - 1.0) if ratio_mid >= 1.0 else float("nan")
                ok = p <= bound + z * se
                bad += not ok
                rows.append({"bin_left": bl, "bin_right": br, "count": count,
                             "D": float(d), "prob": p, "bound": bound,
                             "sharp_bound": sharp, "se": se, "ok": ok,
                             "excluded": False})
    return rows, bad
