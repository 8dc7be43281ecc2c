"""Uniform sampling from the feasible polytope of super-diagonals.

The workhorse is a block Gibbs sweep: pick a window of k adjacent
coordinates (endpoints reweighted by w), then redraw the window from its
exact conditional, which is uniform on a section of the polytope. For
k = 1 the section is an interval and the draw is a single scaled
uniform; for k >= 2 we rejection-sample from the product of per-site
boxes [0, min(1, ratio)].

A brute-force rejection sampler over the whole polytope doubles as a
ground-truth oracle for small state counts, and a shared-proposal
coupling of two Gibbs chains gives a coalescence-time diagnostic.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .dist import StationaryDist
from .errors import ParameterError, StallError
from .kernel import SuperDiagState

_CHUNK = 65536


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based generator for (seed, key) paths.

    Distinct keys under one seed give statistically independent streams,
    and the mapping is stable across runs and platforms.
    """
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(x) for x in key))
    return np.random.Generator(np.random.Philox(ss))


def stream_fingerprint(seed: int, *key: int) -> int:
    """First state word of the (seed, key) stream, as a plain int."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(x) for x in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SamplerConfig:
    """Settings for one Gibbs run.

    steps counts post-burnin block updates; every thin-th state after
    burnin is retained. w is the relative weight of the two endpoint
    block positions (w = 1 is the unbiased sweep).
    """

    dist: StationaryDist
    k: int = 1
    w: float = 1.0
    steps: int = 0
    burnin: int = 0
    thin: int = 1
    seed: int = 0
    max_rejection_tries: int = 1_000_000

    def __post_init__(self):
        m = self.dist.n - 1
        if not 1 <= self.k <= 8:
            raise ParameterError(f"block size k must be in [1, 8], got {self.k}")
        if self.k > m:
            raise ParameterError(
                f"block size {self.k} exceeds coordinate count {m}")
        if not (math.isfinite(self.w) and self.w > 0.0):
            raise ParameterError(f"endpoint weight w must be positive, got {self.w}")
        if self.steps < 0 or self.burnin < 0:
            raise ParameterError("steps and burnin must be nonnegative")
        if self.thin < 1:
            raise ParameterError(f"thin must be >= 1, got {self.thin}")
        if self.max_rejection_tries < 1:
            raise ParameterError("max_rejection_tries must be >= 1")


@dataclass(frozen=True)
class GibbsTrace:
    samples: np.ndarray       # (kept, n-1), empty when a collector was used
    update_counts: np.ndarray  # times each block start was chosen
    acceptance_stats: np.ndarray  # proposals drawn per block start
    block_updates: int
    block_tries: int          # proposals drawn; equals block_updates at k=1
    final: np.ndarray


@dataclass(frozen=True)
class CoupledTrace:
    distances: np.ndarray     # unequal-coordinate count every thin updates
    coalesced_at: int | None  # update index of exact merge, 1-based;
                              # 0 when the pair starts equal
    updates: int
    final_pair: tuple


def default_initial_state(dist: StationaryDist) -> np.ndarray:
    """A strictly interior point: an eighth of the per-site caps."""
    return 0.125 * dist.caps


def greedy_max_state(dist: StationaryDist) -> np.ndarray:
    """Left-to-right maximal state; a vertex-like start far from typical."""
    m = dist.n - 1
    caps = dist.caps
    rec = 1.0 / dist.ratios
    c = np.zeros(m)
    prev = 0.0
    for i in range(m):
        hi = min(caps[i], 1.0 - rec[i - 1] * prev) if i else caps[0]
        c[i] = hi if hi > 0.0 else 0.0
        prev = c[i]
    return c


def conditional_interval(state: SuperDiagState, i: int) -> tuple[float, float]:
    """Support [0, hi] of the single-site conditional at site i.

    hi can be 0 when the neighbors pin the site; that still defines a
    legal (degenerate) draw.
    """
    dist, c = state.dist, state.c
    m = dist.n - 1
    if not 0 <= i <= m - 1:
        raise IndexError(f"site {i} out of range [0, {m - 1}]")
    r = dist.ratios
    left = 1.0 - c[i - 1] / r[i - 1] if i else 1.0
    right = r[i] * (1.0 - c[i + 1]) if i < m - 1 else r[m - 1]
    hi = min(left, right)
    return (0.0, float(hi) if hi > 0.0 else 0.0)


def site_update(state: SuperDiagState, i: int,
                rng: np.random.Generator) -> SuperDiagState:
    """One exact single-site conditional draw; returns the new state."""
    _, hi = conditional_interval(state, i)
    return state.replace(i, float(rng.random()) * hi)


def block_update(state: SuperDiagState, start: int, k: int,
                 rng: np.random.Generator, *,
                 max_tries: int = 1_000_000) -> SuperDiagState:
    """Redraw coordinates [start, start+k) from their joint conditional.

    k = 1 is the exact interval draw; larger blocks rejection-sample
    from the product of per-site caps, raising StallError if no
    proposal lands within max_tries.
    """
    dist = state.dist
    m = dist.n - 1
    if not 1 <= k <= m:
        raise ParameterError(f"block size must be in [1, {m}], got {k}")
    if not 0 <= start <= m - k:
        raise IndexError(f"block start {start} out of range [0, {m - k}]")
    if k == 1:
        return site_update(state, start, rng)
    c = state.c
    caps = dist.caps
    rec = 1.0 / dist.ratios
    box = caps[start:start + k]
    tries = 0
    while True:
        tries += 1
        if tries > max_tries:
            raise StallError(start, tries - 1)
        prop = rng.random(k) * box
        if _block_ok(c, start, prop, k, rec, m):
            return state.replace_block(start, prop)


def _start_picker(nstarts: int, w: float):
    """Map a uniform to a block start; endpoints carry weight w."""
    if nstarts == 1:
        return lambda u: 0
    tot = (nstarts - 2) + 2.0 * w
    w2 = 2.0 * w
    last = nstarts - 1

    def pick(u: float) -> int:
        x = u * tot
        if x < w:
            return 0
        if x < w2:
            return last
        s = 1 + int(x - w2)
        # float edge can land one past the interior range
        return s if s <= last - 1 else last - 1

    return pick


def _block_ok(c: list, s: int, prop: list, k: int, rec: list, m: int) -> bool:
    """Feasibility of a proposed block, neighbors frozen.

    Proposals already respect the per-site caps, so only the chained
    diagonal constraints and the right boundary need testing.
    """
    prev = c[s - 1] if s else 0.0
    for t in range(k):
        j = s + t
        if j and prop[t] > 1.0 - rec[j - 1] * prev:
            return False
        prev = prop[t]
    j = s + k
    if j <= m - 1 and c[j] > 1.0 - rec[j - 1] * prev:
        return False
    return True


class _Uniforms:
    """Chunked uniform buffer; keeps the hot loops off ndarray indexing."""

    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng):
        self.rng = rng
        self.buf = []
        self.pos = 0

    def take(self) -> float:
        if self.pos >= len(self.buf):
            self.buf = self.rng.random(_CHUNK).tolist()
            self.pos = 0
        v = self.buf[self.pos]
        self.pos += 1
        return v


def run_gibbs(config: SamplerConfig, initial=None, collector=None) -> GibbsTrace:
    """Run the block Gibbs chain and return its trace.

    initial defaults to a strictly interior state. collector, when
    given, is called with each retained state (a list, valid only for
    the duration of the call) instead of storing samples.
    """
    dist = config.dist
    m = dist.n - 1
    if initial is None:
        initial = default_initial_state(dist)
    initial = np.asarray(initial, dtype=float)
    if initial.shape != (m,):
        raise ParameterError(f"initial state has length {initial.size}, expected {m}")

    rng = substream(config.seed)
    total = config.burnin + config.steps
    kept = config.steps // config.thin
    c = [float(v) for v in initial]
    counts = [0] * (m - config.k + 1)
    tries_by = [0] * (m - config.k + 1)
    store = None if collector is not None else np.empty((kept, m))
    stored = 0

    def retain(state):
        nonlocal stored
        if collector is not None:
            collector(state)
        else:
            store[stored] = state
            stored += 1

    if config.k == 1:
        tries = _run_site(dist, c, counts, total, config, rng, retain)
        tries_by = counts  # one proposal per update at k = 1
    else:
        tries = _run_block(dist, c, counts, tries_by, total, config, rng, retain)

    samples = store if store is not None else np.empty((0, m))
    return GibbsTrace(samples=samples, update_counts=np.asarray(counts),
                      acceptance_stats=np.asarray(tries_by),
                      block_updates=total, block_tries=tries,
                      final=np.asarray(c))


def _run_site(dist, c, counts, total, config, rng, retain):
    """Exact single-site sweep; two uniforms per update."""
    m = dist.n - 1
    rat = [float(v) for v in dist.ratios]
    rec = [1.0 / v for v in rat]
    last = m - 1
    burnin, thin = config.burnin, config.thin
    next_keep = burnin + thin
    if m == 1:
        hi0 = min(1.0, rat[0])
        pick = None
    else:
        pick = _start_picker(m, config.w)
    done = 0
    while done < total:
        batch = min(_CHUNK, total - done)
        us = rng.random(2 * batch).tolist()
        for j in range(0, 2 * batch, 2):
            if pick is None:
                i = 0
                hi = hi0
            else:
                i = pick(us[j])
                left = 1.0 - rec[i - 1] * c[i - 1] if i else 1.0
                right = rat[i] * (1.0 - c[i + 1]) if i < last else rat[last]
                hi = left if left < right else right
                if hi < 0.0:
                    hi = 0.0
            c[i] = us[j + 1] * hi
            counts[i] += 1
            done += 1
            if done == next_keep:
                next_keep += thin
                retain(c)
    return total


def _run_block(dist, c, counts, tries_by, total, config, rng, retain):
    """Rejection sweep for k >= 2 blocks."""
    m = dist.n - 1
    k = config.k
    caps = [float(v) for v in dist.caps]
    rec = [1.0 / float(v) for v in dist.ratios]
    pick = _start_picker(m - k + 1, config.w)
    max_tries = config.max_rejection_tries
    burnin, thin = config.burnin, config.thin
    next_keep = burnin + thin
    u = _Uniforms(rng)
    tries_total = 0
    for done in range(1, total + 1):
        s = pick(u.take())
        box = caps[s:s + k]
        tries = 0
        while True:
            tries += 1
            if tries > max_tries:
                raise StallError(s, tries - 1)
            prop = [u.take() * box[t] for t in range(k)]
            if _block_ok(c, s, prop, k, rec, m):
                break
        c[s:s + k] = prop
        counts[s] += 1
        tries_by[s] += tries
        tries_total += tries
        if done == next_keep:
            next_keep += thin
            retain(c)
    return tries_total


def collect_window(dist: StationaryDist, coords, n_samples: int, *,
                   k: int = 1, w: float = 1.0, burnin: int = 1000,
                   thin: int = 10, seed: int = 0, initial=None) -> np.ndarray:
    """Retained values of selected coordinates from one Gibbs run."""
    coords = list(coords)
    out = np.empty((n_samples, len(coords)))
    row = 0

    def grab(state):
        nonlocal row
        for j, i in enumerate(coords):
            out[row, j] = state[i]
        row += 1

    cfg = SamplerConfig(dist=dist, k=k, w=w, steps=n_samples * thin,
                        burnin=burnin, thin=thin, seed=seed)
    run_gibbs(cfg, initial=initial, collector=grab)
    return out


def oracle_samples(dist: StationaryDist, count: int,
                   rng: np.random.Generator, batch: int = 4096) -> np.ndarray:
    """Exact uniform polytope samples by whole-vector rejection.

    Acceptance decays fast with the state count (it is the polytope
    volume over the box volume), so this is a testing oracle for small
    n, not a production sampler.
    """
    m = dist.n - 1
    caps = dist.caps
    rec = 1.0 / dist.ratios
    out = np.empty((count, m))
    got = 0
    while got < count:
        c = rng.random((batch, m)) * caps
        if m > 1:
            ok = np.all(c[:, 1:] <= 1.0 - c[:, :-1] * rec[:-1], axis=1)
            acc = c[ok]
        else:
            acc = c
        take = min(count - got, acc.shape[0])
        out[got:got + take] = acc[:take]
        got += take
    return out


def oracle_sample(dist: StationaryDist, rng: np.random.Generator,
                  max_tries: int = 1_000_000) -> SuperDiagState:
    """One exact uniform polytope point by whole-vector rejection."""
    m = dist.n - 1
    caps = dist.caps
    rec = 1.0 / dist.ratios
    tries = 0
    while tries < max_tries:
        batch = min(4096, max_tries - tries)
        tries += batch
        c = rng.random((batch, m)) * caps
        if m > 1:
            ok = np.nonzero(np.all(c[:, 1:] <= 1.0 - c[:, :-1] * rec[:-1],
                                   axis=1))[0]
            if ok.size:
                return SuperDiagState(dist, c[ok[0]])
        else:
            return SuperDiagState(dist, c[0])
    raise StallError(0, max_tries)


def acceptance_rate(dist: StationaryDist, trials: int,
                    rng: np.random.Generator) -> float:
    """Fraction of box proposals that land in the polytope."""
    m = dist.n - 1
    caps = dist.caps
    rec = 1.0 / dist.ratios
    hits = 0
    left = trials
    while left:
        b = min(left, 65536)
        c = rng.random((b, m)) * caps
        if m > 1:
            hits += int(np.all(c[:, 1:] <= 1.0 - c[:, :-1] * rec[:-1],
                               axis=1).sum())
        else:
            hits += b
        left -= b
    return hits / trials


def run_coupled_pair(config: SamplerConfig, initial_pair=None) -> CoupledTrace:
    """Evolve two chains on shared randomness until they merge.

    Both chains see the same block starts and the same proposal stream;
    each adopts the first proposal feasible for itself. Marginally each
    chain is the plain Gibbs chain, and whenever the first shared
    proposal suits both, the block coalesces exactly.

    The default antipodal pair backs the maximal state off its vertex
    by 1/16: at the vertex a neighbor's conditional slab has width
    exactly 0 and no proposal can ever be accepted. Scaling a feasible
    state by s in [0, 1] stays feasible, and the backoff keeps every
    slab at least cap/16 wide. Explicit boundary pairs are allowed and
    may stall by construction.
    """
    dist = config.dist
    m = dist.n - 1
    k = config.k
    if initial_pair is None:
        initial_pair = (np.zeros(m), 0.9375 * greedy_max_state(dist))
    x = [float(v) for v in np.asarray(initial_pair[0], dtype=float)]
    y = [float(v) for v in np.asarray(initial_pair[1], dtype=float)]
    if len(x) != m or len(y) != m:
        raise ParameterError(f"initial states must have length {m}")

    caps = [float(v) for v in dist.caps]
    rec = [1.0 / float(v) for v in dist.ratios]
    rng = substream(config.seed)
    u = _Uniforms(rng)
    pick = _start_picker(m - k + 1, config.w)
    max_tries = config.max_rejection_tries
    total = config.burnin + config.steps
    thin = config.thin

    dists = []
    coalesced_at = 0 if x == y else None
    for done in range(1, total + 1):
        if coalesced_at is not None:
            break
        s = pick(u.take())
        box = caps[s:s + k]
        ax = ay = None
        tries = 0
        while ax is None or ay is None:
            tries += 1
            if tries > max_tries:
                raise StallError(s, tries - 1)
            prop = [u.take() * box[t] for t in range(k)]
            if ax is None and _block_ok(x, s, prop, k, rec, m):
                ax = prop
            if ay is None and _block_ok(y, s, prop, k, rec, m):
                ay = prop
        x[s:s + k] = ax
        y[s:s + k] = ay
        if ax == ay and x == y:
            coalesced_at = done
            break
        if done % thin == 0:
            dists.append(sum(a != b for a, b in zip(x, y)))

    return CoupledTrace(distances=np.asarray(dists), coalesced_at=coalesced_at,
                        updates=total,
                        final_pair=(np.asarray(x), np.asarray(y)))
