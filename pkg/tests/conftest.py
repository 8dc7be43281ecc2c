"""Shared helpers and independent oracles for the test suite.

The oracles here deliberately use different algorithms from the library
code they check: hitting times via a dense first-step linear solve and
the spectral gap via a dense symmetric eigensolver, so agreement is
evidence rather than an identity.
"""

import math

import numpy as np

from bdcutoff.kernel import kernel_from_superdiagonal
from bdcutoff.sampler import SamplerConfig, run_gibbs


def equilibration_budget(n: int) -> int:
    return max(1, int(round(20.0 * n * math.log(max(n, 2)))))


def equilibrated_kernel(dist, seed: int, budget: int | None = None):
    """One sampled kernel: block Gibbs from the default interior start."""
    if budget is None:
        budget = equilibration_budget(dist.n)
    trace = run_gibbs(
        SamplerConfig(dist=dist, steps=0, burnin=budget, seed=seed))
    return kernel_from_superdiagonal(dist, trace.final)


def solve_hitting(kern, target: int) -> np.ndarray:
    """First-step-analysis oracle for expected hitting times of `target`.

    Solves the dense linear system (I - Q) h = 1 where Q is the kernel
    with the target row and column removed; h[target] = 0.
    """
    n = kern.n
    K = kern.dense()
    keep = [s for s in range(n) if s != target]
    Q = K[np.ix_(keep, keep)]
    h = np.linalg.solve(np.eye(n - 1) - Q, np.ones(n - 1))
    out = np.zeros(n)
    out[keep] = h
    return out


def dense_gap(kern) -> float:
    """Spectral gap via a dense symmetric eigensolve.

    Symmetrizes with sqrt(K[i,i+1] * K[i+1,i]) off-diagonals, the same
    similarity the library uses, but hands the full matrix to the dense
    LAPACK driver instead of tridiagonal bisection.
    """
    K = kern.dense()
    off = np.sqrt(K.diagonal(1) * K.diagonal(-1))
    S = np.diag(np.diag(K)) + np.diag(off, 1) + np.diag(off, -1)
    vals = np.linalg.eigvalsh(S)
    return float(1.0 - vals[-2])
