"""Birth and death kernels reversible with respect to a fixed distribution.

A kernel is determined by its super-diagonal c, c[i] = K(i, i+1). The
sub-diagonal follows from detailed balance, sub[i] = K(i+1, i) =
c[i] * pi(i)/pi(i+1), and the diagonal soaks up the remainder. Feasible
c vectors are exactly those keeping every diagonal entry nonnegative.
"""

from dataclasses import dataclass, field

import numpy as np

from .dist import StationaryDist
from .errors import FeasibilityError, ParameterError


def _bounds(dist: StationaryDist, c: np.ndarray):
    """Row-form upper bounds: 1 minus the left-neighbor term, capped so
    the last row stays stochastic. The conjunction over all i equals the
    usual two-sided min() constraints (each pair constraint appears as
    the left term of the higher coordinate)."""
    r = dist.ratios
    m = c.size
    upper = np.ones(m)
    upper[1:] = 1.0 - c[:-1] / r[:-1]
    upper[m - 1] = min(upper[m - 1], r[m - 1])
    return upper


def check_feasibility(dist: StationaryDist, c, tol: float = 1e-12):
    """Return the first coordinate violating feasibility, or None.

    A vector c of length n-1 is feasible when every entry sits in
    [0, min(1 - c[i-1]*pi(i-1)/pi(i), (1 - c[i+1])*pi(i+1)/pi(i))]
    with the out-of-range neighbors treated as 0. Violations are
    tested with slack ``tol`` on both sides and attributed row-wise:
    a broken pair constraint names the higher coordinate, whose row's
    diagonal would go negative.
    """
    c = np.asarray(c, dtype=float)
    if c.shape != (dist.n - 1,):
        raise ParameterError(
            f"superdiagonal has length {c.size}, expected {dist.n - 1}")
    bad = (c < -tol) | (c > _bounds(dist, c) + tol)
    if not bad.any():
        return None
    return int(np.nonzero(bad)[0][0])


@dataclass(frozen=True, eq=False)
class BDKernel:
    """Tridiagonal stochastic matrix, stored by its three diagonals."""

    dist: StationaryDist
    c: np.ndarray        # super-diagonal, length n-1
    sub: np.ndarray      # sub-diagonal, length n-1; sub[i] = K(i+1, i)
    diag: np.ndarray     # length n
    max_recip_superdiag: float = field(init=False)

    def __post_init__(self):
        cmin = float(self.c.min()) if self.c.size else 0.0
        v = np.inf if cmin <= 0.0 else float(np.max(1.0 / self.c))
        object.__setattr__(self, "max_recip_superdiag", v)

    @property
    def n(self) -> int:
        return self.dist.n

    def evolve(self, v: np.ndarray) -> np.ndarray:
        """One step of the distribution flow, v -> vK."""
        out = v * self.diag
        out[1:] += v[:-1] * self.c
        out[:-1] += v[1:] * self.sub
        return out

    def lazy(self, delta: float = 0.5) -> "BDKernel":
        """The lazier mixture delta*I + (1-delta)*K; same stationary law.

        Every eigenvalue's distance from 1 shrinks by the factor
        1 - delta.
        """
        if not 0.0 < delta < 1.0:
            raise ParameterError(f"laziness must be in (0, 1), got {delta}")
        keep = 1.0 - delta
        return BDKernel(dist=self.dist, c=keep * self.c, sub=keep * self.sub,
                        diag=delta + keep * self.diag)

    def dense(self) -> np.ndarray:
        """Full n-by-n matrix; for small-state inspection and tests."""
        k = np.diag(self.diag)
        idx = np.arange(self.n - 1)
        k[idx, idx + 1] = self.c
        k[idx + 1, idx] = self.sub
        return k


@dataclass(frozen=True, eq=False)
class SuperDiagState:
    """A super-diagonal paired with its distribution.

    The unit of work for the samplers: a state is a point of the
    feasibility polytope, and a kernel is built from it on demand.
    """

    dist: StationaryDist
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.shape != (self.dist.n - 1,):
            raise ParameterError(
                f"superdiagonal has length {c.size}, expected {self.dist.n - 1}")
        object.__setattr__(self, "c", c)

    def replace(self, i: int, value: float) -> "SuperDiagState":
        c = self.c.copy()
        c[i] = value
        return SuperDiagState(self.dist, c)

    def replace_block(self, start: int, values) -> "SuperDiagState":
        c = self.c.copy()
        c[start:start + len(values)] = values
        return SuperDiagState(self.dist, c)

    def kernel(self, *, check: bool = False) -> BDKernel:
        return kernel_from_superdiagonal(self.dist, self.c, check=check)


def kernel_from_superdiagonal(dist: StationaryDist, c, *, check: bool = True,
                              tol: float = 1e-12) -> BDKernel:
    """Assemble the kernel with super-diagonal c.

    With ``check`` (the default) an infeasible c raises FeasibilityError
    carrying the first offending coordinate.
    """
    c = np.asarray(c, dtype=float).copy()
    if c.shape != (dist.n - 1,):
        raise ParameterError(
            f"superdiagonal has length {c.size}, expected {dist.n - 1}")
    if check:
        idx = check_feasibility(dist, c, tol=tol)
        if idx is not None:
            raise FeasibilityError(idx)
    sub = c / dist.ratios
    diag = np.ones(dist.n)
    diag[:-1] -= c
    diag[1:] -= sub
    # tolerated slack can push a boundary-tight diagonal an ulp below zero
    np.maximum(diag, 0.0, out=diag)
    return BDKernel(dist=dist, c=c, sub=sub, diag=diag)


def kernel_from_subdiagonal(dist: StationaryDist, sub, *, check: bool = True,
                            tol: float = 1e-12) -> BDKernel:
    """Assemble the kernel with sub-diagonal ``sub`` via detailed balance."""
    sub = np.asarray(sub, dtype=float)
    if sub.shape != (dist.n - 1,):
        raise ParameterError(
            f"subdiagonal has length {sub.size}, expected {dist.n - 1}")
    return kernel_from_superdiagonal(dist, sub * dist.ratios,
                                     check=check, tol=tol)


def subdiagonal_view(dist: StationaryDist, c) -> np.ndarray:
    """Sub-diagonal implied by super-diagonal c, without building a kernel."""
    return np.asarray(c, dtype=float) / dist.ratios


def metropolis_kernel(dist: StationaryDist) -> BDKernel:
    """Lazy Metropolis chain for dist.

    Proposes each neighbor with probability 1/4 and accepts with the
    usual ratio, so K(i, i+1) = min(1, pi(i+1)/pi(i))/4. Holding
    probability is at least 1/2 everywhere.
    """
    return kernel_from_superdiagonal(dist, 0.25 * dist.caps, check=False)
