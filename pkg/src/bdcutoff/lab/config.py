"""Experiment configuration shared by the runner, probes, and CLI."""

import math
from dataclasses import dataclass

from ..dist import FAMILIES, StationaryDist, make_distribution
from ..errors import ParameterError

FORMATS = ("csv", "json")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat bundle of every knob the CLI exposes.

    Sampler fields mirror SamplerConfig; analysis fields control which
    mixing statistics run per replicate; probe fields are read only by
    the probe that needs them. equilibration=None means the default
    budget of 20*n*ln(n) block updates.
    """

    family: str = "uniform"
    n_list: tuple = (64,)
    a: float | None = None
    eps: float | None = None
    mass: tuple | None = None
    reps: int = 1
    k: int = 1
    w: float = 1.0
    steps: int = 0
    burnin: int = 0
    thin: int = 1
    seed: int = 0
    max_rejection_tries: int = 1_000_000
    equilibration: int | None = None
    exact_tau: bool = False
    horizon: int = 10_000_000
    delta: float = 0.75
    exhaustive_starts: bool = False
    raw_kernel: bool = False
    alpha: float | None = None
    coord: int | None = None
    probe_samples: int = 20_000
    probe_thin: int | None = None
    tail_grid: tuple = (5.0, 10.0, 20.0)
    d_values: tuple = (4, 8, 16)
    window: int | None = None
    coupon_c: float = 1.0
    coupon_runs: int = 1000
    workers: int = 1
    timings: bool = False
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if not self.n_list:
            raise ParameterError("n_list must be nonempty")
        object.__setattr__(self, "n_list",
                           tuple(int(n) for n in self.n_list))
        if self.mass is not None:
            object.__setattr__(self, "mass",
                               tuple(float(v) for v in self.mass))
        if self.reps < 0:
            raise ParameterError(f"reps must be >= 0, got {self.reps}")
        if self.format not in FORMATS:
            raise ParameterError(
                f"format must be one of {FORMATS}, got {self.format!r}")
        if self.workers < 1:
            raise ParameterError(f"workers must be >= 1, got {self.workers}")

    def make_dist(self, n: int) -> StationaryDist:
        return make_distribution(self.family, n, a=self.a, eps=self.eps,
                                 mass=self.mass)

    def equilibration_budget(self, n: int) -> int:
        if self.equilibration is not None:
            return int(self.equilibration)
        return max(1, int(round(20.0 * n * math.log(n))))
