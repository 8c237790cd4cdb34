"""Seeded synthetic workload generation.

Every draw is derived from random.Random(seed).random() alone, through the
documented transforms below, so a seed reproduces the exact same job list
on any platform:

  fixed v          -> v
  uniform [lo,hi]  -> lo + floor(r * (hi - lo + 1))        (integer, inclusive)
  choices [(v,w)]  -> first v whose cumulative normalized weight exceeds r
  exponential mean -> -mean * ln(1 - r)

Per job the draw order is: interarrival, duration, gpu_count, group, mem.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .scheduler import JobRequest


class InvalidDistributionError(ValueError):
    pass


@dataclass(frozen=True)
class Fixed:
    value: float


@dataclass(frozen=True)
class Uniform:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise InvalidDistributionError(f"uniform bounds reversed: [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Choices:
    options: tuple[tuple[object, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "options", tuple((v, float(w)) for v, w in self.options))
        if not self.options:
            raise InvalidDistributionError("choices distribution needs at least one option")
        if any(w < 0 for _, w in self.options):
            raise InvalidDistributionError("choice weights must be non-negative")
        if sum(w for _, w in self.options) <= 0:
            raise InvalidDistributionError("choice weights must sum to a positive value")


Dist = Fixed | Uniform | Choices


def sample(dist: Dist, r: float):
    if isinstance(dist, Fixed):
        return dist.value
    if isinstance(dist, Uniform):
        span = dist.hi - dist.lo + 1
        return dist.lo + min(span - 1, int(r * span))
    total = sum(w for _, w in dist.options)
    acc = 0.0
    for value, weight in dist.options:
        acc += weight / total
        if r < acc:
            return value
    return dist.options[-1][0]


def _min_value(dist: Dist) -> float:
    if isinstance(dist, Fixed):
        return dist.value
    if isinstance(dist, Uniform):
        return dist.lo
    return min(v for v, _ in dist.options)


@dataclass(frozen=True)
class WorkloadParams:
    """Knobs for generate_workload. Exactly one of n_jobs/horizon_min is set."""

    seed: int
    mean_interarrival_min: float
    duration_min: Dist
    gpu_count: Dist
    group: Dist
    mem_gb: Dist = field(default=Fixed(0))
    n_jobs: int | None = None
    horizon_min: int | None = None
    interarrival: str = "exponential"  # or "fixed" (zero variance)

    def __post_init__(self):
        if (self.n_jobs is None) == (self.horizon_min is None):
            raise InvalidDistributionError("set exactly one of n_jobs / horizon_min")
        if self.n_jobs is not None and self.n_jobs < 0:
            raise InvalidDistributionError("n_jobs must be >= 0")
        if self.horizon_min is not None and self.horizon_min <= 0:
            raise InvalidDistributionError("horizon_min must be > 0")
        if self.mean_interarrival_min <= 0:
            raise InvalidDistributionError("mean_interarrival_min must be > 0")
        if self.interarrival not in ("exponential", "fixed"):
            raise InvalidDistributionError(f"unknown interarrival mode {self.interarrival!r}")
        if _min_value(self.duration_min) < 1:
            raise InvalidDistributionError("duration_min distribution must stay >= 1 minute")
        if _min_value(self.gpu_count) < 0:
            raise InvalidDistributionError("gpu_count distribution must stay >= 0")
        if _min_value(self.mem_gb) < 0:
            raise InvalidDistributionError("mem_gb distribution must stay >= 0")
        if isinstance(self.group, Choices):
            if any(not isinstance(v, str) or not v for v, _ in self.group.options):
                raise InvalidDistributionError("group mix must choose non-empty group names")
        elif isinstance(self.group, Fixed):
            if not isinstance(self.group.value, str) or not self.group.value:
                raise InvalidDistributionError("group must be a non-empty group name")
        else:
            raise InvalidDistributionError("group mix must be a fixed name or weighted choices")


def generate_workload(params: WorkloadParams) -> list[JobRequest]:
    """Deterministic job list: same seed, same jobs, byte for byte.

    Arrival times are non-decreasing and job ids ascend with arrival order.
    """
    rng = random.Random(params.seed)
    jobs: list[JobRequest] = []
    clock = 0.0
    job_id = 1
    while params.n_jobs is None or job_id <= params.n_jobs:
        if params.interarrival == "fixed":
            gap = params.mean_interarrival_min
        else:
            gap = -params.mean_interarrival_min * math.log(1.0 - rng.random())
        clock += gap
        arrival = int(clock)
        if params.horizon_min is not None and arrival > params.horizon_min:
            break
        duration = int(sample(params.duration_min, rng.random()))
        gpus = int(sample(params.gpu_count, rng.random()))
        group = sample(params.group, rng.random())
        mem = int(sample(params.mem_gb, rng.random()))
        jobs.append(JobRequest(
            job_id=job_id,
            user=f"u{job_id}",
            group=str(group),
            gpu_count=gpus,
            mem_gb=mem,
            duration_min=duration,
            submit_time_min=arrival,
        ))
        job_id += 1
    return jobs
