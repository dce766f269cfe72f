"""Synthetic MapReduce workloads: benchmark profiles, traces, and task expansion.

A trace is a fixed submission order of jobs drawn from benchmark profiles,
with arrival times accumulated from sampled inter-arrival intervals.  The
order and times are generated once and shared by every scheduler under
comparison.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Tuple

MiB = 1024 * 1024
GiB = 1024 * MiB

DEFAULT_BLOCK_SIZE = 128 * MiB
DEFAULT_COMPUTE_RATE = 16 * MiB  # bytes/second


class TraceFormatError(ValueError):
    """A trace file failed validation; message carries line/field context."""


@dataclass(frozen=True)
class BenchmarkProfile:
    """Per-benchmark ground truth: filtering percentage and compute rates."""

    name: str
    input_type: str                  # opaque tag, e.g. "web" / "non-web"
    fp_mean: float                   # map-output bytes / map-input bytes
    fp_std: float = 0.0
    map_compute_rate: float = DEFAULT_COMPUTE_RATE      # bytes/s
    reduce_compute_rate: float = DEFAULT_COMPUTE_RATE   # bytes/s

    def __post_init__(self):
        if self.fp_mean < 0 or self.fp_std < 0:
            raise ValueError("filtering percentage parameters must be >= 0")
        if self.map_compute_rate <= 0 or self.reduce_compute_rate <= 0:
            raise ValueError("compute rates must be > 0")


def default_profiles() -> Dict[str, BenchmarkProfile]:
    """The five stock benchmarks used by the shipped scenario presets.

    Grep-like jobs never exceed a filtering percentage of one, so they are
    always map-heavy; Permu is strongly reduce-heavy.
    """
    return {
        "WC": BenchmarkProfile("WC", "web", 1.039, 0.03),
        "SC": BenchmarkProfile("SC", "web", 0.569, 0.03),
        "II": BenchmarkProfile("II", "web", 1.166, 0.03),
        "Grep": BenchmarkProfile("Grep", "web", 0.10, 0.03),
        "Permu": BenchmarkProfile("Permu", "non-web", 3.0, 0.15),
    }


@dataclass(frozen=True)
class JobSpec:
    job_id: str
    profile: str
    input_size_bytes: int
    reduce_tasks: int
    arrival_time: float
    order_index: int

    def __post_init__(self):
        if self.input_size_bytes <= 0:
            raise ValueError("job %s: input size must be positive" % self.job_id)
        if self.reduce_tasks < 1:
            raise ValueError("job %s: reduce task count must be >= 1" % self.job_id)
        if self.arrival_time < 0:
            raise ValueError("job %s: arrival time must be >= 0" % self.job_id)

    def num_blocks(self, block_size: int) -> int:
        return -(-self.input_size_bytes // block_size)  # ceil division


@dataclass
class WorkloadTrace:
    jobs: List[JobSpec]
    block_size: int
    seed: int
    name: str = "trace"

    def __post_init__(self):
        times = [j.arrival_time for j in self.jobs]
        if any(b < a for a, b in zip(times, times[1:])):
            raise TraceFormatError("arrival times must be non-decreasing")
        orders = sorted(j.order_index for j in self.jobs)
        if orders != list(range(1, len(self.jobs) + 1)):
            raise TraceFormatError("order indices must be a permutation of 1..N")

    def fingerprint(self) -> str:
        """Identity used to refuse cross-trace report comparisons."""
        return "%s/%d/%d/%d" % (self.name, len(self.jobs), self.block_size, self.seed)


class TaskKind(Enum):
    MAP = "MAP"
    REDUCE = "REDUCE"


class TaskState(Enum):
    PENDING = "pending"
    QUEUED = "queued"
    RUNNING = "running"
    DONE = "done"


@dataclass
class TaskInstance:
    job_id: str
    kind: TaskKind
    index: int                     # block index for maps, reduce index for reduces
    size_bytes: int = 0            # map-input block size; 0 for reduces
    fp: float = 0.0                # sampled filtering percentage (maps only)
    state: TaskState = TaskState.PENDING

    @property
    def task_id(self) -> str:
        tag = "m" if self.kind is TaskKind.MAP else "r"
        return "%s/%s%d" % (self.job_id, tag, self.index)


def expand_tasks(job: JobSpec, block_size: int) -> Tuple[List[TaskInstance], List[TaskInstance]]:
    """Split a job into its map tasks (one per block) and reduce tasks.

    Every block has the configured size except the last, which carries the
    remainder; sizes always sum to the job's input size.
    """
    if block_size <= 0:
        raise ValueError("block size must be positive")
    size = job.input_size_bytes
    m = job.num_blocks(block_size)
    maps = []
    for i in range(1, m + 1):
        blk = block_size if i < m else size - (m - 1) * block_size
        maps.append(TaskInstance(job.job_id, TaskKind.MAP, i, size_bytes=blk))
    reduces = [TaskInstance(job.job_id, TaskKind.REDUCE, j)
               for j in range(1, job.reduce_tasks + 1)]
    return maps, reduces


def sample_task_fp(profile: BenchmarkProfile, rng: random.Random) -> float:
    """Draw one per-task filtering percentage, normal truncated at zero."""
    if profile.fp_std == 0:
        return profile.fp_mean
    while True:
        value = rng.gauss(profile.fp_mean, profile.fp_std)
        if value >= 0:
            return value


def fp_rng(seed: int, job_id: str) -> random.Random:
    """Per-job generator so samples are shared across scheduler comparisons."""
    return random.Random("%d:fp:%s" % (seed, job_id))


@dataclass(frozen=True)
class ArrivalModel:
    """Inter-arrival interval source: exponential, lognormal, or an explicit list."""

    kind: str                      # "exponential" | "lognormal" | "intervals"
    mean: float = 0.0
    std: float = 0.0
    intervals: Tuple[float, ...] = ()

    def sample(self, n: int, rng: random.Random) -> List[float]:
        if self.kind == "intervals":
            if len(self.intervals) < n:
                raise ValueError("interval list has %d entries, need %d"
                                 % (len(self.intervals), n))
            return list(self.intervals[:n])
        if self.mean <= 0:
            raise ValueError("mean inter-arrival interval must be positive")
        if self.kind == "exponential":
            return [rng.expovariate(1.0 / self.mean) for _ in range(n)]
        if self.kind == "lognormal":
            # Fit (mu, sigma) to the requested mean and standard deviation.
            sigma2 = math.log(1.0 + (self.std / self.mean) ** 2)
            mu = math.log(self.mean) - sigma2 / 2.0
            sigma = math.sqrt(sigma2)
            return [rng.lognormvariate(mu, sigma) for _ in range(n)]
        raise ValueError("unknown arrival model %r" % self.kind)


@dataclass(frozen=True)
class JobGroup:
    profile: str
    count: int
    input_size_bytes: int


@dataclass(frozen=True)
class WorkloadConfig:
    groups: Tuple[JobGroup, ...]
    arrival: ArrivalModel
    reduce_tasks: int = 1
    size_jitter_pct: float = 0.0   # optional +/- % applied to input sizes
    name: str = "trace"


def generate_trace(config: WorkloadConfig,
                   profiles: Dict[str, BenchmarkProfile],
                   seed: int,
                   block_size: int = DEFAULT_BLOCK_SIZE) -> WorkloadTrace:
    """Build a trace with the configured mix in a shuffled submission order."""
    for group in config.groups:
        if group.profile not in profiles:
            raise ValueError("unknown profile %r" % group.profile)
        if group.count < 0:
            raise ValueError("negative job count for profile %r" % group.profile)
    rng = random.Random(seed)
    mix: List[JobGroup] = []
    for group in config.groups:
        mix.extend([group] * group.count)
    if not mix:
        raise ValueError("workload defines no jobs")
    rng.shuffle(mix)
    gaps = config.arrival.sample(len(mix), rng)
    jobs: List[JobSpec] = []
    now = 0.0
    for order, (group, gap) in enumerate(zip(mix, gaps), start=1):
        if gap < 0:
            raise ValueError("negative inter-arrival interval")
        now += gap
        size = group.input_size_bytes
        if config.size_jitter_pct:
            factor = 1.0 + rng.uniform(-config.size_jitter_pct, config.size_jitter_pct) / 100.0
            size = max(1, int(round(size * factor)))
        jobs.append(JobSpec(
            job_id="j%04d" % order,
            profile=group.profile,
            input_size_bytes=size,
            reduce_tasks=config.reduce_tasks,
            arrival_time=now,
            order_index=order,
        ))
    return WorkloadTrace(jobs=jobs, block_size=block_size, seed=seed, name=config.name)


TRACE_HEADER = "# vmrsim-trace S=%d seed=%d name=%s"
TRACE_FIELDS = "job_id profile input_bytes r arrival_seconds order_index"


def save_trace(trace: WorkloadTrace, path) -> None:
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER % (trace.block_size, trace.seed, trace.name) + "\n")
        fh.write("# " + TRACE_FIELDS + "\n")
        for job in trace.jobs:
            fh.write("%s %s %d %d %r %d\n" % (
                job.job_id, job.profile, job.input_size_bytes,
                job.reduce_tasks, job.arrival_time, job.order_index))


def load_trace(path) -> WorkloadTrace:
    block_size = None
    seed = None
    name = "trace"
    jobs: List[JobSpec] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("S="):
                        block_size = int(token[2:])
                    elif token.startswith("seed="):
                        seed = int(token[5:])
                    elif token.startswith("name="):
                        name = token[5:]
                continue
            parts = line.split()
            if len(parts) != 6:
                raise TraceFormatError(
                    "line %d: expected 6 fields (%s), got %d"
                    % (lineno, TRACE_FIELDS, len(parts)))
            try:
                job = JobSpec(
                    job_id=parts[0],
                    profile=parts[1],
                    input_size_bytes=int(parts[2]),
                    reduce_tasks=int(parts[3]),
                    arrival_time=float(parts[4]),
                    order_index=int(parts[5]),
                )
            except ValueError as exc:
                raise TraceFormatError("line %d: %s" % (lineno, exc)) from exc
            jobs.append(job)
    if not jobs:
        raise TraceFormatError("no jobs in trace file %s" % path)
    if block_size is None or seed is None:
        raise TraceFormatError("missing header line with S= and seed=")
    return WorkloadTrace(jobs=jobs, block_size=block_size, seed=seed, name=name)
