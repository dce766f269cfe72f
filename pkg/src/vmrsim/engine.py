"""Deterministic discrete-event core: clock, slots, task execution,
shuffle transfers, and traffic accounting.

Cost model: a map task fetches its block at the rate of its locality tier
(local disk, intra-datacenter, or inter-datacenter link), then computes at
the profile's map rate.  Map outputs are partitioned over the job's
reducers; partitions stream to a reducer serially, each at the tier rate
between mapper and reducer, and the reduce computes once all partitions
have landed.  Transfers never contend with each other, so durations stay
analytic and inter-datacenter byte counts are independent of timing.

Events are processed in (timestamp, insertion sequence) order, which makes
a run a pure function of its inputs, seed included.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .classify import FpRegistry, JobClass, classify, job_hash, threshold
from .cluster import (BlockPlacement, ClusterTopology, Locality, VpsId,
                      locality_level, place_blocks, placement_rng)
from .sched_joss import Scheduler
from .workload import (MiB, BenchmarkProfile, JobSpec, TaskInstance, TaskKind,
                       TaskState, WorkloadTrace, expand_tasks, fp_rng,
                       sample_task_fp)

log = logging.getLogger(__name__)

JOB_ARRIVAL = "JOB_ARRIVAL"
MAP_DONE = "MAP_DONE"
SHUFFLE_PIECE_DONE = "SHUFFLE_PIECE_DONE"
REDUCE_READY = "REDUCE_READY"
REDUCE_DONE = "REDUCE_DONE"
SLOT_IDLE = "SLOT_IDLE"


@dataclass(frozen=True)
class CostModel:
    intra_vps_read_rate: float = 128.0 * MiB    # bytes/s, local disk
    intra_dc_bandwidth: float = 64.0 * MiB
    inter_dc_bandwidth: float = 16.0 * MiB

    def __post_init__(self):
        if any(r <= 0 for r in (self.intra_vps_read_rate,
                                self.intra_dc_bandwidth,
                                self.inter_dc_bandwidth)):
            raise ValueError("cost model rates must be positive")
        if not (self.inter_dc_bandwidth <= self.intra_dc_bandwidth
                <= self.intra_vps_read_rate):
            log.warning("cost model tiers not ordered inter <= intra-dc <= "
                        "local; timings may be nonsensical")

    def fetch_rate(self, level: Locality) -> float:
        if level is Locality.VPS_LOCAL:
            return self.intra_vps_read_rate
        if level is Locality.CEN_LOCAL:
            return self.intra_dc_bandwidth
        return self.inter_dc_bandwidth

    def transfer_rate(self, src: VpsId, dst: VpsId) -> float:
        if src == dst:
            return self.intra_vps_read_rate
        if src[0] == dst[0]:
            return self.intra_dc_bandwidth
        return self.inter_dc_bandwidth


MAP_INPUT = "MAP_INPUT"
SHUFFLE = "SHUFFLE"


@dataclass(frozen=True)
class TransferRecord:
    time: float
    source: VpsId
    dest: VpsId
    size_bytes: float
    cause: str                      # MAP_INPUT or SHUFFLE

    @property
    def crosses_datacenter(self) -> bool:
        return self.source[0] != self.dest[0]


def map_task_duration(size_bytes: int, level: Locality, cost: CostModel,
                      profile: BenchmarkProfile) -> float:
    """Fetch-then-compute; a zero-byte block degenerates to zero seconds."""
    if size_bytes == 0:
        return 0.0
    return (size_bytes / cost.fetch_rate(level)
            + size_bytes / profile.map_compute_rate)


def account_traffic(records) -> float:
    """Total bytes that crossed a datacenter boundary."""
    return math.fsum(r.size_bytes for r in records if r.crosses_datacenter)


def warm_registry(profiles: Dict[str, BenchmarkProfile]) -> FpRegistry:
    """Registry preloaded with every profile's declared filtering mean."""
    registry = FpRegistry()
    for profile in profiles.values():
        registry.record(job_hash(profile.name, profile.input_type),
                        [profile.fp_mean])
    return registry


def place_trace(topology: ClusterTopology, trace: WorkloadTrace, seed: int,
                replication: int = 1) -> BlockPlacement:
    """Pre-place every job's blocks so runs under comparison share one
    placement object (each job's replicas derive from its own rng stream,
    so this matches what each run would place on its own)."""
    placement = BlockPlacement(replication=replication)
    for spec in trace.jobs:
        placement.merge(place_blocks(
            topology, spec.job_id, spec.num_blocks(trace.block_size),
            replication, placement_rng(seed, spec.job_id)))
    return placement


@dataclass
class MapRun:
    job_id: str
    block_index: int
    size_bytes: int
    fp: float
    vps: VpsId
    locality: Locality
    queue: str
    assign_seq: int
    t_assign: float
    t_done: float


@dataclass
class ReduceRun:
    job_id: str
    reduce_index: int
    vps: VpsId
    queue: str
    assign_seq: int
    t_assign: float
    pipeline_free_at: float
    t_ready: Optional[float] = None
    t_done: Optional[float] = None
    pieces_landed: int = 0
    piece_log: List[Tuple[float, bool]] = field(default_factory=list)  # (bytes, same-dc)

    def local_bytes(self) -> float:
        return math.fsum(b for b, local in self.piece_log if local)

    def total_bytes(self) -> float:
        return math.fsum(b for b, _ in self.piece_log)


@dataclass
class JobRuntime:
    spec: JobSpec
    profile: BenchmarkProfile
    profile_hash: str
    maps: List[TaskInstance]
    reduces: List[TaskInstance]
    placement: BlockPlacement
    declared_class: JobClass
    routing_class: JobClass = JobClass.UNKNOWN
    policy: str = ""
    bootstrap: bool = False
    map_backlog: object = None        # deques fed to the baseline schedulers
    reduce_backlog: object = None
    running_maps: int = 0
    running_reduces: int = 0
    maps_done: int = 0
    reduces_done: int = 0
    first_map_done_at: Optional[float] = None
    completed_at: Optional[float] = None
    observed_fps: List[float] = field(default_factory=list)
    map_outputs: List[Tuple[float, VpsId, float]] = field(default_factory=list)
    reduce_runs: Dict[int, ReduceRun] = field(default_factory=dict)

    @property
    def job_id(self) -> str:
        return self.spec.job_id

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def r(self) -> int:
        return len(self.reduces)


@dataclass
class RunResult:
    scheduler_name: str
    topology: ClusterTopology
    cost: CostModel
    trace: WorkloadTrace
    seed_placement: int
    replication: int
    jobs: List[JobRuntime]
    maps: List[MapRun]
    reduces: List[ReduceRun]
    transfers: List[TransferRecord]
    event_log: List[str]

    def int_bytes(self) -> float:
        return account_traffic(self.transfers)


class Simulation:
    """One scheduler, one trace, one placement; run() may be called once."""

    def __init__(self, topology: ClusterTopology, cost: CostModel,
                 profiles: Dict[str, BenchmarkProfile], trace: WorkloadTrace,
                 scheduler: Scheduler, registry: FpRegistry,
                 seed_placement: int, replication: int = 1,
                 placement: Optional[BlockPlacement] = None,
                 keep_event_log: bool = False):
        if replication < 1:
            raise ValueError("replication must be >= 1")
        self._topology = topology
        self._cost = cost
        self._scheduler = scheduler
        self._registry = registry
        self._seed = seed_placement
        self._replication = replication
        self._trace = trace
        self._keep_log = keep_event_log
        self._log: List[str] = []
        self._heap: List[tuple] = []
        self._seq = itertools.count()
        self._assign_seq = itertools.count()
        self._now = 0.0
        self._ran = False
        self._probe_pending = set()
        self._assign_count = {TaskKind.MAP: 0, TaskKind.REDUCE: 0}
        self._map_busy = {node.vps_id: 0 for node in topology.nodes}
        self._reduce_busy = {node.vps_id: 0 for node in topology.nodes}
        self._maps: List[MapRun] = []
        self._reduces: List[ReduceRun] = []
        self._transfers: List[TransferRecord] = []

        self._placement = placement if placement is not None \
            else BlockPlacement(replication=replication)
        td = threshold(topology.k)
        avg = topology.avg_vps_per_dc
        self._jobs: Dict[str, JobRuntime] = {}
        self._job_order: List[JobRuntime] = []
        for spec in trace.jobs:
            if spec.profile not in profiles:
                raise ValueError("trace job %s references unknown profile %r"
                                 % (spec.job_id, spec.profile))
            profile = profiles[spec.profile]
            maps, reduces = expand_tasks(spec, trace.block_size)
            rng = fp_rng(seed_placement, spec.job_id)
            for task in maps:
                task.fp = sample_task_fp(profile, rng)
            pre_placed = self._placement.block_count(spec.job_id)
            if pre_placed == 0:
                placed = place_blocks(topology, spec.job_id, len(maps),
                                      replication,
                                      placement_rng(seed_placement, spec.job_id))
                self._placement.merge(placed)
            elif pre_placed != len(maps):
                raise ValueError("job %s: placement covers %d of %d blocks"
                                 % (spec.job_id, pre_placed, len(maps)))
            job = JobRuntime(
                spec=spec, profile=profile,
                profile_hash=job_hash(profile.name, profile.input_type),
                maps=maps, reduces=reduces, placement=self._placement,
                declared_class=classify(profile.fp_mean, td, len(maps), avg),
            )
            job.map_backlog = deque(maps)
            job.reduce_backlog = deque(reduces)
            self._jobs[spec.job_id] = job
            self._job_order.append(job)
            self._push(spec.arrival_time, JOB_ARRIVAL, job)

    # -- event plumbing ----------------------------------------------------

    def _push(self, time: float, kind: str, payload) -> None:
        heapq.heappush(self._heap, (time, next(self._seq), kind, payload))

    def _note(self, kind: str, detail: str) -> None:
        if self._keep_log:
            self._log.append("%.6f %s %s" % (self._now, kind, detail))

    def run(self) -> RunResult:
        if self._ran:
            raise RuntimeError("run() already called on this simulation")
        self._ran = True
        handlers = {
            JOB_ARRIVAL: self._on_job_arrival,
            MAP_DONE: self._on_map_done,
            SHUFFLE_PIECE_DONE: self._on_piece_done,
            REDUCE_READY: self._on_reduce_ready,
            REDUCE_DONE: self._on_reduce_done,
            SLOT_IDLE: self._on_slot_idle,
        }
        while self._heap:
            time, _, kind, payload = heapq.heappop(self._heap)
            if time < self._now:
                raise RuntimeError("event %s scheduled in the past (%r < %r)"
                                   % (kind, time, self._now))
            self._now = time
            handlers[kind](payload)
        stuck = [j.job_id for j in self._job_order if j.completed_at is None]
        if stuck:
            raise RuntimeError(
                "no progress with pending tasks: %d jobs incomplete "
                "(first: %s), scheduler backlog %d"
                % (len(stuck), ", ".join(stuck[:5]), self._scheduler.backlog()))
        return RunResult(
            scheduler_name=self._scheduler.name,
            topology=self._topology, cost=self._cost, trace=self._trace,
            seed_placement=self._seed, replication=self._replication,
            jobs=self._job_order, maps=self._maps, reduces=self._reduces,
            transfers=self._transfers, event_log=self._log,
        )

    # -- slot bookkeeping ----------------------------------------------------

    def _free_slots(self, vps_id: VpsId, kind: TaskKind) -> int:
        node = self._topology.node(vps_id)
        if kind is TaskKind.MAP:
            return node.map_slots - self._map_busy[vps_id]
        return node.reduce_slots - self._reduce_busy[vps_id]

    def _request_probe(self, vps_id: VpsId, kind: TaskKind) -> None:
        key = (vps_id, kind)
        if key in self._probe_pending or self._free_slots(vps_id, kind) == 0:
            return
        self._probe_pending.add(key)
        self._push(self._now, SLOT_IDLE, key)

    def _broadcast_probe(self, kind: TaskKind) -> None:
        # Rotate the offer order with every assignment so that simultaneous
        # probes do not always favour the same datacenter's low-index slots.
        nodes = self._topology.nodes
        start = self._assign_count[kind] % len(nodes)
        for node in nodes[start:] + nodes[:start]:
            self._request_probe(node.vps_id, kind)

    def _probe_all(self) -> None:
        self._broadcast_probe(TaskKind.MAP)
        self._broadcast_probe(TaskKind.REDUCE)

    def _on_slot_idle(self, key) -> None:
        vps_id, kind = key
        self._probe_pending.discard(key)
        while self._free_slots(vps_id, kind) > 0:
            picked = self._scheduler.next_task(vps_id, kind)
            if picked is None:
                return
            task, queue_label = picked
            if kind is TaskKind.MAP:
                self._start_map(vps_id, task, queue_label)
            else:
                self._start_reduce(vps_id, task, queue_label)

    # -- map side ------------------------------------------------------------

    def _start_map(self, vps_id: VpsId, task: TaskInstance, queue: str) -> None:
        job = self._jobs[task.job_id]
        level = locality_level(vps_id, task.job_id, task.index, self._placement)
        duration = map_task_duration(task.size_bytes, level, self._cost,
                                     job.profile)
        run = MapRun(job_id=task.job_id, block_index=task.index,
                     size_bytes=task.size_bytes, fp=task.fp, vps=vps_id,
                     locality=level, queue=queue,
                     assign_seq=next(self._assign_seq),
                     t_assign=self._now, t_done=self._now + duration)
        self._maps.append(run)
        self._transfers.append(TransferRecord(
            time=self._now, source=self._fetch_source(task, vps_id, level),
            dest=vps_id, size_bytes=float(task.size_bytes), cause=MAP_INPUT))
        task.state = TaskState.RUNNING
        job.running_maps += 1
        self._map_busy[vps_id] += 1
        self._assign_count[TaskKind.MAP] += 1
        self._note("MAP_START", "%s on %s from %s (%s)"
                   % (task.task_id, "%d:%d" % vps_id, queue, level.value))
        self._push(run.t_done, MAP_DONE, (job, task, run))

    def _fetch_source(self, task: TaskInstance, vps_id: VpsId,
                      level: Locality) -> VpsId:
        if level is Locality.VPS_LOCAL:
            return vps_id
        replicas = self._placement.replicas(task.job_id, task.index)
        if level is Locality.CEN_LOCAL:
            return min(r for r in replicas if r[0] == vps_id[0])
        return min(replicas)

    def _on_map_done(self, payload) -> None:
        job, task, run = payload
        task.state = TaskState.DONE
        job.running_maps -= 1
        job.maps_done += 1
        job.observed_fps.append(task.fp)
        self._map_busy[run.vps] -= 1
        self._scheduler.on_task_done(job, task)
        self._note("MAP_DONE", task.task_id)
        output_bytes = task.size_bytes * task.fp
        job.map_outputs.append((self._now, run.vps, output_bytes))
        for reducer in job.reduce_runs.values():
            self._queue_piece(job, reducer, self._now, run.vps,
                              output_bytes / job.r)
        first = job.first_map_done_at is None
        if first:
            job.first_map_done_at = self._now
        self._request_probe(run.vps, TaskKind.MAP)
        if first:
            # Shuffle can begin: gated reduce tasks just became eligible.
            self._broadcast_probe(TaskKind.REDUCE)

    # -- reduce side -----------------------------------------------------------

    def _start_reduce(self, vps_id: VpsId, task: TaskInstance, queue: str) -> None:
        job = self._jobs[task.job_id]
        run = ReduceRun(job_id=task.job_id, reduce_index=task.index,
                        vps=vps_id, queue=queue,
                        assign_seq=next(self._assign_seq),
                        t_assign=self._now, pipeline_free_at=self._now)
        self._reduces.append(run)
        job.reduce_runs[task.index] = run
        task.state = TaskState.RUNNING
        job.running_reduces += 1
        self._reduce_busy[vps_id] += 1
        self._assign_count[TaskKind.REDUCE] += 1
        self._note("REDUCE_START", "%s on %s from %s"
                   % (task.task_id, "%d:%d" % vps_id, queue))
        for done_at, src_vps, output_bytes in job.map_outputs:
            self._queue_piece(job, run, done_at, src_vps, output_bytes / job.r)

    def _queue_piece(self, job: JobRuntime, reducer: ReduceRun,
                     ready_at: float, src_vps: VpsId, piece_bytes: float) -> None:
        rate = self._cost.transfer_rate(src_vps, reducer.vps)
        start = max(ready_at, reducer.pipeline_free_at)
        land = start + piece_bytes / rate
        reducer.pipeline_free_at = land
        self._push(land, SHUFFLE_PIECE_DONE, (job, reducer, src_vps, piece_bytes))

    def _on_piece_done(self, payload) -> None:
        job, reducer, src_vps, piece_bytes = payload
        local = src_vps[0] == reducer.vps[0]
        reducer.piece_log.append((piece_bytes, local))
        reducer.pieces_landed += 1
        self._transfers.append(TransferRecord(
            time=self._now, source=src_vps, dest=reducer.vps,
            size_bytes=piece_bytes, cause=SHUFFLE))
        if reducer.pieces_landed == job.m:
            reducer.t_ready = self._now
            self._push(self._now, REDUCE_READY, (job, reducer))

    def _on_reduce_ready(self, payload) -> None:
        job, reducer = payload
        compute = reducer.total_bytes() / job.profile.reduce_compute_rate
        self._note("REDUCE_READY", "%s/r%d" % (job.job_id, reducer.reduce_index))
        self._push(self._now + compute, REDUCE_DONE, (job, reducer))

    def _on_reduce_done(self, payload) -> None:
        job, reducer = payload
        reducer.t_done = self._now
        task = job.reduces[reducer.reduce_index - 1]
        task.state = TaskState.DONE
        job.running_reduces -= 1
        job.reduces_done += 1
        self._reduce_busy[reducer.vps] -= 1
        self._scheduler.on_task_done(job, task)
        self._note("REDUCE_DONE", task.task_id)
        if job.reduces_done == job.r:
            job.completed_at = self._now
            self._registry.record(job.profile_hash, job.observed_fps)
            self._note("JOB_DONE", job.job_id)
        self._request_probe(reducer.vps, TaskKind.REDUCE)

    # -- arrivals -----------------------------------------------------------

    def _on_job_arrival(self, job: JobRuntime) -> None:
        self._note("JOB_ARRIVAL", "%s profile=%s m=%d r=%d"
                   % (job.job_id, job.spec.profile, job.m, job.r))
        self._scheduler.on_job_arrival(job)
        self._probe_all()
