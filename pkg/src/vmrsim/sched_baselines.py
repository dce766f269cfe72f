"""Comparison schedulers: FIFO, Fair, and Capacity.

All three pull straight from per-job backlogs (no datacenter queue fabric)
and so model schedulers that are unaware of datacenter boundaries.  Map
picks inside the chosen job always use the locality preference scan
(VPS-local, then Cen-local, then head).  Reduce tasks of a job become
eligible once its first map task has completed, so shuffle has something
to fetch.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .cluster import VpsId, locality_level
from .sched_joss import Assignment, Scheduler, locality_preference_index
from .workload import TaskInstance, TaskKind


class _BacklogScheduler(Scheduler):
    """Shared plumbing: job roster, backlog picks, gate rule."""

    def __init__(self):
        self._jobs: List[object] = []

    def on_job_arrival(self, job) -> None:
        job.routing_class = job.declared_class
        job.policy = self.name
        self._jobs.append(job)
        self._enroll(job)

    def _enroll(self, job) -> None:
        pass

    def backlog(self) -> int:
        return sum(len(j.map_backlog) + len(j.reduce_backlog) for j in self._jobs)

    @staticmethod
    def _eligible(job, kind: TaskKind) -> bool:
        if kind is TaskKind.MAP:
            return bool(job.map_backlog)
        return bool(job.reduce_backlog) and job.first_map_done_at is not None

    def _take(self, job, vps_id: VpsId, kind: TaskKind) -> TaskInstance:
        if kind is TaskKind.MAP:
            def locality_of(task, vps):
                return locality_level(vps, task.job_id, task.index, job.placement)
            i = locality_preference_index(job.map_backlog, vps_id, locality_of)
            task = job.map_backlog[i]
            del job.map_backlog[i]
            return task
        return job.reduce_backlog.popleft()


class FifoScheduler(_BacklogScheduler):
    """Strict submission order; locality preference only within a job."""

    name = "fifo"

    def next_task(self, vps_id: VpsId, kind: TaskKind) -> Optional[Assignment]:
        for job in self._jobs:
            if self._eligible(job, kind):
                return self._take(job, vps_id, kind), "FIFO"
        return None


class FairScheduler(_BacklogScheduler):
    """Serve the job with the fewest running tasks of the requested kind."""

    name = "fair"

    def next_task(self, vps_id: VpsId, kind: TaskKind) -> Optional[Assignment]:
        best = None
        best_key = None
        for job in self._jobs:
            if not self._eligible(job, kind):
                continue
            running = (job.running_maps if kind is TaskKind.MAP
                       else job.running_reduces)
            key = (running, job.spec.order_index)
            if best is None or key < best_key:
                best, best_key = job, key
        if best is None:
            return None
        return self._take(best, vps_id, kind), "FAIR"


@dataclass
class CapacityQueue:
    name: str
    fraction: float
    jobs: List[object] = field(default_factory=list)

    def running(self, kind: TaskKind) -> int:
        if kind is TaskKind.MAP:
            return sum(j.running_maps for j in self.jobs)
        return sum(j.running_reduces for j in self.jobs)


class CapacityScheduler(_BacklogScheduler):
    """Named queues with capacity fractions; spare capacity spills over.

    Jobs are spread over the queues round-robin by submission index.  The
    most under-served queue (running / fraction, ties by config order) is
    offered the slot first.
    """

    name = "capacity"

    def __init__(self, queues: Sequence[Tuple[str, float]] = (("q0", 0.5), ("q1", 0.5))):
        super().__init__()
        if not queues:
            raise ValueError("capacity scheduler needs at least one queue")
        if any(fraction <= 0 for _, fraction in queues):
            raise ValueError("capacity fractions must be positive")
        total = sum(fraction for _, fraction in queues)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("capacity fractions must sum to 1 (got %r)" % total)
        self._queues = [CapacityQueue(name, fraction) for name, fraction in queues]

    def _enroll(self, job) -> None:
        queue = self._queues[(job.spec.order_index - 1) % len(self._queues)]
        queue.jobs.append(job)

    def next_task(self, vps_id: VpsId, kind: TaskKind) -> Optional[Assignment]:
        order = sorted(range(len(self._queues)),
                       key=lambda i: (self._queues[i].running(kind) / self._queues[i].fraction, i))
        for i in order:
            queue = self._queues[i]
            for job in queue.jobs:
                if self._eligible(job, kind):
                    return self._take(job, vps_id, kind), "CAPQ[%s]" % queue.name
        return None
