"""Job-driven hybrid scheduler with a per-datacenter queue fabric.

Jobs are classified at submission (see classify) and their tasks routed by
one of three policies:

  A: small reduce-heavy  -> every task to the least-loaded datacenter, so
     the whole shuffle stays inside one site.
  B: small map-heavy     -> map tasks follow block replicas greedily by
     unique-holdings; reduces go to the datacenter holding the most blocks.
  C: large               -> same greedy placement, but into fresh dynamic
     queues so the permanent queues stay reserved for small jobs.

Jobs whose filtering percentage is not yet learned bypass the policies and
drain through the global bootstrap queues (MQ_FIFO / RQ_FIFO) first.

Slots pull work through one of two assigners: the task-driven assigner
takes queue heads; the job-driven assigner picks the best-locality map
task within the cursor's queue.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Sequence, Tuple

from .classify import FpRegistry, JobClass, classify, threshold
from .cluster import (ClusterTopology, Locality, VpsId, locality_level,
                      unique_blocks_per_datacenter)
from .workload import TaskInstance, TaskKind

Assignment = Tuple[TaskInstance, str]   # chosen task plus its queue label


class UnplaceableBlocksError(RuntimeError):
    """A job has blocks with no replica anywhere (violated placement pre)."""


@dataclass
class TaskQueue:
    label: str
    kind: TaskKind
    datacenter: Optional[int]          # None for the global bootstrap queues
    dynamic: bool = False
    job_id: Optional[str] = None       # owning job, dynamic queues only
    tasks: Deque[TaskInstance] = field(default_factory=deque)

    def __len__(self) -> int:
        return len(self.tasks)


def locality_preference_index(tasks: Sequence[TaskInstance], vps_id: VpsId,
                              locality_of) -> int:
    """Index of the first VPS-local map task, else first Cen-local, else 0."""
    cen = None
    for i, task in enumerate(tasks):
        level = locality_of(task, vps_id)
        if level is Locality.VPS_LOCAL:
            return i
        if level is Locality.CEN_LOCAL and cen is None:
            cen = i
    return 0 if cen is None else cen


class Scheduler:
    """Assignment interface the engine drives.

    Jobs are engine-owned runtime objects; schedulers read their placement
    and backlog fields and stamp routing metadata (routing_class, policy,
    bootstrap) at arrival.
    """

    name = "base"

    def on_job_arrival(self, job) -> None:
        raise NotImplementedError

    def next_task(self, vps_id: VpsId, kind: TaskKind) -> Optional[Assignment]:
        raise NotImplementedError

    def on_task_done(self, job, task: TaskInstance) -> None:
        pass

    def backlog(self) -> int:
        """Tasks queued and not yet assigned (for end-of-run diagnostics)."""
        raise NotImplementedError


class JossScheduler(Scheduler):

    def __init__(self, topology: ClusterTopology, registry: FpRegistry,
                 assigner: str = "task"):
        if assigner not in ("task", "job"):
            raise ValueError("assigner must be 'task' or 'job' (got %r)" % assigner)
        self.name = "joss-t" if assigner == "task" else "joss-j"
        self.assigner = assigner
        self._topology = topology
        self._registry = registry
        self._td = threshold(topology.k)
        self._avg = topology.avg_vps_per_dc
        self._jobs: Dict[str, object] = {}
        self._fifo = {
            TaskKind.MAP: TaskQueue("MQ_FIFO", TaskKind.MAP, None),
            TaskKind.REDUCE: TaskQueue("RQ_FIFO", TaskKind.REDUCE, None),
        }
        self._queues: Dict[Tuple[int, TaskKind], List[TaskQueue]] = {}
        self._cursor: Dict[Tuple[int, TaskKind], int] = {}
        self._dyn_seq: Dict[Tuple[int, TaskKind], int] = {}
        for c in topology.datacenter_ids:
            for kind, tag in ((TaskKind.MAP, "MQ"), (TaskKind.REDUCE, "RQ")):
                key = (c, kind)
                self._queues[key] = [TaskQueue("%s[%d,0]" % (tag, c), kind, c)]
                self._cursor[key] = 0
                self._dyn_seq[key] = 0

    # -- inspection helpers (also used by tests) --------------------------

    def fifo_queue(self, kind: TaskKind) -> TaskQueue:
        return self._fifo[kind]

    def queues_for(self, datacenter: int, kind: TaskKind) -> List[TaskQueue]:
        return list(self._queues[(datacenter, kind)])

    def cursor(self, datacenter: int, kind: TaskKind) -> int:
        return self._cursor[(datacenter, kind)]

    def pending_task_count(self, datacenter: int) -> int:
        """Queued-not-running tasks bound to one datacenter.

        Bootstrap-queue tasks may run anywhere, so they count toward no
        datacenter.
        """
        return (sum(len(q) for q in self._queues[(datacenter, TaskKind.MAP)])
                + sum(len(q) for q in self._queues[(datacenter, TaskKind.REDUCE)]))

    def backlog(self) -> int:
        total = len(self._fifo[TaskKind.MAP]) + len(self._fifo[TaskKind.REDUCE])
        return total + sum(self.pending_task_count(c)
                           for c in self._topology.datacenter_ids)

    def dump(self) -> str:
        """Stable text snapshot of the whole queue fabric."""
        lines = []
        for kind in (TaskKind.MAP, TaskKind.REDUCE):
            q = self._fifo[kind]
            lines.append("%s: %s" % (q.label, self._fmt(q)))
        for c in self._topology.datacenter_ids:
            lines.append("cen %d: pending=%d map_cursor=%d reduce_cursor=%d"
                         % (c, self.pending_task_count(c),
                            self._cursor[(c, TaskKind.MAP)],
                            self._cursor[(c, TaskKind.REDUCE)]))
            for kind in (TaskKind.MAP, TaskKind.REDUCE):
                for q in self._queues[(c, kind)]:
                    lines.append("  %s: %s" % (q.label, self._fmt(q)))
        return "\n".join(lines)

    @staticmethod
    def _fmt(queue: TaskQueue) -> str:
        return " ".join(t.task_id for t in queue.tasks) if queue.tasks else "-"

    # -- job routing -------------------------------------------------------

    def on_job_arrival(self, job) -> None:
        self._jobs[job.job_id] = job
        fp = self._registry.lookup(job.profile_hash)
        cls = classify(fp, self._td, len(job.maps), self._avg)
        job.routing_class = cls
        if cls is JobClass.UNKNOWN:
            job.bootstrap = True
            job.policy = "FIFO"
            self._fifo[TaskKind.MAP].tasks.extend(job.maps)
            self._fifo[TaskKind.REDUCE].tasks.extend(job.reduces)
        elif cls is JobClass.SMALL_RH:
            self._policy_a(job)
        elif cls is JobClass.SMALL_MH:
            self._policy_b(job)
        else:
            self._policy_c(job)

    def _least_loaded(self) -> int:
        return min(self._topology.datacenter_ids,
                   key=lambda c: (self.pending_task_count(c), c))

    def _policy_a(self, job) -> None:
        job.policy = "A"
        cen = self._least_loaded()
        self._queues[(cen, TaskKind.MAP)][0].tasks.extend(job.maps)
        self._queues[(cen, TaskKind.REDUCE)][0].tasks.extend(job.reduces)

    def _greedy_split(self, job) -> Tuple[Dict[int, List[TaskInstance]], int]:
        """Assign map tasks to datacenters by descending unique holdings.

        Returns ({datacenter: map tasks, ascending block index}, cen_e)
        where cen_e holds the most unique blocks of the original placement.
        """
        ids = self._topology.datacenter_ids
        held = unique_blocks_per_datacenter(
            job.placement, job.job_id, len(job.maps), self._topology)
        cen_e = min(ids, key=lambda c: (-len(held[c]), c))
        remaining = {t.index: t for t in job.maps}
        per_dc: Dict[int, List[TaskInstance]] = {}
        while remaining:
            best = min(ids, key=lambda c: (-len(held[c] & remaining.keys()), c))
            cover = sorted(held[best] & remaining.keys())
            if not cover:
                raise UnplaceableBlocksError(
                    "job %s: %d blocks have no replica in any datacenter"
                    % (job.job_id, len(remaining)))
            per_dc.setdefault(best, []).extend(remaining.pop(i) for i in cover)
        return per_dc, cen_e

    def _policy_b(self, job) -> None:
        job.policy = "B"
        per_dc, cen_e = self._greedy_split(job)
        for c in sorted(per_dc):
            self._queues[(c, TaskKind.MAP)][0].tasks.extend(per_dc[c])
        self._queues[(cen_e, TaskKind.REDUCE)][0].tasks.extend(job.reduces)

    def _policy_c(self, job) -> None:
        job.policy = "C"
        per_dc, cen_e = self._greedy_split(job)
        for c in sorted(per_dc):
            self._new_dynamic(c, TaskKind.MAP, job.job_id).tasks.extend(per_dc[c])
        self._new_dynamic(cen_e, TaskKind.REDUCE, job.job_id).tasks.extend(job.reduces)

    def _new_dynamic(self, datacenter: int, kind: TaskKind, job_id: str) -> TaskQueue:
        key = (datacenter, kind)
        self._dyn_seq[key] += 1
        tag = "MQ" if kind is TaskKind.MAP else "RQ"
        queue = TaskQueue("%s[%d,%d]" % (tag, datacenter, self._dyn_seq[key]),
                          kind, datacenter, dynamic=True, job_id=job_id)
        self._queues[key].append(queue)
        return queue

    # -- task assignment ----------------------------------------------------

    def _locality_of(self, task: TaskInstance, vps_id: VpsId) -> Locality:
        job = self._jobs[task.job_id]
        return locality_level(vps_id, task.job_id, task.index, job.placement)

    def next_task(self, vps_id: VpsId, kind: TaskKind) -> Optional[Assignment]:
        fifo = self._fifo[kind]
        if fifo.tasks:
            if kind is TaskKind.MAP:
                i = locality_preference_index(fifo.tasks, vps_id, self._locality_of)
                task = fifo.tasks[i]
                del fifo.tasks[i]
            else:
                task = fifo.tasks.popleft()
            return task, fifo.label
        key = (vps_id[0], kind)
        queues = self._queues[key]
        cur = self._cursor[key]
        n = len(queues)
        for step in range(n):
            i = (cur + step) % n
            queue = queues[i]
            if not queue.tasks:
                continue
            if kind is TaskKind.MAP and self.assigner == "job":
                j = locality_preference_index(queue.tasks, vps_id, self._locality_of)
                task = queue.tasks[j]
                del queue.tasks[j]
            else:
                task = queue.tasks.popleft()
            self._cursor[key] = (i + 1) % n
            label = queue.label
            if queue.dynamic and not queue.tasks:
                self._retire(key, i)
            return task, label
        return None

    def _retire(self, key: Tuple[int, TaskKind], index: int) -> None:
        # Permanent queue at index 0 never retires, so the list stays non-empty.
        del self._queues[key][index]
        cur = self._cursor[key]
        if cur > index:
            cur -= 1
        self._cursor[key] = cur % len(self._queues[key])
