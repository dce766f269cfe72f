"""Virtual cluster topology and input-block placement.

A tenant's cluster is a set of datacenters, each contributing some number
of VPS nodes.  Input data is split into fixed-size blocks whose replicas
are scattered uniformly over the VPSs; the tenant can only observe three
locality levels between a task and its block: same VPS, same datacenter,
or a different datacenter.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Sequence, Set, Tuple

# A VPS is addressed by (datacenter id, local index), both 1-based.
VpsId = Tuple[int, int]


class Locality(Enum):
    VPS_LOCAL = "VPS_LOCAL"
    CEN_LOCAL = "CEN_LOCAL"
    OFF_CEN = "OFF_CEN"


@dataclass(frozen=True)
class VpsNode:
    datacenter: int
    index: int
    map_slots: int = 1
    reduce_slots: int = 1

    @property
    def vps_id(self) -> VpsId:
        return (self.datacenter, self.index)


@dataclass(frozen=True)
class DatacenterSpec:
    id: int
    vps_count: int


class ClusterTopology:
    """Datacenters and their VPSs, in a fixed enumeration order."""

    def __init__(self, datacenters: Sequence[DatacenterSpec],
                 map_slots: int = 1, reduce_slots: int = 1):
        if len(datacenters) < 2:
            raise ValueError("k must be >= 2 (got %d datacenters)" % len(datacenters))
        for dc in datacenters:
            if dc.vps_count < 1:
                raise ValueError("datacenter %d has no VPSs" % dc.id)
        self.datacenters = list(datacenters)
        self.nodes: List[VpsNode] = [
            VpsNode(dc.id, i, map_slots, reduce_slots)
            for dc in self.datacenters
            for i in range(1, dc.vps_count + 1)
        ]
        self._by_id: Dict[VpsId, VpsNode] = {n.vps_id: n for n in self.nodes}

    @property
    def k(self) -> int:
        return len(self.datacenters)

    @property
    def datacenter_ids(self) -> List[int]:
        return [dc.id for dc in self.datacenters]

    @property
    def total_vps(self) -> int:
        return len(self.nodes)

    @property
    def avg_vps_per_dc(self) -> Fraction:
        # Kept exact: the small/large job comparison must not round.
        return Fraction(self.total_vps, self.k)

    def node(self, vps_id: VpsId) -> VpsNode:
        return self._by_id[vps_id]

    def nodes_in(self, datacenter: int) -> List[VpsNode]:
        return [n for n in self.nodes if n.datacenter == datacenter]


def build_cluster(vps_counts: Sequence[int], map_slots: int = 1,
                  reduce_slots: int = 1) -> ClusterTopology:
    """Build a topology from per-datacenter VPS counts (datacenter ids 1..k)."""
    specs = [DatacenterSpec(c + 1, n) for c, n in enumerate(vps_counts)]
    return ClusterTopology(specs, map_slots, reduce_slots)


@dataclass(frozen=True)
class DataBlock:
    job_id: str
    index: int          # 1-based position within the job's input
    size_bytes: int


@dataclass
class BlockPlacement:
    """Replica locations for each (job, block index), immutable once built."""

    replication: int
    locations: Dict[Tuple[str, int], frozenset] = field(default_factory=dict)

    def replicas(self, job_id: str, block_index: int) -> frozenset:
        key = (job_id, block_index)
        if key not in self.locations:
            raise KeyError("unknown block %s#%d" % (job_id, block_index))
        return self.locations[key]

    def add(self, job_id: str, block_index: int, vps_ids: Set[VpsId]) -> None:
        self.locations[(job_id, block_index)] = frozenset(vps_ids)

    def merge(self, other: "BlockPlacement") -> None:
        self.locations.update(other.locations)

    def block_count(self, job_id: str) -> int:
        return sum(1 for (jid, _) in self.locations if jid == job_id)


def place_blocks(topology: ClusterTopology, job_id: str, num_blocks: int,
                 replication: int, rng: random.Random) -> BlockPlacement:
    """Place each block's replicas on distinct VPSs chosen uniformly at random.

    The replica count is clamped to the cluster size.  Storage capacity is
    not modeled.
    """
    if replication < 1:
        raise ValueError("replication factor must be >= 1")
    all_ids = [n.vps_id for n in topology.nodes]
    n_replicas = min(replication, len(all_ids))
    placement = BlockPlacement(replication=replication)
    for i in range(1, num_blocks + 1):
        chosen = rng.sample(all_ids, n_replicas)
        placement.add(job_id, i, set(chosen))
    return placement


def placement_rng(seed: int, job_id: str) -> random.Random:
    """Per-job generator so each job's placement depends only on (seed, job)."""
    return random.Random("%d:place:%s" % (seed, job_id))


def unique_blocks_per_datacenter(placement: BlockPlacement, job_id: str,
                                 num_blocks: int,
                                 topology: ClusterTopology) -> Dict[int, Set[int]]:
    """Block indices of the job that each datacenter holds at least one replica of."""
    held: Dict[int, Set[int]] = {c: set() for c in topology.datacenter_ids}
    for i in range(1, num_blocks + 1):
        for (dc, _) in placement.replicas(job_id, i):
            held[dc].add(i)
    return held


def locality_level(vps_id: VpsId, job_id: str, block_index: int,
                   placement: BlockPlacement) -> Locality:
    """Locality of reading the given block from the given VPS."""
    replicas = placement.replicas(job_id, block_index)
    if vps_id in replicas:
        return Locality.VPS_LOCAL
    dc = vps_id[0]
    if any(r[0] == dc for r in replicas):
        return Locality.CEN_LOCAL
    return Locality.OFF_CEN
