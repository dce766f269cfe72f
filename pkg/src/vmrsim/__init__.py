"""vmrsim: deterministic simulator of MapReduce scheduling across
multi-datacenter VPS clusters.

The package models a tenant renting VPSs in several datacenters: block
placement and the three tenant-visible locality tiers (cluster), job
classification from learned filtering percentages (classify), synthetic
workloads (workload), the job-driven hybrid scheduler plus FIFO / Fair /
Capacity baselines (sched_joss, sched_baselines), a discrete-event engine
with an explicit transfer cost model (engine), metric reports (metrics),
and a scenario-driven CLI (config, cli).
"""
from .classify import FpRegistry, JobClass, classify, job_hash, threshold
from .cluster import (BlockPlacement, ClusterTopology, Locality, VpsId,
                      build_cluster, place_blocks)
from .engine import (CostModel, RunResult, Simulation, place_trace,
                     warm_registry)
from .metrics import build_report, write_csv, write_json
from .sched_baselines import CapacityScheduler, FairScheduler, FifoScheduler
from .sched_joss import JossScheduler
from .workload import (BenchmarkProfile, JobSpec, WorkloadTrace,
                       default_profiles, generate_trace, load_trace,
                       save_trace)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkProfile", "BlockPlacement", "CapacityScheduler",
    "ClusterTopology", "CostModel", "FairScheduler", "FifoScheduler",
    "FpRegistry", "JobClass", "JobSpec", "JossScheduler", "Locality",
    "RunResult", "Simulation", "VpsId", "WorkloadTrace", "build_cluster",
    "build_report", "classify", "default_profiles", "generate_trace",
    "job_hash", "load_trace", "place_blocks", "place_trace", "save_trace",
    "threshold", "warm_registry", "write_csv", "write_json", "__version__",
]
