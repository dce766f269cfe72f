"""Shared fixtures and builders for the test suite."""
import pytest

from vmrsim.classify import FpRegistry
from vmrsim.cli import make_scheduler
from vmrsim.cluster import build_cluster
from vmrsim.config import load_scenario
from vmrsim.engine import CostModel, Simulation, place_trace, warm_registry
from vmrsim.metrics import build_report
from vmrsim.sched_baselines import (CapacityScheduler, FairScheduler,
                                    FifoScheduler)
from vmrsim.sched_joss import JossScheduler
from vmrsim.workload import (BenchmarkProfile, WorkloadTrace, default_profiles,
                             generate_trace)

MIB = 1024 * 1024
GIB = 1024 * MIB

SCHEDULERS = ("joss-t", "joss-j", "fifo", "fair", "capacity")


def new_scheduler(name, topology, registry, capacity_queues=None):
    if name == "joss-t":
        return JossScheduler(topology, registry, assigner="task")
    if name == "joss-j":
        return JossScheduler(topology, registry, assigner="job")
    if name == "fifo":
        return FifoScheduler()
    if name == "fair":
        return FairScheduler()
    if name == "capacity":
        if capacity_queues:
            return CapacityScheduler(capacity_queues)
        return CapacityScheduler()
    raise ValueError(name)


def unit_profile(fp_mean=1.0, fp_std=0.0, name="Unit", input_type="synth"):
    return BenchmarkProfile(name=name, input_type=input_type,
                            fp_mean=fp_mean, fp_std=fp_std)


def build_sim(vps_counts, jobs, *, profiles=None, placement=None,
              scheduler="fifo", seed=1, block_size=128 * MIB, registry=None,
              warm=True, map_slots=1, reduce_slots=1, replication=1,
              keep_event_log=False, capacity_queues=None):
    """Assemble a simulation over an explicit job list.

    Returns (simulation, scheduler, registry, topology) so tests can poke
    at scheduler state and the registry after running.
    """
    topo = build_cluster(vps_counts, map_slots, reduce_slots)
    if profiles is None:
        profiles = default_profiles()
    trace = WorkloadTrace(jobs=list(jobs), block_size=block_size, seed=seed,
                          name="adhoc")
    if registry is None:
        registry = warm_registry(profiles) if warm else FpRegistry()
    sched = new_scheduler(scheduler, topo, registry, capacity_queues)
    sim = Simulation(topo, CostModel(), profiles, trace, sched, registry,
                     seed_placement=seed, replication=replication,
                     placement=placement, keep_event_log=keep_event_log)
    return sim, sched, registry, topo


def run_preset(preset, seed_offset=0):
    """Run every scheduler over one preset with a shared trace and placement."""
    cfg = load_scenario(preset)
    topo = build_cluster(cfg.vps_counts, cfg.map_slots, cfg.reduce_slots)
    sp = cfg.seed_placement + seed_offset
    sw = cfg.seed_workload + seed_offset
    trace = generate_trace(cfg.workload, cfg.profiles, sw, cfg.block_size)
    placement = place_trace(topo, trace, sp, cfg.replication)
    reports = {}
    for name in SCHEDULERS:
        registry = warm_registry(cfg.profiles)
        sched = make_scheduler(name, topo, registry, cfg)
        sim = Simulation(topo, cfg.cost, cfg.profiles, trace, sched, registry,
                         sp, cfg.replication, placement=placement)
        reports[name] = build_report(sim.run())
    return reports


@pytest.fixture(scope="session")
def preset_reports():
    """Memoized preset runs shared by the comparison tests."""
    cache = {}

    def get(preset, seed_offset=0):
        key = (preset, seed_offset)
        if key not in cache:
            cache[key] = run_preset(preset, seed_offset)
        return cache[key]

    return get
