"""End-to-end checks over the shipped presets and constructed scenarios.

These tests compare all five schedulers on shared traces and placements,
assert the structural guarantees of the queue fabric, and verify traffic
accounting against an independent recount.
"""
import math
import re
from fractions import Fraction

import pytest

from conftest import MIB, SCHEDULERS, build_sim, run_preset, unit_profile
from test_engine import spec
from test_sched_joss import StubJob
from vmrsim.classify import (FpRegistry, Heaviness, classify_heaviness,
                             job_hash, threshold, worst_case_traffic)
from vmrsim.cluster import BlockPlacement, build_cluster
from vmrsim.metrics import report_json
from vmrsim.sched_joss import JossScheduler
from vmrsim.workload import TaskKind, fp_rng, sample_task_fp

JOSS = ("joss-t", "joss-j")
BASELINES = ("fifo", "fair", "capacity")
SEED_OFFSETS = (0, 1, 2, 3, 4)


# 1. The learned threshold separates the two heaviness classes exactly
#    where the worst-case traffic comparison flips.

def test_heaviness_threshold_matches_traffic_comparison():
    sizes = [128 * MIB] * 10
    for k in range(2, 7):
        td = threshold(k)
        for i in range(0, 101):
            fp = Fraction(i, 20)
            tr1, tr2 = worst_case_traffic(sizes, fp, k)
            want = Heaviness.RH if tr2 > tr1 else Heaviness.MH
            assert classify_heaviness(fp, td) is want, (k, fp)
        # The break-even point itself stays map-heavy.
        assert classify_heaviness(td, td) is Heaviness.MH


# 2. A constructed placement routes a small map-heavy job into exactly the
#    expected permanent queues.

def test_constructed_placement_fills_expected_queues():
    topo = build_cluster([6, 6, 6])
    registry = FpRegistry()
    h = job_hash("P", "t")
    registry.record(h, [1.0])
    placement = BlockPlacement(replication=2)
    where = {1: {(2, 1), (2, 2)}, 2: {(2, 2), (2, 3)}, 3: {(2, 4), (2, 5)},
             4: {(1, 1), (3, 1)}, 5: {(2, 5), (2, 6)}, 6: {(3, 2), (3, 3)}}
    for idx, replicas in where.items():
        placement.add("j1", idx, replicas)
    job = StubJob("j1", 6, 2, placement, h)
    sched = JossScheduler(topo, registry)
    sched.on_job_arrival(job)
    assert job.policy == "B"

    def ids(queue):
        return [t.task_id for t in queue.tasks]

    assert ids(sched.queues_for(2, TaskKind.MAP)[0]) == \
        ["j1/m1", "j1/m2", "j1/m3", "j1/m5"]
    assert ids(sched.queues_for(3, TaskKind.MAP)[0]) == ["j1/m4", "j1/m6"]
    assert ids(sched.queues_for(1, TaskKind.MAP)[0]) == []
    assert ids(sched.queues_for(2, TaskKind.REDUCE)[0]) == ["j1/r1", "j1/r2"]
    for dc in (1, 3):
        assert ids(sched.queues_for(dc, TaskKind.REDUCE)[0]) == []


# 3. Small reduce-heavy jobs keep their entire shuffle inside one
#    datacenter under both assigners.

def test_small_reduce_heavy_jobs_shuffle_entirely_locally(preset_reports):
    reports = preset_reports("small")
    for name in JOSS:
        report = reports[name]
        heavy = [j for j in report["jobs"] if j["job_class"] == "SMALL_RH"]
        assert len(heavy) == 61
        assert all(j["profile"] == "Permu" for j in heavy)
        for job in heavy:
            assert job["reduce_total_bytes"] > 0
            assert job["reduce_local_bytes"] == job["reduce_total_bytes"]
        row = [r for r in report["rows"]
               if r["profile"] == "Permu" and r["job_class"] == "SMALL_RH"][0]
        assert row["reduce_locality"] == 1.0


# 4. Small map-heavy jobs never read blocks across datacenters, while the
#    datacenter-blind baselines do so for well over a tenth of their maps.

def small_mh_off_rate(report):
    jobs = [j for j in report["jobs"] if j["job_class"] == "SMALL_MH"]
    assert jobs
    off = sum(j["map_locality"]["off_cen"] for j in jobs)
    total = sum(j["maps"] for j in jobs)
    return off / total


def test_small_map_heavy_jobs_never_cross_datacenters(preset_reports):
    reports = preset_reports("small")
    for name in JOSS:
        assert small_mh_off_rate(reports[name]) == 0.0
    for name in BASELINES:
        assert small_mh_off_rate(reports[name]) > 0.1


# 5. Cross-datacenter traffic: strictly less than every baseline on every
#    seed, and below the 0.7 ratio bar against FIFO.

@pytest.mark.parametrize("preset", ["small", "mixed"])
def test_joss_moves_fewer_bytes_than_every_baseline(preset_reports, preset):
    for offset in SEED_OFFSETS:
        reports = preset_reports(preset, offset)
        intn = {name: reports[name]["summary"]["int_bytes"]
                for name in SCHEDULERS}
        for joss in JOSS:
            for baseline in BASELINES:
                assert intn[joss] < intn[baseline], (preset, offset, joss,
                                                     baseline, intn)


@pytest.mark.parametrize("preset", ["small", "mixed"])
def test_traffic_ratio_against_fifo_beats_bar(preset_reports, preset):
    ratios = []
    for offset in SEED_OFFSETS:
        reports = preset_reports(preset, offset)
        fifo = reports["fifo"]["summary"]["int_bytes"]
        for joss in JOSS:
            ratios.append(reports[joss]["summary"]["int_bytes"] / fifo)
    print("%s traffic ratios vs fifo: %s"
          % (preset, " ".join("%.3f" % r for r in ratios)))
    assert all(r < 0.7 for r in ratios), ratios


# 6. Task conservation: the small preset always expands to the same task
#    counts, spread evenly over the 30 VPSs on average.

def test_small_preset_task_counts_and_mean_load(preset_reports):
    reports = preset_reports("small")
    for name in SCHEDULERS:
        summary = reports[name]["summary"]
        assert summary["jobs"] == 300
        assert summary["maps"] == 2400
        assert summary["reduces"] == 300
        assert summary["vps_load_mean"] == 80.0


# 7. Large jobs live in disposable queues that are retired when drained,
#    and never starve later small jobs.

DYNAMIC = re.compile(r"^(MQ|RQ)\[\d+,[1-9]\d*\]$")
PERMANENT = re.compile(r"^MQ\[(\d+),0\]$")


def test_large_jobs_use_disposable_queues_and_small_jobs_never_starve():
    profiles = {"Unit": unit_profile()}
    large_pins = [(1, 1), (2, 1), (1, 2), (2, 2), (1, 1), (2, 1)]
    placement = BlockPlacement(replication=1)
    for job_id in ("L1", "L2"):
        for i, vps in enumerate(large_pins, start=1):
            placement.add(job_id, i, {vps})
    placement.add("s1", 1, {(1, 1)})
    placement.add("s2", 1, {(2, 1)})
    placement.add("s3", 1, {(1, 2)})
    jobs = [
        spec("L1", size=768 * MIB, arrival=0.0, order=1),
        spec("L2", size=768 * MIB, arrival=0.1, order=2),
        spec("s1", size=128 * MIB, arrival=5.0, order=3),
        spec("s2", size=128 * MIB, arrival=30.0, order=4),
        spec("s3", size=128 * MIB, arrival=60.0, order=5),
    ]
    sim, sched, _, _ = build_sim((2, 2), jobs, profiles=profiles,
                                 placement=placement, scheduler="joss-t")
    result = sim.run()
    large = {"L1", "L2"}
    assert all(j.routing_class.value == "LARGE" for j in result.jobs
               if j.job_id in large)
    assert all(j.routing_class.value == "SMALL_MH" for j in result.jobs
               if j.job_id not in large)

    # (a) every large-job task ran from a dynamic queue
    for run in result.maps + result.reduces:
        if run.job_id in large:
            assert DYNAMIC.match(run.queue), (run.job_id, run.queue)

    # (b) drained dynamic queues are gone; the permanent ones remain
    for dc in (1, 2):
        for kind in (TaskKind.MAP, TaskKind.REDUCE):
            assert [q.dynamic for q in sched.queues_for(dc, kind)] == [False]

    # (c) each small job's map came from its datacenter's permanent queue,
    # after at most two takes per competing queue once it was enqueued
    arrival = {j.spec.job_id: j.spec.arrival_time for j in result.jobs}
    for job_id in ("s1", "s2", "s3"):
        (mine,) = [m for m in result.maps if m.job_id == job_id]
        dc = int(PERMANENT.match(mine.queue).group(1))
        same_dc = [m for m in result.maps
                   if m.queue.startswith("MQ[%d," % dc)]
        before = [m for m in same_dc if m.assign_seq < mine.assign_seq]
        prior_own = [m.assign_seq for m in before if m.queue == mine.queue]
        window_start = max(prior_own) if prior_own else -1
        takes = {}
        for m in before:
            if (m.queue != mine.queue and m.assign_seq > window_start
                    and m.t_assign >= arrival[job_id]):
                takes[m.queue] = takes.get(m.queue, 0) + 1
        assert all(n <= 2 for n in takes.values()), (job_id, takes)


# 8. The in-queue locality pick can only help: the job-driven assigner's
#    VPS-locality rate is at least the task-driven one on every seed.

def test_locality_pick_never_lowers_vps_rate(preset_reports):
    margins = []
    for offset in SEED_OFFSETS:
        reports = preset_reports("small", offset)
        t_rate = reports["joss-t"]["summary"]["vps_rate"]
        j_rate = reports["joss-j"]["summary"]["vps_rate"]
        margins.append(j_rate - t_rate)
        assert j_rate >= t_rate, (offset, t_rate, j_rate)
    print("vps-rate margins (job-driven minus task-driven): %s"
          % " ".join("%.4f" % m for m in margins))


# 9a. Identical seeds reproduce byte-identical reports.

def test_identical_seeds_reproduce_reports_byte_for_byte(preset_reports):
    first = preset_reports("mixed")
    second = run_preset("mixed")
    for name in SCHEDULERS:
        assert report_json(first[name]) == report_json(second[name])


# 9b. Engine traffic accounting equals an independent recount from the
#     assignment records alone.

def recount_crossing_bytes(report):
    datacenter = lambda key: key.split(":")[0]
    reducers = {}
    for rec in report["reduce_tasks"]:
        reducers.setdefault(rec["job_id"], []).append(datacenter(rec["vps"]))
    pieces = []
    for rec in report["map_tasks"]:
        if rec["locality"] == "OFF_CEN":
            pieces.append(float(rec["size_bytes"]))
        targets = reducers[rec["job_id"]]
        for reducer_dc in targets:
            if reducer_dc != datacenter(rec["vps"]):
                pieces.append(rec["size_bytes"] * rec["fp"] / len(targets))
    return math.fsum(pieces)


@pytest.mark.parametrize("preset", ["small", "mixed"])
def test_traffic_totals_match_posthoc_recount(preset_reports, preset):
    reports = preset_reports(preset)
    for name in SCHEDULERS:
        summary = reports[name]["summary"]
        assert recount_crossing_bytes(reports[name]) == summary["int_bytes"]


# 9c. The three locality rates always partition the executed maps.

@pytest.mark.parametrize("preset", ["small", "mixed"])
def test_locality_rates_partition_every_report(preset_reports, preset):
    for name in SCHEDULERS:
        report = preset_reports(preset)[name]
        summary = report["summary"]
        total = (summary["vps_rate"] + summary["cen_rate"]
                 + summary["off_cen_rate"])
        assert abs(total - 1.0) < 1e-12
        for row in report["rows"]:
            if row["vps_rate"] is None:
                continue
            assert abs(row["vps_rate"] + row["cen_rate"]
                       + row["off_cen_rate"] - 1.0) < 1e-12


# 10. An unlearned profile drains through the bootstrap queues once, then
#     its learned mean routes the next identical job through a policy.

def test_unlearned_profile_bootstraps_then_routes():
    profiles = {"Fresh": unit_profile(1.0, 0.2, name="Fresh")}
    jobs = [spec("j1", profile="Fresh", size=1024 * MIB, arrival=0.0, order=1),
            spec("j2", profile="Fresh", size=1024 * MIB, arrival=500.0,
                 order=2)]
    sim, _, registry, _ = build_sim((8, 8), jobs, profiles=profiles,
                                    scheduler="joss-t", seed=21, warm=False)
    result = sim.run()
    first, second = result.jobs
    assert first.bootstrap is True and first.policy == "FIFO"
    assert all(m.queue == "MQ_FIFO" for m in result.maps
               if m.job_id == "j1")
    assert all(r.queue == "RQ_FIFO" for r in result.reduces
               if r.job_id == "j1")
    assert second.bootstrap is False
    assert second.policy == "B"
    assert second.routing_class.value == "SMALL_MH"
    assert all(m.queue == "MQ_FIFO" or not m.queue.endswith("FIFO")
               for m in result.maps)

    # The stored mean is the mean of the first job's per-task samples, in
    # the order those tasks finished.
    rng = fp_rng(21, "j1")
    by_block = {i: sample_task_fp(profiles["Fresh"], rng)
                for i in range(1, 9)}
    first_maps = sorted((m for m in result.maps if m.job_id == "j1"),
                        key=lambda m: (m.t_done, m.assign_seq))
    assert [m.fp for m in first_maps] == \
        [by_block[m.block_index] for m in first_maps]
    observed = [m.fp for m in first_maps]
    assert registry.lookup(job_hash("Fresh", "synth")) == \
        sum(observed) / len(observed)
