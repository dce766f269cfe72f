"""Evaluation metrics over a finished run, plus CSV/JSON emission.

Map-data locality is reported as three rates over the executed map tasks
(VPS-local, Cen-local, off-Cen, summing to exactly 1); reduce-data
locality is the byte-weighted share of reduce input fetched from the
reducer's own datacenter.  Traffic (int_bytes) counts every byte that
crossed a datacenter boundary, whether block fetch or shuffle.  Reports
are deterministic: emitting the same run twice is byte-identical.
"""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from typing import Dict, List, Sequence

from .cluster import Locality
from .engine import RunResult

SCHEMA = "vmrsim-report-v1"

CSV_COLUMNS = ["scheduler", "workload", "profile", "job_class", "jobs",
               "vps_rate", "cen_rate", "off_cen_rate", "reduce_locality",
               "int_bytes", "mean_jtt_s", "wtt_s",
               "vps_load_mean", "vps_load_std"]


def locality_rates(vps_local: int, cen_local: int, total: int):
    """(vps, cen, off) with off = 1 - vps - cen; None triple when no maps."""
    if total == 0:
        return None, None, None
    vps_rate = vps_local / total
    cen_rate = cen_local / total
    return vps_rate, cen_rate, 1.0 - vps_rate - cen_rate


def vps_load_stats(counts: Sequence[int]):
    """Mean and population standard deviation of per-VPS map-task counts."""
    return statistics.fmean(counts), statistics.pstdev(counts)


def _vps_key(vps_id) -> str:
    return "%d:%d" % vps_id


def _group_stats(result: RunResult, jobs, scheduler: str, workload: str,
                 profile_label: str, class_label: str) -> dict:
    job_ids = {j.job_id for j in jobs}
    group_maps = [m for m in result.maps if m.job_id in job_ids]
    nv = sum(1 for m in group_maps if m.locality is Locality.VPS_LOCAL)
    nc = sum(1 for m in group_maps if m.locality is Locality.CEN_LOCAL)
    vps_rate, cen_rate, off_rate = locality_rates(nv, nc, len(group_maps))
    local = math.fsum(r.local_bytes() for r in result.reduces
                      if r.job_id in job_ids)
    total = math.fsum(r.total_bytes() for r in result.reduces
                      if r.job_id in job_ids)
    crossing = math.fsum(m.size_bytes for m in group_maps
                         if m.locality is Locality.OFF_CEN)
    crossing += math.fsum(b for r in result.reduces if r.job_id in job_ids
                          for b, is_local in r.piece_log if not is_local)
    counts = {node.vps_id: 0 for node in result.topology.nodes}
    for m in group_maps:
        counts[m.vps] += 1
    load_mean, load_std = vps_load_stats(list(counts.values()))
    return {
        "scheduler": scheduler,
        "workload": workload,
        "profile": profile_label,
        "job_class": class_label,
        "jobs": len(jobs),
        "vps_rate": vps_rate,
        "cen_rate": cen_rate,
        "off_cen_rate": off_rate,
        "reduce_locality": (local / total) if total > 0 else 1.0,
        "int_bytes": crossing,
        "mean_jtt_s": (statistics.fmean(j.completed_at - j.spec.arrival_time
                                        for j in jobs) if jobs else None),
        "wtt_s": (max(j.completed_at for j in jobs)
                  - min(j.spec.arrival_time for j in jobs)) if jobs else 0.0,
        "vps_load_mean": load_mean,
        "vps_load_std": load_std,
    }


def build_report(result: RunResult) -> dict:
    jobs = sorted(result.jobs, key=lambda j: j.spec.order_index)
    scheduler = result.scheduler_name
    workload = result.trace.name

    job_records = []
    for job in jobs:
        job_maps = [m for m in result.maps if m.job_id == job.job_id]
        job_reduces = [r for r in result.reduces if r.job_id == job.job_id]
        job_records.append({
            "job_id": job.job_id,
            "profile": job.spec.profile,
            "order_index": job.spec.order_index,
            "arrival_s": job.spec.arrival_time,
            "completed_s": job.completed_at,
            "jtt_s": job.completed_at - job.spec.arrival_time,
            "job_class": job.routing_class.value,
            "declared_class": job.declared_class.value,
            "policy": job.policy,
            "bootstrap": job.bootstrap,
            "maps": job.m,
            "reduces": job.r,
            "map_locality": {
                "vps": sum(1 for m in job_maps
                           if m.locality is Locality.VPS_LOCAL),
                "cen": sum(1 for m in job_maps
                           if m.locality is Locality.CEN_LOCAL),
                "off_cen": sum(1 for m in job_maps
                               if m.locality is Locality.OFF_CEN),
            },
            "reduce_local_bytes": math.fsum(r.local_bytes() for r in job_reduces),
            "reduce_total_bytes": math.fsum(r.total_bytes() for r in job_reduces),
        })

    map_records = [{
        "job_id": m.job_id, "block": m.block_index, "size_bytes": m.size_bytes,
        "fp": m.fp, "vps": _vps_key(m.vps), "locality": m.locality.value,
        "queue": m.queue, "assign_seq": m.assign_seq,
        "t_assign": m.t_assign, "t_done": m.t_done,
    } for m in sorted(result.maps, key=lambda m: m.assign_seq)]

    reduce_records = [{
        "job_id": r.job_id, "reduce": r.reduce_index, "vps": _vps_key(r.vps),
        "queue": r.queue, "assign_seq": r.assign_seq,
        "t_assign": r.t_assign, "t_ready": r.t_ready, "t_done": r.t_done,
        "pieces": r.pieces_landed,
        "local_bytes": r.local_bytes(), "total_bytes": r.total_bytes(),
    } for r in sorted(result.reduces, key=lambda r: r.assign_seq)]

    transfer_records = [{
        "time_s": t.time, "cause": t.cause, "src": _vps_key(t.source),
        "dst": _vps_key(t.dest), "bytes": t.size_bytes,
    } for t in result.transfers if t.crosses_datacenter]

    done = sorted(j.completed_at for j in jobs)
    completion = [[t, (i + 1) / len(done)] for i, t in enumerate(done)]

    rows = [] if not jobs else _build_rows(result, jobs, scheduler, workload)

    per_vps = {node.vps_id: 0 for node in result.topology.nodes}
    for m in result.maps:
        per_vps[m.vps] += 1
    jtts = [j.completed_at - j.spec.arrival_time for j in jobs]
    non_boot = [j.completed_at - j.spec.arrival_time
                for j in jobs if not j.bootstrap]
    total_reduce_bytes = math.fsum(r["reduce_total_bytes"] for r in job_records)
    local_reduce_bytes = math.fsum(r["reduce_local_bytes"] for r in job_records)
    nv = sum(1 for m in result.maps if m.locality is Locality.VPS_LOCAL)
    nc = sum(1 for m in result.maps if m.locality is Locality.CEN_LOCAL)
    vps_rate, cen_rate, off_rate = locality_rates(nv, nc, len(result.maps))
    load_mean, load_std = vps_load_stats(list(per_vps.values()))

    report = {
        "schema": SCHEMA,
        "meta": {
            "scheduler": scheduler,
            "workload": result.trace.fingerprint(),
            "workload_name": workload,
            "seed_placement": result.seed_placement,
            "replication": result.replication,
            "block_size": result.trace.block_size,
            "topology": [dc.vps_count for dc in result.topology.datacenters],
            "rates": {
                "intra_vps": result.cost.intra_vps_read_rate,
                "intra_dc": result.cost.intra_dc_bandwidth,
                "inter_dc": result.cost.inter_dc_bandwidth,
            },
        },
        "jobs": job_records,
        "map_tasks": map_records,
        "reduce_tasks": reduce_records,
        "transfers": transfer_records,
        "series": {"completion": completion},
        "summary": {
            "jobs": len(jobs),
            "maps": len(result.maps),
            "reduces": len(result.reduces),
            "int_bytes": result.int_bytes(),
            "wtt_s": (max(j.completed_at for j in jobs)
                      - min(j.spec.arrival_time for j in jobs)) if jobs else 0.0,
            "mean_jtt_s": statistics.fmean(jtts) if jtts else None,
            "mean_jtt_excl_bootstrap_s": (statistics.fmean(non_boot)
                                          if non_boot else None),
            "vps_rate": vps_rate,
            "cen_rate": cen_rate,
            "off_cen_rate": off_rate,
            "reduce_locality": (local_reduce_bytes / total_reduce_bytes
                                if total_reduce_bytes > 0 else 1.0),
            "reduce_locality_degenerate": total_reduce_bytes == 0,
            "vps_load_mean": load_mean,
            "vps_load_std": load_std,
            "per_vps_map_counts": {_vps_key(v): n
                                   for v, n in sorted(per_vps.items())},
        },
        "rows": rows,
    }
    return report


def _build_rows(result: RunResult, jobs, scheduler: str, workload: str) -> List[dict]:
    rows = []
    profiles = sorted({j.spec.profile for j in jobs})
    for profile in profiles:
        profile_jobs = [j for j in jobs if j.spec.profile == profile]
        classes = sorted({j.routing_class.value for j in profile_jobs})
        for cls in classes:
            members = [j for j in profile_jobs if j.routing_class.value == cls]
            rows.append(_group_stats(result, members, scheduler, workload,
                                     profile, cls))
        rows.append(_group_stats(result, profile_jobs, scheduler, workload,
                                 profile, "*"))
    rows.append(_group_stats(result, jobs, scheduler, workload, "*", "*"))
    return rows


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_json(report: dict, path) -> None:
    with open(path, "w") as fh:
        fh.write(report_json(report))


def load_report(path) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    if report.get("schema") != SCHEMA:
        raise ValueError("unsupported report schema %r in %s"
                         % (report.get("schema"), path))
    return report


def rows_csv_text(rows: List[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(["" if row[c] is None else row[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: List[dict], path) -> None:
    with open(path, "w") as fh:
        fh.write(rows_csv_text(rows))


def normalized_jtt(reports: List[dict]) -> List[dict]:
    """Per-profile mean turnaround, normalized against the best scheduler.

    All reports must come from the same trace (identical workload
    fingerprints); comparing runs of different traces is meaningless.
    """
    if not reports:
        raise ValueError("no reports to compare")
    fingerprints = {r["meta"]["workload"] for r in reports}
    if len(fingerprints) > 1:
        raise ValueError("reports come from different traces: %s"
                         % ", ".join(sorted(fingerprints)))
    per_profile: Dict[str, Dict[str, float]] = {}
    for report in reports:
        scheduler = report["meta"]["scheduler"]
        for row in report["rows"]:
            if row["job_class"] == "*" and row["mean_jtt_s"] is not None:
                per_profile.setdefault(row["profile"], {})[scheduler] = row["mean_jtt_s"]
    out = []
    order = [r["meta"]["scheduler"] for r in reports]
    for profile in sorted(per_profile):
        best = min(per_profile[profile].values())
        for scheduler in order:
            if scheduler not in per_profile[profile]:
                continue
            jtt = per_profile[profile][scheduler]
            out.append({"profile": profile, "scheduler": scheduler,
                        "mean_jtt_s": jtt, "normalized_jtt": jtt / best})
    return out
