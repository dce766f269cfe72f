"""Scenario files: one INI document describes cluster, storage, network,
profiles, workload mix, and capacity queues.

A scenario is referenced by path, or by preset name (`small`, `mixed`)
resolved from the shipped presets directory.  Validation failures raise
ConfigError with the offending section/key in the message.
"""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Tuple

from .engine import CostModel
from .workload import (DEFAULT_COMPUTE_RATE, GiB, MiB, ArrivalModel,
                       BenchmarkProfile, JobGroup, WorkloadConfig)


class ConfigError(ValueError):
    """Scenario could not be parsed or failed validation."""


_SIZE_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(B|KiB|MiB|GiB)?\s*$")
_SIZE_UNITS = {"B": 1, "KiB": 1024, "MiB": MiB, "GiB": GiB, None: 1}


def parse_size(text: str, where: str = "size") -> int:
    m = _SIZE_RE.match(text)
    if not m:
        raise ConfigError("%s: cannot parse size %r (use e.g. 128MiB, 1GiB)"
                          % (where, text))
    value = float(m.group(1)) * _SIZE_UNITS[m.group(2)]
    if value != int(value):
        raise ConfigError("%s: size %r is not a whole number of bytes"
                          % (where, text))
    return int(value)


@dataclass
class ScenarioConfig:
    name: str
    vps_counts: List[int]
    map_slots: int
    reduce_slots: int
    block_size: int
    replication: int
    cost: CostModel
    profiles: Dict[str, BenchmarkProfile]
    workload: WorkloadConfig
    capacity_queues: List[Tuple[str, float]] = field(
        default_factory=lambda: [("q0", 0.5), ("q1", 0.5)])
    seed_placement: int = 1
    seed_workload: int = 1


def _preset_path(name: str):
    return resources.files("vmrsim").joinpath("presets", name + ".scenario")


def available_presets() -> List[str]:
    presets = resources.files("vmrsim").joinpath("presets")
    return sorted(p.name[:-len(".scenario")] for p in presets.iterdir()
                  if p.name.endswith(".scenario"))


def load_scenario(ref: str) -> ScenarioConfig:
    """Load from a file path, or from a preset name when no such file exists."""
    if os.path.exists(ref):
        with open(ref) as fh:
            return parse_scenario(fh.read(), source=ref)
    preset = _preset_path(ref)
    if preset.is_file():
        return parse_scenario(preset.read_text(), source="preset %r" % ref)
    raise ConfigError("no scenario file %r and no such preset (have: %s)"
                      % (ref, ", ".join(available_presets())))


def parse_scenario(text: str, source: str = "scenario") -> ScenarioConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str        # profile names are case-sensitive
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("%s: %s" % (source, exc)) from exc

    def need(section: str):
        if not parser.has_section(section):
            raise ConfigError("%s: missing [%s] section" % (source, section))
        return parser[section]

    def get_int(section, key, default=None, minimum=None):
        raw = parser.get(section, key, fallback=None)
        if raw is None:
            if default is None:
                raise ConfigError("%s: [%s] %s: required" % (source, section, key))
            return default
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError("%s: [%s] %s: expected integer, got %r"
                              % (source, section, key, raw)) from None
        if minimum is not None and value < minimum:
            raise ConfigError("%s: [%s] %s: must be >= %d"
                              % (source, section, key, minimum))
        return value

    def get_float(section, key, default=None):
        raw = parser.get(section, key, fallback=None)
        if raw is None:
            if default is None:
                raise ConfigError("%s: [%s] %s: required" % (source, section, key))
            return default
        try:
            return float(raw)
        except ValueError:
            raise ConfigError("%s: [%s] %s: expected number, got %r"
                              % (source, section, key, raw)) from None

    name = parser.get("scenario", "name", fallback="scenario")

    cluster = need("cluster")
    try:
        vps_counts = [int(tok) for tok in cluster.get("datacenters", "").split()]
    except ValueError:
        raise ConfigError("%s: [cluster] datacenters: expected integers"
                          % source) from None
    if len(vps_counts) < 2:
        raise ConfigError("%s: [cluster] datacenters: need at least 2 "
                          "datacenters" % source)

    block_size = parse_size(parser.get("storage", "block_size",
                                       fallback="128MiB"),
                            "%s: [storage] block_size" % source)
    replication = get_int("storage", "replication", default=1, minimum=1)

    cost = CostModel(
        intra_vps_read_rate=parse_size(
            parser.get("network", "intra_vps", fallback="128MiB"),
            "%s: [network] intra_vps" % source),
        intra_dc_bandwidth=parse_size(
            parser.get("network", "intra_dc", fallback="64MiB"),
            "%s: [network] intra_dc" % source),
        inter_dc_bandwidth=parse_size(
            parser.get("network", "inter_dc", fallback="16MiB"),
            "%s: [network] inter_dc" % source),
    )

    profiles: Dict[str, BenchmarkProfile] = {}
    for key, raw in need("profiles").items():
        parts = raw.split()
        if len(parts) not in (3, 5):
            raise ConfigError(
                "%s: [profiles] %s: expected 'input_type fp_mean fp_std "
                "[map_rate reduce_rate]', got %r" % (source, key, raw))
        try:
            profiles[key] = BenchmarkProfile(
                name=key, input_type=parts[0],
                fp_mean=float(parts[1]), fp_std=float(parts[2]),
                map_compute_rate=(parse_size(parts[3], key) if len(parts) == 5
                                  else DEFAULT_COMPUTE_RATE),
                reduce_compute_rate=(parse_size(parts[4], key) if len(parts) == 5
                                     else DEFAULT_COMPUTE_RATE),
            )
        except ValueError as exc:
            raise ConfigError("%s: [profiles] %s: %s" % (source, key, exc)) from exc

    groups: List[JobGroup] = []
    for key, raw in need("jobs").items():
        parts = raw.split()
        if len(parts) != 3:
            raise ConfigError("%s: [jobs] %s: expected 'profile count size', "
                              "got %r" % (source, key, raw))
        profile, count_text, size_text = parts
        if profile not in profiles:
            raise ConfigError("%s: [jobs] %s: unknown profile %r"
                              % (source, key, profile))
        try:
            count = int(count_text)
        except ValueError:
            raise ConfigError("%s: [jobs] %s: bad count %r"
                              % (source, key, count_text)) from None
        groups.append(JobGroup(profile, count,
                               parse_size(size_text, "%s: [jobs] %s" % (source, key))))

    wl = need("workload")
    arrival_kind = wl.get("arrival", "exponential")
    if arrival_kind == "intervals":
        try:
            intervals = tuple(float(tok) for tok in wl.get("intervals", "").split())
        except ValueError:
            raise ConfigError("%s: [workload] intervals: expected numbers"
                              % source) from None
        arrival = ArrivalModel("intervals", intervals=intervals)
    elif arrival_kind in ("exponential", "lognormal"):
        arrival = ArrivalModel(arrival_kind,
                               mean=get_float("workload", "mean_interval"),
                               std=get_float("workload", "std_interval",
                                             default=0.0))
    else:
        raise ConfigError("%s: [workload] arrival: unknown model %r"
                          % (source, arrival_kind))
    workload = WorkloadConfig(
        groups=tuple(groups), arrival=arrival,
        reduce_tasks=get_int("workload", "reduce_tasks", default=1, minimum=1),
        size_jitter_pct=get_float("workload", "size_jitter_pct", default=0.0),
        name=name,
    )

    capacity_queues: List[Tuple[str, float]] = []
    if parser.has_section("capacity"):
        for token in parser.get("capacity", "queues", fallback="").split():
            if ":" not in token:
                raise ConfigError("%s: [capacity] queues: expected name:fraction"
                                  " tokens, got %r" % (source, token))
            qname, _, fraction_text = token.partition(":")
            try:
                fraction = float(fraction_text)
            except ValueError:
                raise ConfigError("%s: [capacity] queues: bad fraction %r"
                                  % (source, fraction_text)) from None
            capacity_queues.append((qname, fraction))
    if not capacity_queues:
        capacity_queues = [("q0", 0.5), ("q1", 0.5)]
    total = sum(f for _, f in capacity_queues)
    if abs(total - 1.0) > 1e-9:
        raise ConfigError("%s: [capacity] queues: fractions sum to %r, not 1"
                          % (source, total))

    return ScenarioConfig(
        name=name, vps_counts=vps_counts,
        map_slots=get_int("cluster", "map_slots", default=1, minimum=1),
        reduce_slots=get_int("cluster", "reduce_slots", default=1, minimum=1),
        block_size=block_size, replication=replication, cost=cost,
        profiles=profiles, workload=workload,
        capacity_queues=capacity_queues,
        seed_placement=get_int("seeds", "placement", default=1),
        seed_workload=get_int("seeds", "workload", default=1),
    )
