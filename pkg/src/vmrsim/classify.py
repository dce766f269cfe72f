"""Job classification and the learned filtering-percentage registry.

A job's filtering percentage (map-output bytes over map-input bytes) decides
whether its network cost is dominated by the map side or the reduce side.
Comparing the worst-case inter-datacenter traffic of both choices yields the
classification threshold k/(k-1); jobs whose map-task count exceeds the mean
datacenter size are scheduled as large jobs regardless.

Filtering percentages are learned: the first completed job of a given
(code, input type) pair has its observed per-task values averaged and stored
under a stable hash, and later jobs with the same key are classified from
that stored mean.
"""
from __future__ import annotations

import hashlib
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Optional, Sequence


class Heaviness(Enum):
    RH = "RH"   # reduce-heavy
    MH = "MH"   # map-heavy


class Scale(Enum):
    SMALL = "SMALL"
    LARGE = "LARGE"


class JobClass(Enum):
    SMALL_MH = "SMALL_MH"
    SMALL_RH = "SMALL_RH"
    LARGE = "LARGE"
    UNKNOWN = "UNKNOWN"   # filtering percentage not learned yet


def job_hash(code_id: str, input_type_tag: str) -> str:
    """Stable digest keying a (job code, input type) pair."""
    if not code_id or not input_type_tag:
        raise ValueError("code id and input type tag must be non-empty")
    payload = code_id.encode() + b"\x1f" + input_type_tag.encode()
    return hashlib.sha256(payload).hexdigest()


def threshold(k: int) -> Fraction:
    """Heaviness threshold for a cluster of k datacenters, exact."""
    if k < 2:
        raise ValueError("k must be >= 2")
    return Fraction(k, k - 1)


def classify_heaviness(fp, td) -> Heaviness:
    """Reduce-heavy iff the filtering percentage strictly exceeds the threshold."""
    return Heaviness.RH if fp > td else Heaviness.MH


def classify_scale(m: int, avg_vps_per_dc) -> Scale:
    """Small iff all map tasks fit one average-size datacenter at once."""
    if m < 1:
        raise ValueError("map task count must be >= 1")
    return Scale.SMALL if m <= avg_vps_per_dc else Scale.LARGE


def classify(fp: Optional[float], td, m: int, avg_vps_per_dc) -> JobClass:
    if fp is None:
        return JobClass.UNKNOWN
    if classify_scale(m, avg_vps_per_dc) is Scale.LARGE:
        return JobClass.LARGE
    if classify_heaviness(fp, td) is Heaviness.RH:
        return JobClass.SMALL_RH
    return JobClass.SMALL_MH


def worst_case_traffic(block_sizes: Sequence[int], fp, k: int):
    """Worst-case inter-datacenter bytes when the job runs reduce-colocated
    (all map inputs fetched remotely) vs map-colocated (a (k-1)/k share of
    the shuffle crosses datacenters).

    Returns (tr_reduce_colocated, tr_map_colocated).  Exact when fp is exact.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    total = sum(block_sizes)
    tr1 = total
    tr2 = (k - 1) * total * fp / k
    return tr1, tr2


class FpRegistry:
    """First-writer-wins map from job hash to mean observed filtering percentage."""

    def __init__(self):
        self._means: Dict[str, float] = {}

    def record(self, hash_value: str, observed_fps: Iterable[float]) -> None:
        """Store the mean of the first completed job's per-task values.

        Later records under the same hash are ignored so replays stay
        deterministic.
        """
        fps = list(observed_fps)
        if not fps:
            raise ValueError("at least one observed filtering percentage required")
        if hash_value not in self._means:
            self._means[hash_value] = sum(fps) / len(fps)

    def lookup(self, hash_value: str) -> Optional[float]:
        return self._means.get(hash_value)

    def __contains__(self, hash_value: str) -> bool:
        return hash_value in self._means

    def __len__(self) -> int:
        return len(self._means)

    def dump(self, path) -> None:
        """Write `hash fp_mean` lines, sorted by hash for stable output."""
        with open(path, "w") as fh:
            for h in sorted(self._means):
                fh.write("%s %r\n" % (h, self._means[h]))

    @classmethod
    def load(cls, path) -> "FpRegistry":
        reg = cls()
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError("line %d: expected `hash fp_mean`" % lineno)
                try:
                    reg._means[parts[0]] = float(parts[1])
                except ValueError:
                    raise ValueError("line %d: bad fp value %r" % (lineno, parts[1]))
        return reg
