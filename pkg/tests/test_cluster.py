from fractions import Fraction

import pytest

from vmrsim.cluster import (BlockPlacement, Locality, build_cluster,
                            locality_level, place_blocks, placement_rng,
                            unique_blocks_per_datacenter)


def test_build_cluster_enumeration():
    topo = build_cluster([15, 15])
    assert topo.k == 2
    assert topo.datacenter_ids == [1, 2]
    assert topo.total_vps == 30
    assert topo.avg_vps_per_dc == 15
    assert topo.node((2, 15)).vps_id == (2, 15)
    assert len(topo.nodes_in(1)) == 15


def test_average_vps_is_exact_rational():
    assert build_cluster([10, 20]).avg_vps_per_dc == 15
    assert build_cluster([15, 16]).avg_vps_per_dc == Fraction(31, 2)


def test_single_datacenter_rejected():
    with pytest.raises(ValueError):
        build_cluster([30])


def test_empty_datacenter_rejected():
    with pytest.raises(ValueError):
        build_cluster([15, 0])


def test_placement_deterministic_and_distinct():
    topo = build_cluster([15, 15])
    a = place_blocks(topo, "j1", 8, 1, placement_rng(42, "j1"))
    b = place_blocks(topo, "j1", 8, 1, placement_rng(42, "j1"))
    for i in range(1, 9):
        assert a.replicas("j1", i) == b.replicas("j1", i)
        assert len(a.replicas("j1", i)) == 1


def test_placement_two_replicas_distinct_vps():
    topo = build_cluster([2, 2, 2])
    placement = place_blocks(topo, "j1", 6, 2, placement_rng(1, "j1"))
    for i in range(1, 7):
        assert len(placement.replicas("j1", i)) == 2


def test_replication_clamped_to_cluster_size():
    topo = build_cluster([15, 15])
    placement = place_blocks(topo, "j1", 3, 40, placement_rng(1, "j1"))
    for i in range(1, 4):
        assert len(placement.replicas("j1", i)) == 30


def test_replication_must_be_positive():
    topo = build_cluster([2, 2])
    with pytest.raises(ValueError):
        place_blocks(topo, "j1", 1, 0, placement_rng(1, "j1"))


def test_locality_levels_partition():
    topo = build_cluster([2, 2])
    placement = BlockPlacement(replication=1)
    placement.add("j1", 1, {(1, 2)})
    assert locality_level((1, 2), "j1", 1, placement) is Locality.VPS_LOCAL
    assert locality_level((1, 1), "j1", 1, placement) is Locality.CEN_LOCAL
    assert locality_level((2, 1), "j1", 1, placement) is Locality.OFF_CEN


def test_unknown_block_is_error():
    placement = BlockPlacement(replication=1)
    with pytest.raises(KeyError):
        placement.replicas("j1", 1)


def test_unique_blocks_cover_all_blocks():
    topo = build_cluster([3, 3, 3])
    placement = place_blocks(topo, "j1", 12, 1, placement_rng(7, "j1"))
    held = unique_blocks_per_datacenter(placement, "j1", 12, topo)
    assert set().union(*held.values()) == set(range(1, 13))


def test_unique_blocks_full_replication():
    topo = build_cluster([2, 2])
    placement = place_blocks(topo, "j1", 5, 4, placement_rng(1, "j1"))
    held = unique_blocks_per_datacenter(placement, "j1", 5, topo)
    assert held[1] == held[2] == set(range(1, 6))


def test_unique_blocks_degenerate_single_holder():
    topo = build_cluster([2, 2])
    placement = BlockPlacement(replication=1)
    for i in range(1, 4):
        placement.add("j1", i, {(1, 1)})
    held = unique_blocks_per_datacenter(placement, "j1", 3, topo)
    assert held[1] == {1, 2, 3}
    assert held[2] == set()


def test_placement_merge_accumulates_jobs():
    topo = build_cluster([2, 2])
    a = place_blocks(topo, "j1", 2, 1, placement_rng(1, "j1"))
    b = place_blocks(topo, "j2", 2, 1, placement_rng(1, "j2"))
    a.merge(b)
    assert a.block_count("j1") == 2
    assert a.block_count("j2") == 2
