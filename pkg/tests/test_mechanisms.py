import numpy as np
import pytest

from blocks import allocate_budget, dyadic_partition
from entities import SobolevParams
from estimator import aggregate
from mechanisms import (MECHANISMS, CoordinateBlockMechanism, CoordinateGlobalMechanism, global_privatize,
                        privatize_record)
from mechanisms.audit import corrupted_overrides, verify_ldp


def _points(n, d=1, seed=0):
    return np.random.default_rng(seed).random((n, d))


def test_registry():
    assert MECHANISMS["block"] is CoordinateBlockMechanism
    assert MECHANISMS["global"] is CoordinateGlobalMechanism


def test_block_mechanism_needs_allocated_dyadic_schedule():
    with pytest.raises(ValueError):
        CoordinateBlockMechanism(dyadic_partition(3, 1))
    with pytest.raises(ValueError):
        CoordinateBlockMechanism(CoordinateGlobalMechanism.build(3, 1, 1.0).schedule)


def test_private_view_shape_and_magnitudes():
    mech = CoordinateBlockMechanism.build(7, 2, 1.0, SobolevParams((1.0, 1.0)))
    data = mech.privatize_dataset(_points(50, 2), root_seed=4)
    assert data.n == 50
    for b in mech.schedule.blocks:
        values = data.values(b.label)
        assert values.shape == (50, b.size)
        assert np.allclose(np.abs(values), mech.channel(b.label).magnitude)
    assert data.record(0).as_vector().shape == (49,)


def test_privatize_record():
    mech = CoordinateBlockMechanism.build(7, 1, 1.0, SobolevParams((1.0,)))
    record = privatize_record([0.3], mech.schedule, np.random.default_rng(9))
    assert set(record.values) == {b.label for b in mech.schedule.blocks}
    for b in mech.schedule.blocks:
        assert record.values[b.label].shape == (b.size,)
        assert np.allclose(np.abs(record.values[b.label]), mech.channel(b.label).magnitude)
    again = mech.privatize_record([0.3], np.random.default_rng(9))
    assert np.array_equal(record.as_vector(), again.as_vector())


def test_privatization_is_reproducible():
    mech = CoordinateBlockMechanism.build(3, 1, 0.5, SobolevParams((1.0,)))
    points = _points(300)
    a = mech.privatize_dataset(points, root_seed=9, key=(2,))
    b = mech.privatize_dataset(points, root_seed=9, key=(2,))
    c = mech.privatize_dataset(points, root_seed=9, key=(3,))
    assert all(np.array_equal(a.signs[l], b.signs[l]) for l in a.signs)
    assert any(not np.array_equal(a.signs[l], c.signs[l]) for l in a.signs)


def test_sums_match_full_dataset():
    mech = CoordinateBlockMechanism.build(7, 1, 1.0, SobolevParams((0.5,)))
    points = _points(2500)
    full = aggregate(mech.privatize_dataset(points, root_seed=1, chunk_size=512))
    summed = aggregate(mech.privatize_sums(points, root_seed=1, chunk_size=512))
    assert full.coefficients == summed.coefficients


def test_global_mechanism_is_one_block():
    mech = CoordinateGlobalMechanism.build(3, 2, 1.0)
    assert len(mech.schedule.blocks) == 1
    assert mech.schedule.blocks[0].size == 9
    record = global_privatize([0.2, 0.7], 3, 2, 1.0, np.random.default_rng(0))
    assert record.as_vector().shape == (9,)


def test_ldp_audit_passes():
    schedule = allocate_budget(dyadic_partition(3, 1), 0.5, SobolevParams((1.0,)))
    report = verify_ldp(schedule, _points(20))
    assert report.passed
    assert report.total_budget == pytest.approx(0.5)
    for b in report.blocks:
        assert b.max_log_ratio <= b.budget + 1e-10


def test_ldp_audit_passes_in_two_dimensions():
    schedule = allocate_budget(dyadic_partition(3, 2), 1.0, SobolevParams((2.0, 2.0)))
    assert verify_ldp(schedule, _points(10, 2, seed=5)).passed


def test_corrupted_channel_fails_audit():
    schedule = allocate_budget(dyadic_partition(3, 1), 0.5, SobolevParams((1.0,)))
    report = verify_ldp(schedule, _points(20), corrupted_overrides(schedule, 2.0))
    assert not report.passed
    assert report.max_excess > 0


def test_audit_rejects_oversized_blocks():
    schedule = allocate_budget(dyadic_partition(31, 1), 1.0, SobolevParams((1.0,)))
    with pytest.raises(ValueError):
        verify_ldp(schedule, _points(5))


def test_ldp_audit_up_to_block_size_eight():
    schedule = allocate_budget(dyadic_partition(15, 1), 1.0, SobolevParams((0.5,)))
    assert [b.size for b in schedule.blocks] == [1, 2, 4, 8]
    assert verify_ldp(schedule, _points(50, seed=2)).passed
    assert not verify_ldp(schedule, _points(50, seed=2), corrupted_overrides(schedule, 2.0)).passed


def test_blocks_are_privatized_independently():
    mech = CoordinateBlockMechanism.build(7, 1, 1.0, SobolevParams((1.0,)))
    n = 40_000
    data = mech.privatize_dataset(np.full((n, 1), 0.3), root_seed=8)
    blocks = mech.schedule.blocks
    signs = np.hstack([data.signs[b.label].astype(float) for b in blocks])
    cov = np.cov(signs, rowvar=False)
    edges = np.cumsum([0] + [b.size for b in blocks])
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            cross = cov[edges[i]:edges[i + 1], edges[j]:edges[j + 1]]
            assert np.max(np.abs(cross)) < 5 / np.sqrt(n)


def test_log_ratio_matches_block_budget_as_alpha_vanishes():
    schedule = allocate_budget(dyadic_partition(7, 1), 1e-6, SobolevParams((0.5,)))
    report = verify_ldp(schedule, _points(10, seed=3))
    assert report.passed
    for b in report.blocks:
        assert b.max_log_ratio == pytest.approx(b.budget, rel=1e-5)
