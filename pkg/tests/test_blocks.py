import math

import numpy as np
import pytest

from blocks import (BlockSchedule, S_value, allocate_budget, anisotropic_partition, dyadic_partition,
                    global_theoretical_J, global_variance_proxy, regime, sigma_closed_form, sigma_terms,
                    single_block, theoretical_J)
from entities import SobolevParams


def test_dyadic_partition_sizes():
    assert [b.size for b in dyadic_partition(1, 1).blocks] == [1]
    assert [b.size for b in dyadic_partition(3, 1).blocks] == [1, 2]
    assert sorted(b.size for b in dyadic_partition(3, 2).blocks) == [1, 2, 2, 4]


def test_partition_covers_every_index_once():
    schedule = dyadic_partition(7, 2)
    indices = schedule.indices()
    assert indices.shape == (49, 2)
    assert len({tuple(j) for j in indices}) == 49
    assert indices.min() == 1 and indices.max() == 7


def test_non_dyadic_J_is_rejected():
    with pytest.raises(ValueError):
        dyadic_partition(4, 1)


def test_anisotropic_partition_levels():
    beta = SobolevParams((1.0, 2.0), 2.0)
    delta = SobolevParams((0.5, 1.0))
    schedule = anisotropic_partition(7, beta, delta)
    assert schedule.bounds == (7, 3)
    assert schedule.size == 21


def test_anisotropic_partition_reduces_to_isotropic():
    params = SobolevParams((1.0, 1.0))
    assert anisotropic_partition(3, params, params).bounds == dyadic_partition(3, 2).bounds


def test_anisotropy_mismatch_is_rejected():
    with pytest.raises(ValueError):
        anisotropic_partition(7, SobolevParams((1.0, 2.0)), SobolevParams((1.0, 1.0)))


def test_budget_allocation():
    delta = SobolevParams((3.0,))
    schedule = allocate_budget(dyadic_partition(3, 1), 1.0, delta)
    assert S_value(schedule, delta) == pytest.approx(1.5)
    assert [b.budget for b in schedule.blocks] == pytest.approx([2.0 / 3.0, 1.0 / 3.0])


def test_budgets_sum_to_alpha():
    schedule = allocate_budget(dyadic_partition(15, 2), 0.7, SobolevParams((1.3, 1.3)))
    assert math.fsum(b.budget for b in schedule.blocks) == pytest.approx(0.7)


def test_sigma_closed_form_matches_block_sum():
    schedule = allocate_budget(dyadic_partition(3, 1), 1.0, SobolevParams((1.0,)))
    _, total = sigma_terms(schedule, 400)
    assert total == pytest.approx(0.2)
    assert sigma_closed_form(schedule, 400) == pytest.approx(0.2)
    single = allocate_budget(dyadic_partition(1, 1), 1.0, SobolevParams((1.0,)))
    assert sigma_closed_form(single, 100) == pytest.approx(0.1)


def test_sigma_terms_need_allocation():
    with pytest.raises(ValueError):
        sigma_terms(dyadic_partition(3, 1), 100)


def test_regime_tags():
    assert regime(SobolevParams((0.5,)), 1.0) == "sub"
    assert regime(SobolevParams((1.0,)), 1.0) == "critical"
    assert regime(SobolevParams((2.0,)), 1.0) == "super"
    assert regime(SobolevParams((0.5, 3.0)), 2.0) == "mixed"


def test_theoretical_J():
    beta = SobolevParams((1.0,))
    assert theoretical_J(256, 1.0, beta, SobolevParams((2.0,))) == (1, "super")
    assert theoretical_J(4096, 1.0, beta, SobolevParams((0.5,))) == (7, "sub")
    with pytest.raises(ValueError):
        theoretical_J(1, 1.0, beta, SobolevParams((0.5,)))


def test_global_theoretical_J():
    J, tag = global_theoretical_J(4096, 1.0, SobolevParams((1.0,)), SobolevParams((2.0,)))
    assert tag == "super"
    assert J == int(math.floor(4096 ** (1.0 / 7.0)))


def test_global_schedule_and_proxy():
    schedule = single_block((3,), 1.0, SobolevParams((1.0,)))
    assert schedule.kind == "global"
    assert len(schedule.blocks) == 1 and schedule.blocks[0].size == 3
    s_tilde = 1.0 + 2.0 ** -2 + 3.0 ** -2
    assert global_variance_proxy(3, 1, 100, 1.0, 1.0) == pytest.approx(math.sqrt(3 * s_tilde) / 10.0)


def test_schedule_json_round_trip_keeps_hash():
    schedule = allocate_budget(dyadic_partition(7, 1), 0.5, SobolevParams((0.5,)))
    restored = BlockSchedule.from_json(schedule.to_json())
    assert restored.hash() == schedule.hash()
    assert np.array_equal(restored.indices(), schedule.indices())


@pytest.mark.parametrize("delta,direction", [(0.5, 1), (1.0, 0), (2.0, -1)])
def test_budget_moves_with_the_level_as_delta_crosses_d(delta, direction):
    schedule = allocate_budget(dyadic_partition(15, 1), 1.0, SobolevParams((delta,)))
    budgets = np.array([b.budget for b in sorted(schedule.blocks, key=lambda b: b.label)])
    steps = np.diff(budgets)
    if direction == 0:
        assert np.allclose(steps, 0.0, atol=1e-15)
    else:
        assert np.all(direction * steps > 0)


def test_budget_increases_along_each_axis_below_d():
    schedule = allocate_budget(dyadic_partition(7, 2), 1.0, SobolevParams((1.0, 1.5)))
    budget = {b.label: b.budget for b in schedule.blocks}
    for (l1, l2), a in budget.items():
        if (l1 + 1, l2) in budget:
            assert budget[(l1 + 1, l2)] > a
        if (l1, l2 + 1) in budget:
            assert budget[(l1, l2 + 1)] > a


def test_S_factorizes_over_axes():
    delta = SobolevParams((0.5, 3.0))
    schedule = dyadic_partition(7, 2)
    per_axis = [sum(2.0 ** (l * (1.0 - s / 2) / 2.0) for l in range(3)) for s in delta.smoothness]
    assert S_value(schedule, delta) == pytest.approx(per_axis[0] * per_axis[1])


def test_lowering_alpha_never_lowers_sigma():
    partition = dyadic_partition(15, 1)
    sigmas = [sigma_closed_form(allocate_budget(partition, a, SobolevParams((0.5,))), 1000)
              for a in (2.0, 1.0, 0.5, 0.1)]
    assert all(x < y for x, y in zip(sigmas, sigmas[1:]))
