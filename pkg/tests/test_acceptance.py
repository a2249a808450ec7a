"""
Long Monte Carlo experiments. Run with: pytest --run-acceptance -m acceptance
"""
import numpy as np
import pytest

import config
import streams
from adaptive import concentration_check
from blocks import allocate_budget, dyadic_partition, sigma_closed_form
from entities import SobolevParams
from estimator import aggregate, tau, variance_distance
from fourier import basis_matrix
from mechanisms import CoordinateBlockMechanism
from mechanisms.channel import magnitude_bound, sample_block
from simulation import ExperimentSpec, adaptive_rate_check, compare_mechanisms, fit_rate, run
from testbed import build_truth

pytestmark = pytest.mark.acceptance

SLOPE_TOLERANCE = 0.08


def _spec(**overrides):
    params = config.get_default_params()
    params.update(SEED=2024, REPLICATIONS=100, WORKERS=4)
    params.update(overrides)
    return ExperimentSpec.from_params(params)


def test_unbiased_and_bounded_privatization():
    mech = CoordinateBlockMechanism.build(15, 1, 1.0, SobolevParams((0.5,)))
    x = np.array([[0.3]])
    n = 10 ** 6
    for b in mech.schedule.blocks:
        params = mech.channel(b.label)
        phi = basis_matrix(x, b.indices())
        z = sample_block(np.repeat(phi, n, axis=0), params, streams.derive_stream(1, b.label)) * params.magnitude
        bound = magnitude_bound(b.size, b.budget, 1, 1.0)
        assert np.all(np.abs(z) <= bound)
        assert np.all(np.abs(z.mean(axis=0) - phi[0]) <= 4 * bound / 1e3)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("ratio", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("n", [1000, 10000])
def test_variance_bound_dominates(d, ratio, n):
    delta = SobolevParams.isotropic(ratio * d, d)
    schedule = allocate_budget(dyadic_partition(3, d), 1.0, delta)
    mech = CoordinateBlockMechanism(schedule)
    truth = build_truth("bump", SobolevParams.isotropic(1, d, 2.0), J=2)
    table = truth.coefficients(3)
    distances = []
    for rep in range(200):
        points = truth.sample(n, streams.derive_stream(3, streams.SAMPLE, rep))
        distances.append(variance_distance(aggregate(mech.privatize_sums(points, 3, (rep,))), table))
    assert np.mean(distances) <= tau(1.0, d) * sigma_closed_form(schedule, n)


def test_sub_critical_rate():
    fit = fit_rate(run(_spec(DELTA=0.5)))
    assert fit.theoretical == pytest.approx(-0.375)
    assert fit.within(SLOPE_TOLERANCE), fit.summary()


def test_super_critical_rate():
    fit = fit_rate(run(_spec(DELTA=2.0)))
    assert fit.theoretical == pytest.approx(-0.5)
    assert fit.within(SLOPE_TOLERANCE), fit.summary()


def test_block_beats_global():
    report = compare_mechanisms(_spec(DELTA=2.0))
    assert report.global_fit.theoretical == pytest.approx(-3.0 / 7.0)
    assert report.global_fit.within(SLOPE_TOLERANCE), report.global_fit.summary()
    assert report.separated_from(2 ** 14)


def test_concentration_bound():
    schedule = allocate_budget(dyadic_partition(7, 1), 1.0, SobolevParams((1.0,)))
    truth = build_truth("bump", SobolevParams.isotropic(1, 1, 2.0), J=2)
    report = concentration_check(schedule, 4096, 1.0, truth, replications=2000, root_seed=11)
    assert report.passed, report.summary()


@pytest.mark.parametrize("truth", [
    {"kind": "bump", "J": 2, "nu": "dense"},
    {"kind": "bump", "J": 2, "nu": "sparse"},
    {"kind": "uniform", "J": 2, "nu": "empty"},
])
def test_adaptive_oracle(truth):
    check = adaptive_rate_check(_spec(N_GRID=[2 ** 14], REPLICATIONS=50, TRUTH=truth))
    assert check.oracle_passed(), check.oracle_ratios


def test_adaptive_rate():
    check = adaptive_rate_check(_spec(N_GRID=[2 ** k for k in range(10, 17)], REPLICATIONS=50))
    assert check.fit is not None
    assert check.fit.deviation <= 0.1, check.fit.summary()
