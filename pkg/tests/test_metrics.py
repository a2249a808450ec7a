import math

import numpy as np
import pytest

from entities import SobolevParams
from metrics import fit_power_law, regressor_values, theoretical_rate

BETA = SobolevParams((1.0,), 2.0)


def test_regressors():
    n = np.array([math.e ** 2, math.e ** 4])
    assert regressor_values(n, "plain", 1) == pytest.approx([2.0, 4.0])
    assert regressor_values(n, "log", 1) == pytest.approx([2.0 - math.log(2.0), 4.0 - math.log(4.0)])
    assert regressor_values(n, "log^4d", 2) == pytest.approx([2.0 - 8 * math.log(2.0), 4.0 - 8 * math.log(4.0)])
    with pytest.raises(ValueError):
        regressor_values(n, "sqrt", 1)


def test_block_rates():
    assert theoretical_rate("block", "fixed", BETA, SobolevParams((0.5,))) == (-0.375, "sub", "plain")
    assert theoretical_rate("block", "fixed", BETA, SobolevParams((2.0,))) == (-0.5, "super", "plain")
    assert theoretical_rate("block", "fixed", BETA, SobolevParams((1.0,))) == (-0.5, "critical", "log^4d")
    assert theoretical_rate("block", "adaptive", BETA, SobolevParams((1.0,)))[2] == "log^4d+1"
    assert theoretical_rate("block", "adaptive", BETA, SobolevParams((0.5,)))[2] == "log"


def test_global_rates():
    exponent, tag, regressor = theoretical_rate("global", "fixed", BETA, SobolevParams((2.0,)))
    assert exponent == pytest.approx(-3.0 / 7.0)
    assert (tag, regressor) == ("super", "plain")
    exponent, tag, regressor = theoretical_rate("global", "fixed", BETA, SobolevParams((0.5,)))
    assert exponent == pytest.approx(-1.5 / 4.0)
    assert (tag, regressor) == ("critical", "log^d")
    with pytest.raises(ValueError):
        theoretical_rate("laplace", "fixed", BETA, BETA)


def test_fit_recovers_an_exact_power_law():
    n = np.array([2.0 ** k for k in range(10, 16)])
    risk = 3.0 * n ** -0.375
    fit = fit_power_law(n, risk, 0.01 * risk, -0.375)
    assert fit.slope == pytest.approx(-0.375)
    assert fit.intercept == pytest.approx(math.log(3.0))
    assert fit.within(1e-9)
    assert fit.dropped == ()
    assert fit.to_json()["deviation"] == pytest.approx(0.0, abs=1e-9)


def test_fit_drops_a_noisy_first_point():
    n = np.array([2.0 ** k for k in range(10, 15)])
    risk = n ** -0.5
    se = 0.01 * risk
    se[0] = 0.5 * risk[0]
    fit = fit_power_law(n[::-1], risk[::-1], se[::-1], -0.5)
    assert fit.dropped == (1024.0,)
    assert len(fit.x) == 4
    assert "Dropped" in fit.summary()
    kept = fit_power_law(n, risk, se, -0.5, drop_transient=False)
    assert kept.dropped == ()


def test_fit_input_checks():
    n = [2.0, 4.0, 8.0]
    with pytest.raises(ValueError):
        fit_power_law(n, [1.0, 0.5, 0.25], [0.0] * 3, -1.0)
    with pytest.raises(ValueError):
        fit_power_law([4.0] * 4, [1.0] * 4, [0.0] * 4, -1.0)
    with pytest.raises(ValueError):
        fit_power_law([2.0, 4.0, 8.0, 16.0], [1.0, 0.0, 0.5, 0.2], [0.0] * 4, -1.0)
