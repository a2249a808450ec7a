import config
from interactive import get_simulation_parameters


def _answers(*values):
    it = iter(values)
    return lambda prompt: next(it)


def test_keeping_the_defaults():
    params = get_simulation_parameters(ask=_answers("yes"))
    assert params == config.get_default_params()


def test_custom_parameters():
    answers = _answers("no", "", "1", "0.5,", "", "0.5", "1024,2048", "10", "global", "")
    params = get_simulation_parameters(ask=answers)
    assert params["ALPHA"] == 0.5
    assert params["N_GRID"] == [1024, 2048]
    assert params["REPLICATIONS"] == 10
    assert params["MECHANISM"] == "global"
    assert params["DELTA"] == 0.5


def test_invalid_answers_revert_to_defaults():
    params = get_simulation_parameters(ask=_answers("no", "two"))
    assert params == config.get_default_params()
