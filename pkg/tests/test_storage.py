import json

import numpy as np
import pytest

import storage
from entities import SobolevParams
from estimator import aggregate
from mechanisms import CoordinateBlockMechanism


@pytest.fixture
def dataset():
    mech = CoordinateBlockMechanism.build(7, 1, 1.0, SobolevParams((0.5,)))
    return mech.privatize_dataset(np.random.default_rng(0).random((25, 1)), root_seed=6, key=(1,))


def test_private_views_round_trip(tmp_path, dataset):
    path = tmp_path / "views.jsonl"
    storage.write_dataset(str(path), dataset)
    restored = storage.read_dataset(str(path))
    assert restored.n == dataset.n
    assert restored.key == (1,)
    assert restored.schedule.hash() == dataset.schedule.hash()
    assert aggregate(restored).coefficients == aggregate(dataset).coefficients


def test_tampered_magnitude_is_rejected(tmp_path, dataset):
    path = tmp_path / "views.jsonl"
    storage.write_dataset(str(path), dataset)
    lines = path.read_text().splitlines()
    record = json.loads(lines[1])
    record["blocks"][0]["z"][0] *= 1.5
    lines[1] = json.dumps(record)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        storage.read_dataset(str(path))


def test_truncated_file_is_rejected(tmp_path, dataset):
    path = tmp_path / "views.jsonl"
    storage.write_dataset(str(path), dataset)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError):
        storage.read_dataset(str(path))


def test_estimate_round_trip(tmp_path, dataset):
    path = tmp_path / "out" / "estimate.json"
    estimate = aggregate(dataset)
    storage.write_estimate(str(path), estimate)
    assert storage.read_estimate(str(path)).coefficients == estimate.coefficients


def test_schema_version_is_checked(tmp_path):
    path = tmp_path / "summary.json"
    storage.write_json(str(path), {"type": "run", "value": np.float64(1.5)})
    assert storage.read_json(str(path))["value"] == 1.5
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ValueError):
        storage.read_json(str(path))


def test_records_csv(tmp_path):
    path = tmp_path / "records.csv"
    rows = [{"n": 10, "risk": 0.5, "extra": "ignored"}, {"n": 20, "risk": 0.25, "extra": "ignored"}]
    storage.write_records_csv(str(path), rows, ["n", "risk"])
    back = storage.read_records_csv(str(path))
    assert back == [{"n": "10", "risk": "0.5"}, {"n": "20", "risk": "0.25"}]
    assert storage.run_paths("results/run") == ("results/run.json", "results/run.csv")
