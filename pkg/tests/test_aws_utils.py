from decimal import Decimal
from unittest import mock

import pytest

import aws_utils

SUMMARY = {
    "type": "run",
    "spec": {"D": 1, "ALPHA": 0.5},
    "points": [{"n": 128, "mean_risk": 0.25}, {"n": 256, "mean_risk": 0.125}],
}


@pytest.fixture
def no_region_env(monkeypatch):
    for var in aws_utils.REGION_ENV_VARS:
        monkeypatch.delenv(var, raising=False)


def test_summary_items_use_decimals():
    items = aws_utils.summary_items("run-1", SUMMARY)
    assert [i["GridPoint"] for i in items] == ["spec", "n-128", "n-256"]
    assert items[0]["Spec"]["ALPHA"] == Decimal("0.5")
    assert items[1]["mean_risk"] == Decimal("0.25")


def test_logging_needs_a_connected_store(monkeypatch):
    monkeypatch.setattr(aws_utils, "runs_client", None)
    monkeypatch.setattr(aws_utils, "runs_resource", None)
    with pytest.raises(RuntimeError):
        aws_utils.log_run_to_dynamodb("table", "run-1", SUMMARY)


def test_batch_write(monkeypatch):
    resource = mock.MagicMock()
    monkeypatch.setattr(aws_utils, "runs_client", mock.MagicMock())
    monkeypatch.setattr(aws_utils, "runs_resource", resource)
    assert aws_utils.log_run_to_dynamodb("table", "run-1", SUMMARY) == 3
    batch = resource.Table.return_value.batch_writer.return_value.__enter__.return_value
    assert batch.put_item.call_count == 3


def test_region_resolution_order(monkeypatch, no_region_env):
    assert aws_utils.resolve_region(region_name="eu-west-1") == "eu-west-1"
    monkeypatch.setenv("AWS_DEFAULT_REGION", "us-east-2")
    assert aws_utils.resolve_region() == "us-east-2"
    monkeypatch.setenv("AWS_REGION", "ap-south-1")
    assert aws_utils.resolve_region() == "ap-south-1"
    assert aws_utils.resolve_region(region_name="eu-west-1") == "eu-west-1"


def test_region_falls_back_to_profile(no_region_env):
    with mock.patch.object(aws_utils.boto3, "Session") as session:
        session.return_value.region_name = "sa-east-1"
        assert aws_utils.resolve_region(profile_name="lab") == "sa-east-1"
        session.assert_called_once_with(profile_name="lab")
    assert aws_utils.resolve_region() is None


def test_region_is_required(no_region_env):
    with pytest.raises(ValueError, match="region"):
        aws_utils.connect_run_store()


def test_connect_run_store_sets_handles(monkeypatch, no_region_env):
    monkeypatch.setattr(aws_utils, "runs_client", None)
    monkeypatch.setattr(aws_utils, "runs_resource", None)
    with mock.patch.object(aws_utils.boto3, "Session") as session:
        assert aws_utils.connect_run_store(region_name="us-west-2") == "us-west-2"
        session.assert_called_once_with(profile_name=None, region_name="us-west-2")
    assert aws_utils.runs_client is session.return_value.client.return_value
    assert aws_utils.runs_resource is session.return_value.resource.return_value
