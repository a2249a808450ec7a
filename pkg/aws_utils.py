import boto3
import os
from decimal import Decimal
import json
import logging

logger = logging.getLogger(__name__)

REGION_ENV_VARS = ("AWS_REGION", "AWS_DEFAULT_REGION")

# Run-store handles, set by connect_run_store()
runs_client = None
runs_resource = None


def resolve_region(profile_name=None, region_name=None):
    """Pick the region for the run store.

    Order: explicit argument, the REGION_ENV_VARS, then the profile's
    configured region. Returns None when nothing is set.
    """
    if region_name:
        return region_name
    for var in REGION_ENV_VARS:
        if os.environ.get(var):
            return os.environ[var]
    if profile_name:
        return boto3.Session(profile_name=profile_name).region_name
    return None


def connect_run_store(profile_name=None, region_name=None):
    """Open the DynamoDB handles used to log run summaries; returns the region."""
    global runs_client, runs_resource

    region = resolve_region(profile_name, region_name)
    if not region:
        raise ValueError("no AWS region for the run store: pass --aws-region or set "
                         f"one of {', '.join(REGION_ENV_VARS)}")
    session = boto3.Session(profile_name=profile_name, region_name=region)
    runs_client = session.client("dynamodb")
    runs_resource = session.resource("dynamodb")
    logger.debug("run store connected in %s (profile=%s)", region, profile_name)
    return region


def _require_run_store():
    if runs_client is None or runs_resource is None:
        raise RuntimeError("run store not connected; call connect_run_store() first")


def ensure_dynamodb_table(table_name):
    """Create the (RunID HASH, GridPoint RANGE) table if it does not exist."""
    _require_run_store()
    try:
        runs_client.describe_table(TableName=table_name)
        return
    except runs_client.exceptions.ResourceNotFoundException:
        pass

    table = runs_resource.create_table(
        TableName=table_name,
        KeySchema=[
            {"AttributeName": "RunID", "KeyType": "HASH"},
            {"AttributeName": "GridPoint", "KeyType": "RANGE"},
        ],
        AttributeDefinitions=[
            {"AttributeName": "RunID", "AttributeType": "S"},
            {"AttributeName": "GridPoint", "AttributeType": "S"},
        ],
        BillingMode='PAY_PER_REQUEST',
    )
    table.meta.client.get_waiter('table_exists').wait(TableName=table_name)


def _to_dynamo(obj):
    """DynamoDB rejects floats; round-trip through JSON with Decimal numbers."""
    return json.loads(json.dumps(obj), parse_float=Decimal)


def summary_items(run_id, summary):
    """One item for the experiment spec plus one per grid point."""
    items = [{
        'RunID': run_id,
        'GridPoint': 'spec',
        'Spec': _to_dynamo(summary["spec"]),
    }]
    for point in summary["points"]:
        items.append({
            'RunID': run_id,
            'GridPoint': f"n-{point['n']}",
            **_to_dynamo(point),
        })
    return items


def log_run_to_dynamodb(table_name, run_id, summary):
    """Batch-write a run summary (RunResult.to_json()) under run_id."""
    _require_run_store()
    table = runs_resource.Table(table_name)
    items = summary_items(run_id, summary)
    with table.batch_writer() as batch:
        for item in items:
            batch.put_item(Item=item)
    logger.info("logged %d items for %s to %s", len(items), run_id, table_name)
    return len(items)
