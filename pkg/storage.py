"""
Result persistence: JSON summaries, JSON-lines private views and CSV
per-replication records. Every top-level JSON object carries
schema_version.
"""
import csv
import json
import logging
import os
from typing import Iterable, List, Mapping

import numpy as np

from blocks import BlockSchedule
from config import DEFAULT_SCHEMA_VERSION
from estimator import EstimateResult
from mechanisms.base import PrivatizedDataset

logger = logging.getLogger(__name__)

MAGNITUDE_RTOL = 1e-9


def _ensure_dir(path):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"{type(obj).__name__} is not JSON serializable")


def dumps(obj: Mapping) -> str:
    """Canonical JSON text: sorted keys, fixed separators, schema version added."""
    payload = dict(obj)
    payload.setdefault("schema_version", DEFAULT_SCHEMA_VERSION)
    return json.dumps(payload, sort_keys=True, indent=2, default=_default)


def write_json(path, obj: Mapping):
    _ensure_dir(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
        fh.write("\n")
    logger.info("wrote %s", path)


def read_json(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    version = obj.get("schema_version")
    if version != DEFAULT_SCHEMA_VERSION:
        raise ValueError(f"{path} has schema version {version}, expected {DEFAULT_SCHEMA_VERSION}")
    return obj


# --- private views ---

def write_dataset(path, data: PrivatizedDataset):
    """Header line (schedule, provenance, magnitudes), then one line per record."""
    _ensure_dir(path)
    labels = [b.label for b in data.schedule.blocks]
    header = {
        "schema_version": DEFAULT_SCHEMA_VERSION,
        "type": "privatized_dataset",
        "n": data.n,
        "root_seed": data.root_seed,
        "key": list(data.key),
        "schedule": data.schedule.to_json(),
        "schedule_hash": data.schedule.hash(),
        "magnitudes": [{"l": list(l), "B": data.magnitudes[l]} for l in labels],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for i in range(data.n):
            blocks = [
                {"l": list(l), "z": (data.signs[l][i].astype(float) * data.magnitudes[l]).tolist()}
                for l in labels
            ]
            fh.write(json.dumps({"i": i, "blocks": blocks}, sort_keys=True) + "\n")
    logger.info("wrote %d private views to %s", data.n, path)


def read_dataset(path) -> PrivatizedDataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("type") != "privatized_dataset":
            raise ValueError(f"{path} is not a private-view file")
        if header.get("schema_version") != DEFAULT_SCHEMA_VERSION:
            raise ValueError(f"{path} has schema version {header.get('schema_version')}")
        schedule = BlockSchedule.from_json(header["schedule"])
        if schedule.hash() != header["schedule_hash"]:
            raise ValueError(f"{path}: schedule does not match its recorded hash")
        magnitudes = {tuple(m["l"]): float(m["B"]) for m in header["magnitudes"]}
        rows = {b.label: [] for b in schedule.blocks}
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            for entry in record["blocks"]:
                label = tuple(entry["l"])
                if label not in rows:
                    raise ValueError(f"{path}: record {record['i']} has a block {label} outside the schedule")
                z = np.asarray(entry["z"], dtype=float)
                if not np.allclose(np.abs(z), magnitudes[label], rtol=MAGNITUDE_RTOL):
                    raise ValueError(f"{path}: record {record['i']} block {label} does not match its magnitude")
                rows[label].append(np.sign(z).astype(np.int8))
    counts = {len(v) for v in rows.values()}
    if counts != {int(header["n"])}:
        raise ValueError(f"{path}: header announces {header['n']} records, found {sorted(counts)}")
    signs = {label: np.vstack(v) if v else np.zeros((0, schedule.block(label).size), dtype=np.int8)
             for label, v in rows.items()}
    return PrivatizedDataset(schedule, signs, magnitudes, int(header["root_seed"]), tuple(header["key"]))


# --- estimates and reports ---

def write_estimate(path, estimate: EstimateResult):
    write_json(path, {"type": "estimate", **estimate.to_json()})


def read_estimate(path) -> EstimateResult:
    obj = read_json(path)
    estimate = EstimateResult.from_json(obj)
    if estimate.schedule.hash() != obj["schedule_hash"]:
        raise ValueError(f"{path}: schedule does not match its recorded hash")
    return estimate


def write_records_csv(path, records: Iterable[Mapping], fieldnames: List[str]):
    """Plot-ready CSV of per-replication records."""
    _ensure_dir(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for r in records:
            writer.writerow(r)
    logger.info("wrote %s", path)


def read_records_csv(path) -> List[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run_paths(output):
    """(summary.json, records.csv) for an output prefix."""
    return f"{output}.json", f"{output}.csv"
