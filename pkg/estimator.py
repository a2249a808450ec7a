"""
Private projection estimator: coefficient means of the private views,
risk against a known truth and the variance majorant.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from blocks import BlockSchedule, global_variance_proxy, sigma_closed_form
from entities import CoefficientTable, SobolevParams
from fourier import adversarial_distance, analytic_tail_bound, basis_bound
from mechanisms.base import PrivatizedDataset, SignSums
from mechanisms.channel import xi

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EstimateResult:
    """theta-hat on the schedule's index set, with per-block empirical variance of Z."""
    coefficients: CoefficientTable
    schedule: BlockSchedule
    n: int
    block_variance: Dict[Tuple[int, ...], float] = field(default_factory=dict)
    root_seed: Optional[int] = None
    key: Tuple[int, ...] = ()

    @property
    def J(self) -> int:
        return self.schedule.J

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "schedule_hash": self.schedule.hash(),
            "schedule": self.schedule.to_json(),
            "root_seed": self.root_seed,
            "key": list(self.key),
            "block_variance": [
                {"l": list(label), "variance": v} for label, v in sorted(self.block_variance.items())
            ],
            "coefficients": self.coefficients.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EstimateResult":
        return cls(
            coefficients=CoefficientTable.from_json(obj["coefficients"]),
            schedule=BlockSchedule.from_json(obj["schedule"]),
            n=int(obj["n"]),
            block_variance={tuple(e["l"]): float(e["variance"]) for e in obj.get("block_variance", [])},
            root_seed=obj.get("root_seed"),
            key=tuple(obj.get("key", ())),
        )


@dataclass(frozen=True)
class RiskInterval:
    """Exact head distance plus the analytic tail bound: the risk lies in [head, head + tail]."""
    head: float
    tail: float

    @property
    def upper(self) -> float:
        return self.head + self.tail

    @property
    def midpoint(self) -> float:
        return self.head + self.tail / 2.0


def _from_sums(schedule, n, sums, magnitudes, root_seed=None, key=()):
    if n < 1:
        raise ValueError("cannot aggregate an empty dataset")
    indices, values, variance = [], [], {}
    for b in schedule.blocks:
        s = np.asarray(sums[b.label], dtype=np.int64)
        mag = magnitudes[b.label]
        mean_sign = s / n
        indices.append(b.indices())
        values.append(mag * mean_sign)
        if n > 1:
            variance[b.label] = float(np.mean(mag ** 2 * (1.0 - mean_sign ** 2) * n / (n - 1)))
        else:
            variance[b.label] = 0.0
    table = CoefficientTable.from_arrays(np.concatenate(indices), np.concatenate(values), schedule.bounds)
    return EstimateResult(table, schedule, int(n), variance, root_seed, tuple(key))


def aggregate(data):
    """
    theta-hat_j = (1/n) sum_i Z_ij, computed as B * (#plus - #minus) / n so
    the sums are exact integers and independent of reduction order.
    """
    if isinstance(data, SignSums):
        return _from_sums(data.schedule, data.n, data.sums, data.magnitudes, data.root_seed, data.key)
    if isinstance(data, PrivatizedDataset):
        sums = {label: s.sum(axis=0, dtype=np.int64) for label, s in data.signs.items()}
        return _from_sums(data.schedule, data.n, sums, data.magnitudes, data.root_seed, data.key)
    records = list(data)
    if not records:
        raise ValueError("cannot aggregate an empty dataset")
    schedule = records[0].schedule
    reference = schedule.hash()
    for r in records[1:]:
        if r.schedule is not schedule and r.schedule.hash() != reference:
            raise ValueError("records were produced under different schedules")
    magnitudes = {b.label: float(abs(records[0].values[b.label][0])) for b in schedule.blocks}
    sums = {
        b.label: np.sum([np.sign(r.values[b.label]).astype(np.int64) for r in records], axis=0)
        for b in schedule.blocks
    }
    return _from_sums(schedule, len(records), sums, magnitudes)


def _discriminator(estimate, delta):
    delta = delta or estimate.schedule.delta
    if delta is None:
        raise ValueError("no discriminator smoothness: schedule carries none and none was given")
    return SobolevParams(delta.smoothness, 1.0)


def private_risk(estimate, truth, truth_params, delta=None):
    """
    head = d(f-hat_J, f restricted to the truth table), exact; tail =
    R * J_max^-(beta+delta) bounds what lies beyond the table.
    """
    if truth.d != estimate.coefficients.d:
        raise ValueError(f"truth dimension {truth.d} does not match estimate dimension {estimate.coefficients.d}")
    if any(t < e for t, e in zip(truth.bound, estimate.schedule.bounds)):
        raise ValueError(f"truth table bound {truth.bound} does not cover the estimate bound {estimate.schedule.bounds}")
    disc = _discriminator(estimate, delta)
    head = adversarial_distance(estimate.coefficients - truth, disc)
    tail = analytic_tail_bound(truth_params.radius, min(truth.bound), truth_params.effective, disc.effective)
    return RiskInterval(head, tail)


def variance_distance(estimate, truth, delta=None):
    """d(f-hat_J, f_J): the truth restricted to the estimate's own index set."""
    disc = _discriminator(estimate, delta)
    indices, _ = estimate.coefficients.as_arrays()
    projected = truth.restrict([tuple(j) for j in indices], estimate.schedule.bounds)
    return adversarial_distance(estimate.coefficients - projected, disc)


def tau(A, d):
    """tau_{A,d} = 2 sqrt(2^d / d) A (e^A + 1) / (e^A - 1)."""
    return 2.0 * math.sqrt(2.0 ** d / d) * xi(A)


def variance_bound(schedule, n, A=1.0):
    """tau_{A,d} Sigma_J, bound on E d(f-hat_J, f_J) for the block mechanism."""
    if schedule.kind == "global":
        raise ValueError("variance_bound applies to dyadic schedules; use global_variance_bound")
    return tau(A, schedule.d) * sigma_closed_form(schedule, n)


def global_variance_bound(schedule, n, A=1.0):
    """C_{A,d} Sigma~_J with C_{A,d} = 2 xi_A B_0, for the global mechanism."""
    schedule.require_allocated()
    if schedule.delta is None:
        raise ValueError("schedule carries no discriminator smoothness")
    c = 2.0 * xi(A) * basis_bound(schedule.d)
    return c * global_variance_proxy(schedule.J, schedule.d, n, schedule.alpha, schedule.delta.effective)

