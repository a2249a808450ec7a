"""
Exact privacy audit of small-block channels by enumeration of every
output sign pattern.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from blocks import BlockSchedule
from fourier import basis_matrix
from .channel import MAX_ENUMERATION, ChannelParams, channel_params, channel_pmf_batch, sign_patterns

logger = logging.getLogger(__name__)

TOLERANCE = 1e-10


@dataclass(frozen=True)
class BlockAudit:
    label: Tuple[int, ...]
    size: int
    budget: float
    max_log_ratio: float
    max_log_ratio_points: float

    @property
    def passed(self) -> bool:
        return self.max_log_ratio <= self.budget + TOLERANCE


@dataclass(frozen=True)
class LdpReport:
    alpha: float
    total_budget: float
    blocks: Tuple[BlockAudit, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.total_budget <= self.alpha + TOLERANCE and all(b.passed for b in self.blocks)

    @property
    def max_excess(self) -> float:
        return max((b.max_log_ratio - b.budget for b in self.blocks), default=0.0)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "total_budget": self.total_budget,
            "passed": self.passed,
            "blocks": [
                {
                    "label": list(b.label),
                    "size": b.size,
                    "budget": b.budget,
                    "max_log_ratio": b.max_log_ratio,
                    "max_log_ratio_points": b.max_log_ratio_points,
                    "passed": b.passed,
                }
                for b in self.blocks
            ],
        }


def max_log_ratio(params: ChannelParams, phis) -> float:
    """max over outputs z and input pairs of log P(z | phi) - log P(z | phi')."""
    phis = np.asarray(phis, dtype=float)
    if phis.shape[0] < 1:
        return 0.0
    with np.errstate(divide="ignore"):
        logs = np.log(channel_pmf_batch(params, phis))
    return float(np.max(logs.max(axis=0) - logs.min(axis=0)))


def verify_block(params: ChannelParams, phis=None, include_vertices: bool = True) -> float:
    """
    Worst log-ratio of one channel over the given inputs and, optionally,
    every vertex of [-B_0, B_0]^k (where the ratio is largest).
    """
    inputs = []
    if phis is not None:
        inputs.append(np.asarray(phis, dtype=float).reshape(-1, params.k))
    if include_vertices:
        inputs.append(sign_patterns(params.k).astype(float) * params.b0)
    if not inputs:
        raise ValueError("no inputs to audit")
    return max_log_ratio(params, np.concatenate(inputs, axis=0))


def verify_ldp(schedule: BlockSchedule, points, overrides: Optional[Dict[Tuple[int, ...], ChannelParams]] = None,
               include_vertices: bool = True) -> LdpReport:
    """
    Audit every block of an allocated schedule: exact channel PMFs at the
    basis values of `points` (and at the cube vertices) against alpha_l.

    `overrides` replaces the channel of selected blocks, e.g. to run a
    corrupted channel as a negative control.
    """
    schedule.require_allocated()
    oversize = [b.label for b in schedule.blocks if b.size > MAX_ENUMERATION]
    if oversize:
        raise ValueError(f"blocks {oversize} exceed the enumerable size {MAX_ENUMERATION}")
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, schedule.d)
    overrides = overrides or {}
    audits = []
    for b in schedule.blocks:
        params = overrides.get(b.label) or channel_params(b.size, b.budget, schedule.d)
        phis = basis_matrix(points, b.indices())
        at_points = max_log_ratio(params, phis)
        worst = max(at_points, verify_block(params, None)) if include_vertices else at_points
        audits.append(BlockAudit(b.label, b.size, b.budget, worst, at_points))
        logger.debug("block %s: max log ratio %.6g vs budget %.6g", b.label, worst, b.budget)
    total = float(sum(b.budget for b in schedule.blocks))
    return LdpReport(alpha=float(schedule.alpha), total_budget=total, blocks=tuple(audits))


def corrupted_pi(params: ChannelParams, factor: float = 2.0) -> ChannelParams:
    """The same channel with pi set to e^(f a) / (1 + e^(f a))."""
    return replace(params, pi=float(expit(factor * params.a)))


def corrupted_overrides(schedule: BlockSchedule, factor: float = 2.0,
                        labels: Optional[Sequence[Tuple[int, ...]]] = None):
    labels = [b.label for b in schedule.blocks] if labels is None else [tuple(l) for l in labels]
    return {
        b.label: corrupted_pi(channel_params(b.size, b.budget, schedule.d), factor)
        for b in schedule.blocks if b.label in labels
    }
