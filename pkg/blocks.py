"""
Dyadic block partitions of the index set {1..J_1} x ... x {1..J_d} and the
privacy budget allocation across blocks.
"""
import hashlib
import itertools
import json
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from entities import SobolevParams, dyadic_level

logger = logging.getLogger(__name__)

ANISOTROPY_TOL = 1e-9
REGIMES = ("sub", "critical", "super", "mixed")


@dataclass(frozen=True)
class Block:
    """A box of indices prod_m {lower_m .. upper_m} with its own budget."""
    label: Tuple[int, ...]
    lower: Tuple[int, ...]
    upper: Tuple[int, ...]
    budget: Optional[float] = None

    @property
    def d(self) -> int:
        return len(self.lower)

    @property
    def size(self) -> int:
        return int(np.prod([u - l + 1 for l, u in zip(self.lower, self.upper)]))

    def indices(self) -> np.ndarray:
        """(size, d) integer array of the block's indices in lexicographic order."""
        shape = [u - l + 1 for l, u in zip(self.lower, self.upper)]
        grid = np.indices(shape).reshape(self.d, -1).T
        return grid + np.asarray(self.lower, dtype=np.int64)

    def contains(self, j: Sequence[int]) -> bool:
        return all(l <= jm <= u for jm, l, u in zip(j, self.lower, self.upper))

    def to_json(self) -> dict:
        return {
            "label": list(self.label),
            "lower": list(self.lower),
            "upper": list(self.upper),
            "budget": self.budget,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Block":
        return cls(tuple(obj["label"]), tuple(obj["lower"]), tuple(obj["upper"]), obj.get("budget"))


@dataclass(frozen=True)
class BlockSchedule:
    """
    A partition of prod_m {1..J_m} into blocks, optionally with budgets.

    kind is "dyadic" for the block mechanism and "global" for the single
    block covering everything.
    """
    d: int
    bounds: Tuple[int, ...]
    blocks: Tuple[Block, ...]
    alpha: Optional[float] = None
    delta: Optional[SobolevParams] = None
    kind: str = "dyadic"

    @property
    def allocated(self) -> bool:
        return self.alpha is not None and all(b.budget is not None for b in self.blocks)

    @property
    def levels(self) -> Tuple[int, ...]:
        return tuple(dyadic_level(J) for J in self.bounds)

    @property
    def J(self) -> int:
        """Common per-axis bound; only defined for isotropic schedules."""
        if len(set(self.bounds)) != 1:
            raise ValueError(f"schedule has per-axis bounds {self.bounds}, no single J")
        return self.bounds[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.bounds))

    def indices(self) -> np.ndarray:
        """All indices, concatenated block by block."""
        return np.concatenate([b.indices() for b in self.blocks], axis=0)

    def block(self, label: Sequence[int]) -> Block:
        label = tuple(label)
        for b in self.blocks:
            if b.label == label:
                return b
        raise ValueError(f"no block with label {label}")

    def require_allocated(self):
        if not self.allocated:
            raise ValueError("schedule budgets are not allocated; call allocate_budget first")

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "kind": self.kind,
            "bounds": list(self.bounds),
            "alpha": self.alpha,
            "delta": self.delta.to_json() if self.delta is not None else None,
            "blocks": [b.to_json() for b in self.blocks],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BlockSchedule":
        delta = SobolevParams.from_json(obj["delta"]) if obj.get("delta") else None
        return cls(
            d=obj["d"],
            bounds=tuple(obj["bounds"]),
            blocks=tuple(Block.from_json(b) for b in obj["blocks"]),
            alpha=obj.get("alpha"),
            delta=delta,
            kind=obj.get("kind", "dyadic"),
        )

    def hash(self) -> str:
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def summary(self) -> str:
        lines = [
            "=" * 70,
            f"--- BLOCK SCHEDULE ({self.kind}, d={self.d}, J={self.bounds}) ---",
            "=" * 70,
            f"{'Block':<20} | {'Size':>10} | {'Budget':>14}",
            "-" * 70,
        ]
        for b in self.blocks:
            budget = f"{b.budget:.6g}" if b.budget is not None else "-"
            lines.append(f"{str(b.label):<20} | {b.size:>10} | {budget:>14}")
        lines.append("-" * 70)
        total = f"{self.alpha:.6g}" if self.alpha is not None else "-"
        lines.append(f"{'Total':<20} | {self.size:>10} | {total:>14}")
        return "\n".join(lines)


def _dyadic_blocks(levels: Sequence[int]) -> Tuple[Block, ...]:
    blocks = []
    for label in itertools.product(*[range(L + 1) for L in levels]):
        lower = tuple(2 ** l for l in label)
        upper = tuple(2 ** (l + 1) - 1 for l in label)
        blocks.append(Block(tuple(label), lower, upper))
    return tuple(blocks)


def dyadic_partition(J: int, d: int) -> BlockSchedule:
    """Isotropic partition of {1..J}^d into (L+1)^d dyadic blocks, J = 2^(L+1) - 1."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    L = dyadic_level(J)
    return BlockSchedule(d=int(d), bounds=(int(J),) * int(d), blocks=_dyadic_blocks([L] * int(d)))


def _check_anisotropy(beta: SobolevParams, delta: SobolevParams):
    if beta.d != delta.d:
        raise ValueError(f"beta has dimension {beta.d}, delta has dimension {delta.d}")
    b_bar, d_bar = beta.effective, delta.effective
    for b_m, d_m in zip(beta.smoothness, delta.smoothness):
        if abs(b_bar / b_m - d_bar / d_m) > ANISOTROPY_TOL:
            raise ValueError(
                f"beta={beta.smoothness} and delta={delta.smoothness} do not share the same anisotropy"
            )


def anisotropic_partition(J: int, beta: SobolevParams, delta: SobolevParams) -> BlockSchedule:
    """
    Per-axis dyadic partition with L_m = floor(log2(J^(beta/beta_m) + 1)) - 1,
    which gives (J^(beta/beta_m) - 1) / 2 < J_m <= J^(beta/beta_m).
    """
    if J < 1:
        raise ValueError(f"J must be >= 1, got {J}")
    _check_anisotropy(beta, delta)
    b_bar = beta.effective
    levels = [
        int(math.floor(math.log2(float(J) ** (b_bar / b_m) + 1.0) + 1e-12)) - 1
        for b_m in beta.smoothness
    ]
    bounds = tuple(2 ** (L + 1) - 1 for L in levels)
    return BlockSchedule(d=beta.d, bounds=bounds, blocks=_dyadic_blocks(levels))


def single_block(bounds: Sequence[int], alpha: Optional[float] = None,
                 delta: Optional[SobolevParams] = None) -> BlockSchedule:
    """The whole index set as one block, the layout of the global mechanism."""
    bounds = tuple(int(b) for b in bounds)
    if min(bounds) < 1:
        raise ValueError(f"bounds must be >= 1, got {bounds}")
    block = Block((0,) * len(bounds), (1,) * len(bounds), bounds, alpha)
    return BlockSchedule(d=len(bounds), bounds=bounds, blocks=(block,), alpha=alpha, delta=delta, kind="global")


def block_weight(block: Block, delta: SobolevParams) -> float:
    """w = prod_m 2^(l_m (1 - delta_m/d) / 2); isotropic case d_l^((1 - delta/d)/2)."""
    d = block.d
    return float(math.prod(2.0 ** (l * (1.0 - s / d) / 2.0) for l, s in zip(block.label, delta.smoothness)))


def S_value(schedule: BlockSchedule, delta: SobolevParams) -> float:
    if schedule.kind == "global":
        return 1.0
    return float(sum(block_weight(b, delta) for b in schedule.blocks))


def allocate_budget(schedule: BlockSchedule, alpha: float, delta: SobolevParams) -> BlockSchedule:
    """alpha_l = alpha * w_l / S; the budgets sum to alpha."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if delta.d != schedule.d:
        raise ValueError(f"delta has dimension {delta.d}, schedule has dimension {schedule.d}")
    if schedule.kind == "global":
        blocks = (replace(schedule.blocks[0], budget=float(alpha)),)
    else:
        S = S_value(schedule, delta)
        blocks = tuple(replace(b, budget=float(alpha) * block_weight(b, delta) / S) for b in schedule.blocks)
    return replace(schedule, blocks=blocks, alpha=float(alpha), delta=delta)


def sigma_terms(schedule: BlockSchedule, n: int) -> Tuple[Tuple[float, ...], float]:
    """Per-block sigma_l = w_l^2 / (sqrt(n) alpha_l) and their sum Sigma_J."""
    schedule.require_allocated()
    if schedule.kind == "global":
        raise ValueError("sigma terms are defined for dyadic schedules; use global_variance_proxy")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    sigmas = tuple(
        block_weight(b, schedule.delta) ** 2 / (math.sqrt(n) * b.budget) for b in schedule.blocks
    )
    return sigmas, float(math.fsum(sigmas))


def sigma_closed_form(schedule: BlockSchedule, n: int) -> float:
    """Sigma_J = S^2 / sqrt(n alpha^2)."""
    schedule.require_allocated()
    S = S_value(schedule, schedule.delta)
    return S ** 2 / math.sqrt(n * schedule.alpha ** 2)


def _dyadic_floor(target: float) -> int:
    if target < 1.0:
        return 1
    return max(1, 2 ** int(math.floor(math.log2(target + 1.0) + 1e-12)) - 1)


def regime(delta: SobolevParams, threshold: float) -> str:
    """Classify each delta_m against the threshold (d for blocks, d/2 for global)."""
    tags = set()
    for s in delta.smoothness:
        if math.isclose(s, threshold, rel_tol=1e-12, abs_tol=1e-12):
            tags.add("critical")
        elif s < threshold:
            tags.add("sub")
        else:
            tags.add("super")
    return tags.pop() if len(tags) == 1 else "mixed"


def _check_n_alpha(n: int, alpha: float) -> float:
    n_alpha2 = float(n) * float(alpha) ** 2
    if not n_alpha2 > 1.0:
        raise ValueError(f"n*alpha^2 must exceed 1, got {n_alpha2}")
    return n_alpha2


def theoretical_J(n: int, alpha: float, beta: SobolevParams, delta: SobolevParams) -> Tuple[int, str]:
    """
    Rate-optimal J for the block mechanism, rounded down to the dyadic
    grid, with its regime tag. Anisotropic inputs use effective smoothness.
    """
    n_alpha2 = _check_n_alpha(n, alpha)
    d = beta.d
    b, s = beta.effective, delta.effective
    tag = regime(delta, d)
    effective_tag = tag if tag != "mixed" else regime(SobolevParams.isotropic(s, d), d)
    if effective_tag == "sub":
        target = n_alpha2 ** (1.0 / (2 * b + 2 * d))
    elif effective_tag == "critical":
        target = (n_alpha2 / math.log(n_alpha2) ** (4 * d)) ** (1.0 / (2 * b + 2 * s))
    else:
        target = n_alpha2 ** (1.0 / (2 * b + 2 * s))
    J = _dyadic_floor(target)
    logger.debug("theoretical J: target=%.4f -> J=%d (%s)", target, J, tag)
    return J, tag


def global_theoretical_J(n: int, alpha: float, beta: SobolevParams, delta: SobolevParams) -> Tuple[int, str]:
    """Rate-optimal J for the global mechanism; the regime threshold is delta = d/2."""
    n_alpha2 = _check_n_alpha(n, alpha)
    d = beta.d
    b, s = beta.effective, delta.effective
    tag = regime(delta, d / 2.0)
    effective_tag = tag if tag != "mixed" else regime(SobolevParams.isotropic(s, d), d / 2.0)
    if effective_tag == "sub":
        target = n_alpha2 ** (1.0 / (2 * b + 2 * d))
    elif effective_tag == "critical":
        target = (n_alpha2 / math.log(n_alpha2) ** d) ** (1.0 / (2 * b + 2 * s + d))
    else:
        target = n_alpha2 ** (1.0 / (2 * b + 2 * s + d))
    return max(1, int(math.floor(target + 1e-12))), tag


def global_variance_proxy(J: int, d: int, n: int, alpha: float, delta: float) -> float:
    """(J * S~)^(d/2) / sqrt(n alpha^2) with S~ = sum_{j<=J} j^(-2 delta/d)."""
    s_tilde = float(np.sum(np.arange(1, int(J) + 1, dtype=float) ** (-2.0 * delta / d)))
    return (J * s_tilde) ** (d / 2.0) / math.sqrt(n * alpha ** 2)
