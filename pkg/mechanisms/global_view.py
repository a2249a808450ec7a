from typing import Optional

import numpy as np

from blocks import single_block
from entities import SobolevParams
from .base import PrivacyMechanism, PrivatizedRecord


class CoordinateGlobalMechanism(PrivacyMechanism):
    """
    All J^d coefficients privatized at once as a single block with the
    whole budget. Kept as the comparator for the block mechanism.
    """
    name = "global"
    kind = "global"

    @classmethod
    def build(cls, J: int, d: int, alpha: float, delta: Optional[SobolevParams] = None) -> "CoordinateGlobalMechanism":
        return cls(single_block((int(J),) * int(d), alpha, delta))


def global_privatize(x, J: int, d: int, alpha: float, rng: np.random.Generator) -> PrivatizedRecord:
    return CoordinateGlobalMechanism.build(J, d, alpha).privatize_record(x, rng)
