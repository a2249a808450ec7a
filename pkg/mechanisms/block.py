import numpy as np

from blocks import BlockSchedule, allocate_budget, dyadic_partition
from entities import SobolevParams
from .base import PrivacyMechanism, PrivatizedRecord


class CoordinateBlockMechanism(PrivacyMechanism):
    """
    Privatizes each dyadic block of coefficients independently, block l
    spending its share alpha_l of the total budget.
    """
    name = "block"
    kind = "dyadic"

    @classmethod
    def build(cls, J: int, d: int, alpha: float, delta: SobolevParams) -> "CoordinateBlockMechanism":
        return cls(allocate_budget(dyadic_partition(J, d), alpha, delta))


def privatize_record(x, schedule: BlockSchedule, rng: np.random.Generator) -> PrivatizedRecord:
    return CoordinateBlockMechanism(schedule).privatize_record(x, rng)
