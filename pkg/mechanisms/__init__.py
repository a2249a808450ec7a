# Privacy mechanisms sharing the PrivacyMechanism base class
from .base import PrivacyMechanism, PrivatizedDataset, PrivatizedRecord, SignSums
from .block import CoordinateBlockMechanism, privatize_record
from .global_view import CoordinateGlobalMechanism, global_privatize

MECHANISMS = {
    CoordinateBlockMechanism.name: CoordinateBlockMechanism,
    CoordinateGlobalMechanism.name: CoordinateGlobalMechanism,
}
