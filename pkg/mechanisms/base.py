import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

import streams
from blocks import Block, BlockSchedule
from config import DEFAULT_CHUNK_SIZE
from fourier import basis_matrix
from .channel import ChannelParams, channel_params, privatize_block, sample_block

logger = logging.getLogger(__name__)

Label = Tuple[int, ...]


@dataclass(frozen=True)
class PrivatizedRecord:
    """The private view of one individual: released values per block."""
    schedule: BlockSchedule
    values: Dict[Label, np.ndarray]

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.values[b.label] for b in self.schedule.blocks])


@dataclass
class PrivatizedDataset:
    """
    Private views of n records. Values are stored as int8 signs per block
    with one magnitude per block (Z = sign * B_k(a)), plus provenance.
    """
    schedule: BlockSchedule
    signs: Dict[Label, np.ndarray]
    magnitudes: Dict[Label, float]
    root_seed: int = 0
    key: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        sizes = {s.shape[0] for s in self.signs.values()}
        if len(sizes) > 1:
            raise ValueError(f"blocks disagree on the number of records: {sorted(sizes)}")
        for b in self.schedule.blocks:
            if b.label not in self.signs:
                raise ValueError(f"dataset has no values for block {b.label}")
            if self.signs[b.label].ndim != 2 or self.signs[b.label].shape[1] != b.size:
                raise ValueError(f"block {b.label} values do not have width {b.size}")

    @property
    def n(self) -> int:
        return int(next(iter(self.signs.values())).shape[0])

    def values(self, label: Sequence[int]) -> np.ndarray:
        label = tuple(label)
        return self.signs[label].astype(float) * self.magnitudes[label]

    def record(self, i: int) -> PrivatizedRecord:
        return PrivatizedRecord(
            self.schedule,
            {b.label: self.signs[b.label][i].astype(float) * self.magnitudes[b.label] for b in self.schedule.blocks},
        )


@dataclass(frozen=True)
class SignSums:
    """Per-block column sums of the output signs; enough to aggregate. Keeps the stream provenance."""
    schedule: BlockSchedule
    n: int
    sums: Dict[Label, np.ndarray]
    magnitudes: Dict[Label, float]
    root_seed: Optional[int] = None
    key: Tuple[int, ...] = ()


class PrivacyMechanism:
    """
    Base class for mechanisms that privatize the basis coefficients of a
    point block by block over an allocated schedule.
    """
    name = "base"
    kind = None

    def __init__(self, schedule: BlockSchedule):
        schedule.require_allocated()
        if self.kind is not None and schedule.kind != self.kind:
            raise ValueError(f"{type(self).__name__} needs a {self.kind} schedule, got {schedule.kind}")
        self.schedule = schedule
        self.channels = {
            b.label: channel_params(b.size, b.budget, schedule.d) for b in schedule.blocks
        }

    def channel(self, label: Sequence[int]) -> ChannelParams:
        return self.channels[tuple(label)]

    def _block_phi(self, points: np.ndarray, block: Block) -> np.ndarray:
        return basis_matrix(points, block.indices())

    def privatize_record(self, x, rng: np.random.Generator) -> PrivatizedRecord:
        """Privatize one point; each block is handled independently with its own budget."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        values = {}
        for b in self.schedule.blocks:
            values[b.label] = privatize_block(self._block_phi(x, b)[0], self.channels[b.label], rng)
        return PrivatizedRecord(self.schedule, values)

    def _iter_chunks(self, points, root_seed: int, key: Sequence[int],
                     chunk_size: int) -> Iterator[Tuple[Label, int, np.ndarray]]:
        """
        Yields (label, start, signs) for every block of every chunk of
        consecutive records. Each (block, chunk) pair draws from its own stream.
        """
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if chunk_size < 1:
            raise ValueError(f"chunk size must be >= 1, got {chunk_size}")
        n = points.shape[0]
        for b in self.schedule.blocks:
            params = self.channels[b.label]
            for chunk, start in enumerate(range(0, n, chunk_size)):
                rng = streams.derive_stream(root_seed, streams.PRIVATIZE, tuple(key), b.label, chunk)
                phi = self._block_phi(points[start:start + chunk_size], b)
                yield b.label, start, sample_block(phi, params, rng)

    def privatize_dataset(self, points, root_seed: int, key: Sequence[int] = (),
                          chunk_size: int = DEFAULT_CHUNK_SIZE) -> PrivatizedDataset:
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        n = points.shape[0]
        if n < 1:
            raise ValueError("cannot privatize an empty dataset")
        signs = {b.label: np.empty((n, b.size), dtype=np.int8) for b in self.schedule.blocks}
        for label, start, block_signs in self._iter_chunks(points, root_seed, key, chunk_size):
            signs[label][start:start + block_signs.shape[0]] = block_signs
        logger.debug("%s: privatized %d records over %d blocks", self.name, n, len(signs))
        return PrivatizedDataset(
            schedule=self.schedule,
            signs=signs,
            magnitudes={label: c.magnitude for label, c in self.channels.items()},
            root_seed=int(root_seed),
            key=tuple(int(k) for k in key),
        )

    def privatize_sums(self, points, root_seed: int, key: Sequence[int] = (),
                       chunk_size: int = DEFAULT_CHUNK_SIZE) -> SignSums:
        """Same draws as privatize_dataset, reduced on the fly to per-block sign sums."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        n = points.shape[0]
        if n < 1:
            raise ValueError("cannot privatize an empty dataset")
        sums = {b.label: np.zeros(b.size, dtype=np.int64) for b in self.schedule.blocks}
        for label, _, block_signs in self._iter_chunks(points, root_seed, key, chunk_size):
            sums[label] += block_signs.sum(axis=0, dtype=np.int64)
        return SignSums(
            schedule=self.schedule,
            n=n,
            sums=sums,
            magnitudes={label: c.magnitude for label, c in self.channels.items()},
            root_seed=int(root_seed),
            key=tuple(int(k) for k in key),
        )
