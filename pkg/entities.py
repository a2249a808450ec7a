"""
Core value types shared by every module: Fourier multi-indices, Sobolev
smoothness parameters and sparse coefficient tables.
"""
import math
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np


class MultiIndex(tuple):
    """A Fourier index j = (j_1, ..., j_d); every coordinate is >= 1."""

    def __new__(cls, coords: Iterable[int]):
        values = []
        for c in coords:
            if int(c) != c:
                raise ValueError(f"MultiIndex coordinates must be integers, got {c!r}")
            values.append(int(c))
        if not values:
            raise ValueError("MultiIndex needs at least one coordinate")
        if min(values) < 1:
            raise ValueError(f"MultiIndex coordinates must be >= 1, got {tuple(values)}")
        return super().__new__(cls, values)

    @property
    def d(self) -> int:
        return len(self)

    @classmethod
    def ones(cls, d: int) -> "MultiIndex":
        return cls((1,) * d)


@dataclass(frozen=True)
class SobolevParams:
    """
    Smoothness (one value per axis) and radius of a Sobolev ball.

    Isotropic balls repeat the same smoothness on every axis. The
    effective smoothness of an anisotropic ball is the harmonic mean
    1/beta = (1/d) * sum(1/beta_m).
    """
    smoothness: Tuple[float, ...]
    radius: float = 1.0

    def __post_init__(self):
        smoothness = tuple(float(s) for s in self.smoothness)
        object.__setattr__(self, "smoothness", smoothness)
        if not smoothness:
            raise ValueError("SobolevParams needs at least one smoothness value")
        if min(smoothness) <= 0:
            raise ValueError(f"smoothness must be positive, got {smoothness}")
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")

    @classmethod
    def isotropic(cls, smoothness: float, d: int, radius: float = 1.0) -> "SobolevParams":
        return cls((float(smoothness),) * int(d), float(radius))

    @property
    def d(self) -> int:
        return len(self.smoothness)

    @property
    def is_isotropic(self) -> bool:
        return len(set(self.smoothness)) == 1

    @property
    def effective(self) -> float:
        return self.d / sum(1.0 / s for s in self.smoothness)

    def require_density_class(self):
        """A ball can only hold densities when R^2 >= d."""
        if self.radius ** 2 < self.d:
            raise ValueError(
                f"W(R) with R={self.radius} holds no density in dimension {self.d} (needs R^2 >= d)"
            )

    def to_json(self) -> dict:
        return {"smoothness": list(self.smoothness), "radius": self.radius}

    @classmethod
    def from_json(cls, obj: dict) -> "SobolevParams":
        return cls(tuple(obj["smoothness"]), obj.get("radius", 1.0))


class CoefficientTable:
    """
    Finitely supported Fourier coefficients theta_j.

    Entries live in a private dict keyed by index tuples; looking up
    an index that is absent returns exactly 0.0. `bound` is the declared
    support bound per axis and every stored index lies inside it.
    """

    def __init__(self, d: int, entries: Optional[Dict[Sequence[int], float]] = None,
                 bound: Optional[Sequence[int]] = None):
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        self.d = int(d)
        clean = {}
        for j, theta in (entries or {}).items():
            idx = MultiIndex(j)
            if idx.d != self.d:
                raise ValueError(f"index {tuple(idx)} does not have dimension {self.d}")
            clean[tuple(idx)] = float(theta)
        if bound is None:
            bound = tuple(max([j[m] for j in clean] or [1]) for m in range(self.d))
        bound = tuple(int(b) for b in bound)
        if len(bound) != self.d:
            raise ValueError(f"bound {bound} does not have dimension {self.d}")
        for j in clean:
            if any(j[m] > bound[m] for m in range(self.d)):
                raise ValueError(f"index {j} lies outside the declared bound {bound}")
        self.bound = bound
        self._entries = dict(sorted(clean.items()))

    # --- construction helpers ---

    @classmethod
    def from_arrays(cls, indices: np.ndarray, values: np.ndarray,
                    bound: Optional[Sequence[int]] = None) -> "CoefficientTable":
        indices = np.asarray(indices, dtype=np.int64)
        if indices.ndim != 2:
            raise ValueError("indices must be a 2-D array of shape (m, d)")
        values = np.asarray(values, dtype=float)
        entries = {tuple(int(c) for c in row): float(v) for row, v in zip(indices, values)}
        return cls(indices.shape[1], entries, bound)

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> "CoefficientTable":
        """Build from a dense array whose axis m holds j_m = 1..J_m."""
        dense = np.asarray(dense, dtype=float)
        grid = np.indices(dense.shape).reshape(dense.ndim, -1).T + 1
        return cls.from_arrays(grid, dense.ravel(), bound=dense.shape)

    # --- mapping behaviour ---

    def __getitem__(self, j: Sequence[int]) -> float:
        return self._entries.get(tuple(j), 0.0)

    def __contains__(self, j) -> bool:
        return tuple(j) in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Tuple[int, ...]]:
        return iter(self._entries)

    def items(self):
        return self._entries.items()

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoefficientTable):
            return NotImplemented
        return self.d == other.d and self.bound == other.bound and dict(self.items()) == dict(other.items())

    def __repr__(self) -> str:
        return f"CoefficientTable(d={self.d}, bound={self.bound}, entries={len(self)})"

    def as_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """Index matrix (m, d) and value vector (m,), in sorted index order."""
        if not self._entries:
            return np.zeros((0, self.d), dtype=np.int64), np.zeros(0)
        indices = np.array(list(self._entries.keys()), dtype=np.int64)
        values = np.fromiter(self._entries.values(), dtype=float, count=len(self._entries))
        return indices, values

    # --- algebra ---

    def _combine(self, other: "CoefficientTable", sign: float) -> "CoefficientTable":
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        out = dict(self._entries)
        for j, theta in other.items():
            out[j] = out.get(j, 0.0) + sign * theta
        bound = tuple(max(a, b) for a, b in zip(self.bound, other.bound))
        return CoefficientTable(self.d, out, bound)

    def __sub__(self, other: "CoefficientTable") -> "CoefficientTable":
        return self._combine(other, -1.0)

    def __add__(self, other: "CoefficientTable") -> "CoefficientTable":
        return self._combine(other, 1.0)

    def scaled(self, factor: float) -> "CoefficientTable":
        return CoefficientTable(self.d, {j: factor * t for j, t in self.items()}, self.bound)

    def truncate(self, bound: Sequence[int]) -> "CoefficientTable":
        """Keep the entries with j_m <= bound[m] on every axis."""
        bound = tuple(int(b) for b in bound)
        if len(bound) != self.d:
            raise ValueError(f"bound {bound} does not have dimension {self.d}")
        kept = {j: t for j, t in self.items() if all(j[m] <= bound[m] for m in range(self.d))}
        return CoefficientTable(self.d, kept, tuple(min(a, b) for a, b in zip(self.bound, bound)))

    def restrict(self, indices: Iterable[Sequence[int]], bound: Optional[Sequence[int]] = None) -> "CoefficientTable":
        """Entries on an explicit index set; indices absent here become explicit zeros."""
        return CoefficientTable(self.d, {tuple(j): self[j] for j in indices}, bound or self.bound)

    # --- serialization ---

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "bound": list(self.bound),
            "entries": [{"j": list(j), "theta": theta} for j, theta in self.items()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CoefficientTable":
        entries = {tuple(e["j"]): e["theta"] for e in obj["entries"]}
        return cls(obj["d"], entries, obj.get("bound"))


def uniform_density(d: int) -> CoefficientTable:
    """Coefficients of the uniform density on [0,1]^d."""
    return CoefficientTable(d, {(1,) * d: 1.0}, (1,) * d)


def is_power_of_two(value: int) -> bool:
    return value >= 1 and (value & (value - 1)) == 0


def dyadic_level(J: int) -> int:
    """L such that J = 2^(L+1) - 1; raises for J not of that form."""
    if int(J) != J or J < 1 or not is_power_of_two(int(J) + 1):
        raise ValueError(f"J={J} is not of the dyadic form 2^(L+1) - 1")
    return int(math.log2(int(J) + 1)) - 1
