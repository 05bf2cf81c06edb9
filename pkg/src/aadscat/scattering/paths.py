"""Scattering path enumeration (which output channels exist, and in what order)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from .filterbank import ScatterConfig, filter_params


@dataclass(frozen=True)
class Path:
    order: int
    lambda1: Optional[float] = None  # Hz
    lambda2: Optional[float] = None  # Hz
    k1: Optional[int] = None         # index into the first-layer bank
    k2: Optional[int] = None         # index into the second-layer bank

    def label(self) -> str:
        if self.order == 0:
            return "S0"
        if self.order == 1:
            return f"S1[{self.lambda1:.6g}]"
        return f"S2[{self.lambda1:.6g},{self.lambda2:.6g}]"

    def as_dict(self) -> dict:
        return {"order": self.order, "lambda1": self.lambda1, "lambda2": self.lambda2}


@dataclass(frozen=True)
class PathTable:
    paths: Tuple[Path, ...]

    @property
    def counts(self) -> Tuple[int, int, int]:
        n = [0, 0, 0]
        for p in self.paths:
            n[p.order] += 1
        return tuple(n)

    @property
    def total(self) -> int:
        return len(self.paths)

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)

    def as_list(self) -> List[dict]:
        return [p.as_dict() for p in self.paths]


def admissible(j1: int, j2: int) -> bool:
    """A second-order path is kept when the second wavelet is strictly coarser.

    ``j`` is the dyadic subsampling a wavelet's band tolerates. Requiring
    ``j2 > j1`` keeps only second-layer wavelets whose band lies below the
    bandwidth of the first-layer envelope; the others would see (almost) no
    energy.
    """
    return j2 > j1


def enumerate_paths(config: ScatterConfig) -> PathTable:
    """Paths ordered by order, then descending lambda1, then descending lambda2."""
    rate = config.input_rate
    xi1, _, j1s = filter_params(config.Q, config.J)
    xi2, _, j2s = filter_params(config.Q2, config.J)
    paths = [Path(0)]
    paths += [Path(1, x * rate, None, k1) for k1, x in enumerate(xi1)]
    for k1, (x1, j1) in enumerate(zip(xi1, j1s)):
        for k2, (x2, j2) in enumerate(zip(xi2, j2s)):
            if admissible(j1, j2):
                paths.append(Path(2, x1 * rate, x2 * rate, k1, k2))
    return PathTable(tuple(paths))
