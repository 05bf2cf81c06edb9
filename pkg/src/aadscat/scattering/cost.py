"""FLOP and latency accounting for the scattering transform.

The count follows the schedule implemented in :mod:`.transform`, operation by
operation, with these unit costs:

* complex FFT or inverse FFT of length n: ``5 n log2 n``
* FFT of a real signal of length n: half of that (what ``rfft`` does)
* one complex multiply-accumulate of a spectral bin: 8
* complex modulus: 4 per sample (two multiplies, one add, one square root)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from .filterbank import ScatterConfig, build_filterbank
from .paths import enumerate_paths

CMAC = 8
MODULUS = 4


def fft_flops(n: int) -> float:
    return 5.0 * n * math.log2(n) if n > 1 else 0.0


def rfft_flops(n: int) -> float:
    return fft_flops(n) / 2


@dataclass(frozen=True)
class CostReport:
    flops_per_second_window: float
    lag_seconds: float
    channels: Tuple[int, int, int, int]
    breakdown: dict

    @property
    def total_channels(self) -> int:
        return self.channels[3]


def lag_seconds(F_o: float) -> float:
    """Delay of the averaging filter: half of its ``8 / F_o`` second support."""
    return 4.0 / F_o


def estimate_cost(config: ScatterConfig) -> CostReport:
    """FLOPs to scatter one second of one channel, plus lag and channel counts."""
    fb = build_filterbank(config)
    paths = enumerate_paths(config)
    n = config.padded_len
    nout = n >> config.J

    def average(m):
        return CMAC * len(fb.phi_on[m][0]) + fft_flops(nout)

    def band(b):
        # product on the support, inverse FFT of the band, modulus, rfft of the envelope
        return CMAC * b.idx.size + fft_flops(b.m) + MODULUS * b.m + rfft_flops(b.m)

    parts = {"input_fft": rfft_flops(n), "order0": average(n), "order1": 0.0, "order2": 0.0}
    for b1 in fb.psi1_bands:
        parts["order1"] += band(b1) + average(b1.m)
    for p in paths:
        if p.order == 2:
            b2 = fb.psi2_on[(p.k2, fb.psi1_bands[p.k1].m)]
            parts["order2"] += band(b2) + average(b2.m)
    per_segment = sum(parts.values())
    scale = 1.0 / config.segment_seconds
    n0, n1, n2 = paths.counts
    return CostReport(per_segment * scale, lag_seconds(config.F_o), (n0, n1, n2, n0 + n1 + n2),
                      {k: v * scale for k, v in parts.items()})
