"""Morlet filterbanks for the two-layer scattering transform.

Frequencies inside this module are normalized (cycles per input sample,
Nyquist = 0.5) unless a name ends in ``_hz``.

Layout of a bank with ``Q`` filters per octave and averaging scale ``2**J``:

* geometric region: centers ``xi_max * 2**(-k/Q)`` with constant-Q widths,
  continued while the width stays above the averaging width ``0.1 / 2**J``;
* linear region: ``Q - 1`` constant-width filters evenly spaced between the
  last geometric center and zero.

After the Gaussian bumps are laid out, every filter is multiplied by a common
real gain so that the Littlewood-Paley sum together with the low-pass equals
one on the whole grid (see :func:`tight_frame_gain`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple

import numpy as np

from ..sigkit import Spectrum, is_pow2, next_pow2

SIGMA0 = 0.1
R_PSI = math.sqrt(0.5)
ALPHA = 5.0
SUPPORT_EPS = 1e-3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScatterConfig:
    """Scattering parameters for one modality.

    ``input_rate / 2**J`` must equal the output frame rate ``F_o``.
    """

    Q: int
    J: int
    F_o: float
    input_rate: float
    segment_seconds: float = 1.0
    Q2: int = 1

    def __post_init__(self):
        if int(self.Q) != self.Q or self.Q < 1:
            raise ConfigError(f"Q must be an integer >= 1, got {self.Q}")
        if int(self.J) != self.J or self.J < 1:
            raise ConfigError(f"J must be an integer >= 1, got {self.J}")
        if self.input_rate / 2 ** self.J != self.F_o:
            raise ConfigError(
                f"input_rate / 2**J = {self.input_rate / 2 ** self.J} does not match F_o = {self.F_o}")
        n = self.input_rate * self.segment_seconds
        if n != int(n) or not is_pow2(int(n)):
            raise ConfigError(f"segment length {n} samples is not a power of two")

    @classmethod
    def from_rate(cls, Q: int, F_o: float, input_rate: float, segment_seconds: float = 1.0):
        """Derive ``J`` from the output rate: ``J = log2(input_rate / F_o)``."""
        ratio = input_rate / F_o
        J = int(round(math.log2(ratio)))
        if 2 ** J != ratio:
            raise ConfigError(f"input_rate / F_o = {ratio} is not a power of two")
        return cls(Q=Q, J=J, F_o=F_o, input_rate=input_rate, segment_seconds=segment_seconds)

    @property
    def segment_len(self) -> int:
        return int(self.input_rate * self.segment_seconds)

    @property
    def frames_per_segment(self) -> int:
        return self.segment_len >> self.J

    @property
    def phi_support(self) -> int:
        """Nominal length of the averaging filter, ``8 * 2**J`` samples."""
        return 8 << self.J

    @property
    def padded_len(self) -> int:
        return next_pow2(self.segment_len + self.phi_support)

    @property
    def pad_left(self) -> int:
        # half the padding, rounded down to whole output frames so that the
        # decimated grid lines up with the segment start
        half = (self.padded_len - self.segment_len) // 2
        return (half >> self.J) << self.J


# ---------------------------------------------------------------- parameters

def xi_max(Q: int) -> float:
    return max(1.0 / (1.0 + 2.0 ** (3.0 / Q)), 0.35)


def sigma_psi(xi: float, Q: int, r: float = R_PSI) -> float:
    """Width at which neighbours ``2**(1/Q)`` apart cross at amplitude ``r``."""
    factor = 2.0 ** (-1.0 / Q)
    return xi * (1 - factor) / (1 + factor) / math.sqrt(2 * math.log(1 / r))


def max_subsampling(xi: float, sigma: float, alpha: float = ALPHA) -> int:
    """Largest j with ``xi + alpha*sigma < 2**-(j+1)`` (the band fits after 2**j decimation)."""
    upper = min(xi + alpha * sigma, 0.5)
    return int(math.floor(-math.log2(upper))) - 1


def filter_params(Q: int, J: int) -> Tuple[List[float], List[float], List[int]]:
    """Center frequencies, widths and subsampling exponents of one bank."""
    sigma_min = SIGMA0 / 2 ** J
    x_top = xi_max(Q)
    s_top = sigma_psi(x_top, Q)
    xis: List[float] = []
    sigmas: List[float] = []
    if s_top <= sigma_min:
        # Even the top constant-Q filter is narrower than the averaging width.
        # Spread the constant-width filters evenly below Nyquist instead of
        # piling them up next to DC.
        elbow = 0.5
    else:
        xis.append(x_top)
        sigmas.append(s_top)
        step = 2.0 ** (1.0 / Q)
        while sigmas[-1] > sigma_min * step:
            xis.append(xis[-1] / step)
            sigmas.append(sigmas[-1] / step)
        elbow = xis[-1]
    for q in range(1, Q):
        xis.append(elbow - q / Q * elbow)
        sigmas.append(sigma_min)
    js = [max_subsampling(x, s) for x, s in zip(xis, sigmas)]
    return xis, sigmas, js


# ------------------------------------------------------------------ spectra

def _periodized_gaussian(n: int, center: float, sigma: float, periods: int = 3) -> np.ndarray:
    f = np.arange(n) / n
    out = np.zeros(n)
    for p in range(-periods, periods + 1):
        out += np.exp(-((f + p - center) ** 2) / (2 * sigma ** 2))
    return out


def morlet_hat(n: int, xi: float, sigma: float) -> np.ndarray:
    """Zero-mean Morlet spectrum on an n-point grid, peak normalized to sqrt(2)."""
    bump = _periodized_gaussian(n, xi, sigma)
    env = _periodized_gaussian(n, 0.0, sigma)
    psi = bump - bump[0] / env[0] * env
    return psi * (math.sqrt(2) / np.abs(psi).max())


def gaussian_lowpass_hat(n: int, sigma: float) -> np.ndarray:
    return _periodized_gaussian(n, 0.0, sigma)


def littlewood_paley(psi_hats, phi_hat) -> np.ndarray:
    """``|phi(w)|^2 + 1/2 sum(|psi(w)|^2 + |psi(-w)|^2)`` on the FFT grid."""
    psi_hats = np.asarray(psi_hats)
    p2 = np.abs(psi_hats) ** 2
    mirrored = np.roll(p2[:, ::-1], 1, axis=1)  # value at -w for every bin w
    return np.abs(phi_hat) ** 2 + 0.5 * (p2 + mirrored).sum(axis=0)


def tight_frame_gain(psi_hats, phi_hat, floor: float = 1e-12) -> np.ndarray:
    """Real, even gain making the Littlewood-Paley sum exactly one.

    Gaussian layouts leave ripples between neighbours and a dip above the top
    filter. Multiplying every wavelet by ``sqrt((1 - |phi|^2) / W)``, with W
    the wavelet part of the sum, removes both. Where neither the low-pass nor
    the wavelets reach (W below ``floor``) the gain is left at one.
    """
    psi_hats = np.asarray(psi_hats)
    p2 = np.abs(psi_hats) ** 2
    w = 0.5 * (p2 + np.roll(p2[:, ::-1], 1, axis=1)).sum(axis=0)
    target = np.clip(1.0 - np.abs(phi_hat) ** 2, 0.0, None)
    gain = np.ones_like(w)
    ok = w > floor
    gain[ok] = np.sqrt(target[ok] / w[ok])
    return gain


# ------------------------------------------------------------------- bands

def support_arc(hat: np.ndarray, eps: float = SUPPORT_EPS) -> Tuple[int, int]:
    """Smallest circular arc ``(start, width)`` holding every bin above ``eps * max``."""
    n = hat.shape[0]
    mag = np.abs(hat)
    idx = np.flatnonzero(mag >= eps * mag.max())
    if idx.size == 0:
        return 0, 0
    if idx.size == 1:
        return int(idx[0]), 1
    gaps = np.diff(np.r_[idx, idx[0] + n])
    g = int(np.argmax(gaps))
    start = int(idx[(g + 1) % idx.size])
    width = n - int(gaps[g]) + 1
    return start, width


def half_spectrum_index(idx: np.ndarray, n: int):
    """Where full-spectrum bins ``idx`` live in an rfft of length n.

    Returns the rfft positions and a mask of bins that must be conjugated.
    """
    flip = idx > n // 2
    return np.where(flip, n - idx, idx), flip


@dataclass(frozen=True)
class Band:
    """One wavelet with the bookkeeping needed for the decimated product.

    ``hat`` lives on an ``n``-point grid; ``idx`` are the bins kept (a circular
    arc) and ``m`` the power-of-two size of the inverse FFT the band is
    folded into.
    """

    xi: float
    sigma: float
    j: int
    center_hz: float
    hat: np.ndarray
    idx: np.ndarray
    m: int

    coeff: np.ndarray = None
    target: np.ndarray = None
    src: np.ndarray = None
    flip: np.ndarray = None

    def __post_init__(self):
        n = self.hat.shape[0]
        object.__setattr__(self, "coeff", self.hat[self.idx])
        object.__setattr__(self, "target", self.idx % self.m)
        src, flip = half_spectrum_index(self.idx, n)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "flip", flip)

    @property
    def n(self) -> int:
        return self.hat.shape[0]


def make_band(hat, xi, sigma, j, rate, min_m, eps=SUPPORT_EPS, oversample=1) -> Band:
    n = hat.shape[0]
    start, width = support_arc(hat, eps)
    m = min(n, max(min_m, next_pow2(oversample * width)))
    idx = (start + np.arange(width)) % n
    return Band(xi, sigma, j, xi * rate, hat, idx, m)


def restrict_hat(hat: np.ndarray, m: int) -> np.ndarray:
    """Frequency response, on an m-point grid, of the filter subsampled in time.

    Sampling the impulse response every ``n/m`` samples periodizes the
    spectrum; the 1/(n/m) amplitude factor is dropped so the passband gain is
    unchanged.
    """
    n = hat.shape[0]
    if m == n:
        return hat
    return hat.reshape(n // m, m).sum(axis=0)


@dataclass(frozen=True)
class Filterbank:
    """First and second layer wavelets plus the averaging filter for one config."""

    config: ScatterConfig
    psi1_bands: List[Band]
    psi2_bands: List[Band]
    phi_hat: np.ndarray
    psi2_on: dict = field(default_factory=dict, repr=False)  # (k2, m1) -> Band
    phi_on: dict = field(default_factory=dict, repr=False)   # m -> (out bins, coeff, src, flip)

    @property
    def psi1(self) -> List[Tuple[float, Spectrum]]:
        rate = self.config.input_rate
        return [(b.center_hz, Spectrum(b.hat, rate)) for b in self.psi1_bands]

    @property
    def psi2(self) -> List[Tuple[float, Spectrum]]:
        rate = self.config.input_rate
        return [(b.center_hz, Spectrum(b.hat, rate)) for b in self.psi2_bands]

    @property
    def phi(self) -> Spectrum:
        return Spectrum(self.phi_hat, self.config.input_rate)

    def psi2_band_on(self, k2: int, m1: int) -> Band:
        """Second-layer filter ``k2`` for an input decimated to ``m1`` samples."""
        return self.psi2_on[(k2, m1)]

    def littlewood_paley(self, layer: int = 1) -> np.ndarray:
        bands = self.psi1_bands if layer == 1 else self.psi2_bands
        return littlewood_paley([b.hat for b in bands], self.phi_hat)


def _layer(n, Q, J, phi_hat, rate, min_m):
    xis, sigmas, js = filter_params(Q, J)
    hats = np.array([morlet_hat(n, x, s) for x, s in zip(xis, sigmas)])
    hats = hats * tight_frame_gain(hats, phi_hat)
    return [make_band(h, x, s, j, rate, min_m) for h, x, s, j in zip(hats, xis, sigmas, js)]


@lru_cache(maxsize=32)
def build_filterbank(config: ScatterConfig) -> Filterbank:
    """Build (and memoize) the filterbank of a config.

    Raises ConfigError when the averaging filter does not fit in the padded
    segment.
    """
    n = config.padded_len
    if config.phi_support > 2 * config.segment_len:
        raise ConfigError(
            f"averaging support {config.phi_support} samples exceeds twice the segment "
            f"({config.segment_len} samples); lower J or use longer segments")
    phi_hat = gaussian_lowpass_hat(n, SIGMA0 / 2 ** config.J)
    min_m = n >> config.J
    psi1 = _layer(n, config.Q, config.J, phi_hat, config.input_rate, min_m)
    psi2 = _layer(n, config.Q2, config.J, phi_hat, config.input_rate, min_m)
    psi2_on = {}
    for m1 in sorted({b.m for b in psi1}):
        for k2, b in enumerate(psi2):
            psi2_on[(k2, m1)] = make_band(restrict_hat(b.hat, m1), b.xi, b.sigma, b.j,
                                          config.input_rate, min_m)
    sizes = {n} | {b.m for b in psi1} | {b.m for b in psi2_on.values()}
    phi_on = {}
    for m in sorted(sizes):
        hat = restrict_hat(phi_hat, m)
        start, width = support_arc(hat)
        if width > min_m:
            raise ConfigError("averaging filter is too wide for the output frame rate")
        bins = (start + np.arange(width)) % m
        src, flip = half_spectrum_index(bins, m)
        phi_on[m] = (bins % min_m, hat[bins], src, flip)
    return Filterbank(config, psi1, psi2, phi_hat, psi2_on, phi_on)
