"""Seeded band-limited Gaussian noise streams scaled by Johnson's formula.

Generator choice (documented, pinned by golden-sequence tests):

* bit source: numpy's Philox counter-based generator, keyed by the 64-bit
  stream seed, period far above 2^64; one 64-bit word per sample.
* Gaussian transform: inverse CDF.  Each word w becomes the uniform
  ``((w >> 11) + 0.5) * 2**-53`` in the open interval (0, 1), then
  ``ndtri(u) * sigma``.  Fixed one-word-per-sample consumption is what makes
  disjoint blocks of one stream independently computable: Philox advances in
  blocks of four words, so any ``offset`` that is a multiple of 4 can be
  jumped to without generating the skipped samples.

Sampling policy: one sample represents the Nyquist step of the noise band
(critical sampling), so i.i.d. samples of variance ``4 k T R df`` realize
band-limited white noise with the full Johnson power.  ``oversample > 1``
generates white samples at a multiple of the Nyquist rate and applies an
ideal brick-wall low-pass back to the band; see docs/derivations.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .core import K_BOLTZMANN

#: Philox emits 64-bit words in blocks of this size; stream offsets for
#: parallel block generation must be multiples of it.
PHILOX_BLOCK = 4

_FULL64 = 2**64 - 1


def johnson_msv(r: float, t: float, bandwidth: float) -> float:
    """Mean-square Johnson noise voltage ``4 k T R df`` in SI units.

    Parameters
    ----------
    r : float
        Resistance in ohms, >= 0.
    t : float
        Noise temperature in kelvin, >= 0.
    bandwidth : float
        Noise bandwidth in hertz, > 0.

    Returns
    -------
    float
        Mean-square source voltage in V^2.  Normalized-unit scaling is the
        caller's job (see :meth:`kljn.core.NoiseSpec.source_msv`).
    """
    if r < 0:
        raise ValueError(f"r >= 0 violated (got {r})")
    if t < 0:
        raise ValueError(f"t >= 0 violated (got {t})")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth > 0 violated (got {bandwidth})")
    return 4.0 * K_BOLTZMANN * t * r * bandwidth


def _uniform_words(seed: int, count: int, offset: int) -> np.ndarray:
    bg = np.random.Philox(key=seed & _FULL64)
    if offset:
        bg.advance(offset // PHILOX_BLOCK)
    gen = np.random.Generator(bg)
    return gen.integers(0, _FULL64, size=count, dtype=np.uint64, endpoint=True)


def _words_to_normal(words: np.ndarray, sigma: float) -> np.ndarray:
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u) * sigma


def gaussian_stream(
    seed: int, count: int, sigma: float, offset: int = 0
) -> np.ndarray:
    """Samples ``offset .. offset+count`` of the zero-mean Gaussian stream.

    Deterministic in ``(seed, sigma)``: equal arguments give bit-identical
    arrays, and different seeds give statistically independent streams.
    ``offset`` must be a multiple of :data:`PHILOX_BLOCK`, which allows
    disjoint blocks of one stream to be produced in parallel.
    """
    if count < 0:
        raise ValueError(f"count >= 0 violated (got {count})")
    if sigma < 0:
        raise ValueError(f"sigma >= 0 violated (got {sigma})")
    if offset < 0 or offset % PHILOX_BLOCK:
        raise ValueError(
            f"offset must be a non-negative multiple of {PHILOX_BLOCK} "
            f"(got {offset})"
        )
    if count == 0:
        return np.empty(0, dtype=np.float64)
    return _words_to_normal(_uniform_words(seed, count, offset), sigma)


@dataclass
class NoiseStream:
    """Single-consumer view of one seeded Gaussian source EMF stream.

    Two streams constructed with equal ``(seed, sigma)`` yield identical
    sample sequences; ``position`` tracks how many samples have been drawn.
    """

    seed: int
    sigma: float
    position: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma >= 0 violated (got {self.sigma})")
        bg = np.random.Philox(key=self.seed & _FULL64)
        if self.position:
            if self.position % PHILOX_BLOCK:
                raise ValueError(
                    f"position must start on a multiple of {PHILOX_BLOCK}"
                )
            bg.advance(self.position // PHILOX_BLOCK)
        self._gen = np.random.Generator(bg)

    def draw(self, count: int) -> np.ndarray:
        """Next ``count`` samples; successive draws concatenate seamlessly."""
        if count < 0:
            raise ValueError(f"count >= 0 violated (got {count})")
        words = self._gen.integers(
            0, _FULL64, size=count, dtype=np.uint64, endpoint=True
        )
        self.position += count
        return _words_to_normal(words, self.sigma)


def brickwall_lowpass(
    samples: np.ndarray, oversample: int, block: int = 8192
) -> np.ndarray:
    """Ideal low-pass keeping the lowest ``1/oversample`` of the band.

    Applied blockwise with a real FFT; bins above the cut are zeroed and the
    block is transformed back.  With white input of variance ``s``, output
    variance is approximately ``s / oversample``.
    """
    if oversample < 1:
        raise ValueError(f"oversample >= 1 violated (got {oversample})")
    if oversample == 1:
        return np.asarray(samples, dtype=np.float64)
    x = np.asarray(samples, dtype=np.float64)
    out = np.empty_like(x)
    for start in range(0, len(x), block):
        seg = x[start : start + block]
        spec = np.fft.rfft(seg)
        keep = len(seg) // (2 * oversample)
        spec[keep + 1 :] = 0.0
        out[start : start + len(seg)] = np.fft.irfft(spec, n=len(seg))
    return out


def band_limited_stream(
    seed: int, count: int, sigma: float, oversample: int
) -> np.ndarray:
    """Band-limited stream at ``oversample`` times the Nyquist step.

    White samples are generated at variance ``oversample * sigma**2`` (the
    full rate carries ``oversample`` times the band power) and brick-wall
    filtered so the in-band power matches ``sigma**2``.
    """
    if oversample == 1:
        return gaussian_stream(seed, count, sigma)
    white = gaussian_stream(seed, count, sigma * np.sqrt(oversample))
    return brickwall_lowpass(white, oversample)
