"""Sampled signals, coherent-grid spectral readout and noise-density estimation.

Everything downstream (device models, the mixer engine, the measurement
routines) works in terms of :class:`SampledSignal` values living on a
:class:`SimGrid`.  The grid enforces coherent sampling: every stimulus and
every analyzed ray must fall on an exact DFT bin, so single-bin readings are
leakage-free and need no window.

Amplitudes are volts peak throughout; dBm conversions assume the global
50 ohm reference impedance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Tuple

import numpy as np

from .errors import (
    AliasingError,
    CoherenceError,
    InsufficientBandwidthError,
    ValidationError,
)

# Global reference impedance for all power <-> amplitude conversions.
REFERENCE_IMPEDANCE_OHMS = 50.0

# Relative tolerance when deciding whether a frequency sits on a grid bin.
_COHERENCE_RTOL = 1e-9


@dataclass(frozen=True)
class SimGrid:
    """Uniform sampling grid with a coherent-frequency contract.

    Attributes
    ----------
    sample_rate : float
        Samples per second (Hz).
    num_samples : int
        Record length; at least 16 and even, so the record always has a
        well-defined Nyquist bin.
    """

    sample_rate: float
    num_samples: int

    def __post_init__(self):
        if not (self.sample_rate > 0 and math.isfinite(self.sample_rate)):
            raise ValidationError(f"sample_rate must be positive, got {self.sample_rate!r}")
        if self.num_samples < 16:
            raise ValidationError(f"num_samples must be >= 16, got {self.num_samples}")
        if self.num_samples % 2 != 0:
            raise ValidationError(f"num_samples must be even, got {self.num_samples}")

    @property
    def resolution(self) -> float:
        """Bin spacing in Hz."""
        return self.sample_rate / self.num_samples

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    def bin_index(self, frequency: float, context: str = "") -> int:
        """Map a coherent frequency to its bin index, or raise CoherenceError."""
        ratio = frequency / self.resolution
        k = round(ratio)
        if abs(ratio - k) > _COHERENCE_RTOL * max(1.0, abs(ratio)):
            raise CoherenceError(frequency, self.resolution, context)
        return int(k)

    def is_coherent(self, frequency: float) -> bool:
        try:
            self.bin_index(frequency)
        except CoherenceError:
            return False
        return True

    def times(self) -> np.ndarray:
        return np.arange(self.num_samples) / self.sample_rate


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """A real-valued waveform on a grid, tagged with its physical unit."""

    grid: SimGrid
    samples: np.ndarray
    unit: str = "volt"

    _UNITS = ("volt", "ampere", "dimensionless")

    def __post_init__(self):
        if self.unit not in self._UNITS:
            raise ValidationError(f"unknown unit {self.unit!r}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.shape != (self.grid.num_samples,):
            raise ValidationError(
                f"samples length {arr.shape} does not match grid "
                f"num_samples {self.grid.num_samples}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("signal contains non-finite samples")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self) -> int:
        return self.grid.num_samples


@dataclass(frozen=True)
class ToneSpec:
    """A single cosine stimulus.

    Exactly one of ``power_dbm`` (into the 50 ohm reference) or
    ``amplitude`` (volts peak) must be given.  A zero-amplitude tone is a
    legal way to express "port present but silent".
    """

    frequency: float
    power_dbm: Optional[float] = None
    amplitude: Optional[float] = None
    phase: float = 0.0

    def __post_init__(self):
        if not (self.frequency > 0 and math.isfinite(self.frequency)):
            raise ValidationError(f"tone frequency must be > 0, got {self.frequency!r}")
        if (self.power_dbm is None) == (self.amplitude is None):
            raise ValidationError("specify exactly one of power_dbm or amplitude")
        if self.amplitude is not None and self.amplitude < 0:
            raise ValidationError(f"tone amplitude must be >= 0, got {self.amplitude!r}")

    def peak_amplitude(self) -> float:
        """Peak amplitude in volts implied by the power or amplitude field."""
        if self.amplitude is not None:
            return float(self.amplitude)
        return dbm_to_amplitude(self.power_dbm)

    def with_power(self, power_dbm: float) -> "ToneSpec":
        return ToneSpec(frequency=self.frequency, power_dbm=power_dbm, phase=self.phase)


@dataclass(frozen=True)
class SpectrumLine:
    """One spectral ray: frequency, peak amplitude, and power in dBm."""

    frequency: float
    amplitude: float
    power_dbm: float

    @classmethod
    def from_amplitude(cls, frequency: float, amplitude: float) -> "SpectrumLine":
        power = amplitude_to_dbm(amplitude) if amplitude > 0 else -math.inf
        return cls(frequency=frequency, amplitude=amplitude, power_dbm=power)


def amplitude_to_dbm(amplitude: float) -> float:
    """Peak voltage into the 50 ohm reference -> power in dBm."""
    if not amplitude > 0:
        raise ValueError(f"amplitude must be > 0, got {amplitude!r}")
    power_w = (amplitude * amplitude / 2.0) / REFERENCE_IMPEDANCE_OHMS
    return 10.0 * math.log10(power_w / 1e-3)


def dbm_to_amplitude(power_dbm: float) -> float:
    """Power in dBm into the 50 ohm reference -> peak voltage."""
    power_w = 1e-3 * 10.0 ** (power_dbm / 10.0)
    return math.sqrt(2.0 * power_w * REFERENCE_IMPEDANCE_OHMS)


def synthesize_tone(grid: SimGrid, tone: ToneSpec) -> SampledSignal:
    """Sample ``A cos(2 pi f t + phi)`` on the grid.

    The tone must be coherent with the grid and strictly below Nyquist.
    """
    if tone.frequency >= grid.nyquist:
        raise AliasingError(tone.frequency, grid.nyquist, "tone")
    k = grid.bin_index(tone.frequency, "tone")
    amp = tone.peak_amplitude()
    n = np.arange(grid.num_samples)
    samples = amp * np.cos(2.0 * np.pi * k * n / grid.num_samples + tone.phase)
    return SampledSignal(grid=grid, samples=samples, unit="volt")


def bin_value(signal: SampledSignal, frequency: float) -> complex:
    """Complex single-bin projection, scaled so a peak-A tone reads A.

    This is the single-frequency correlation behind :func:`bin_amplitude`;
    it is deliberately independent of the FFT paths used elsewhere so the
    two can cross-check each other.  The DC bin returns the record mean.
    """
    grid = signal.grid
    k = grid.bin_index(frequency, "bin readout")
    if frequency >= grid.nyquist:
        raise AliasingError(frequency, grid.nyquist, "bin readout")
    if k < 0:
        raise ValidationError(f"negative frequency {frequency!r}")
    n = np.arange(grid.num_samples)
    c = np.dot(signal.samples, np.exp(-2j * np.pi * k * n / grid.num_samples))
    scale = 1.0 / grid.num_samples if k == 0 else 2.0 / grid.num_samples
    return complex(c * scale)


def bin_amplitude(signal: SampledSignal, frequency: float) -> SpectrumLine:
    """Peak amplitude and power of the ray at an exact grid bin."""
    return SpectrumLine.from_amplitude(frequency, abs(bin_value(signal, frequency)))


def harmonic_table(signal: SampledSignal, fundamental: float, order: int) -> Tuple[SpectrumLine, ...]:
    """Rays at k * fundamental for k = 1..order.

    All requested harmonics must be below Nyquist.
    """
    if order < 1:
        raise ValidationError(f"order must be >= 1, got {order}")
    if order * fundamental >= signal.grid.nyquist:
        raise AliasingError(order * fundamental, signal.grid.nyquist,
                            f"harmonic {order} of {fundamental!r}")
    return tuple(bin_amplitude(signal, k * fundamental) for k in range(1, order + 1))


def white_noise(grid: SimGrid, density: float, seed: int,
                band: Optional[Tuple[float, float]] = None) -> SampledSignal:
    """Seeded Gaussian noise with one-sided density ``density`` V/sqrt(Hz).

    The per-sample standard deviation is ``density * sqrt(fs / 2)`` so the
    flat one-sided spectral density comes out at the requested value.  When
    ``band`` is given the spectrum is brick-wall limited to that range (the
    DC bin is always cleared); bins inside the band keep their statistics.
    """
    if density < 0:
        raise ValueError(f"noise density must be >= 0, got {density!r}")
    if density == 0.0:
        return SampledSignal(grid=grid, samples=np.zeros(grid.num_samples), unit="volt")
    rng = np.random.default_rng(seed)
    sigma = density * math.sqrt(grid.sample_rate / 2.0)
    samples = rng.standard_normal(grid.num_samples) * sigma
    if band is not None:
        lo, hi = band
        if not (0 <= lo < hi):
            raise ValidationError(f"bad noise band {band!r}")
        if hi > grid.nyquist:
            raise AliasingError(hi, grid.nyquist, "noise band")
        spectrum = np.fft.rfft(samples)
        freqs = np.arange(spectrum.size) * grid.resolution
        keep = (freqs >= lo) & (freqs <= hi)
        keep[0] = False
        spectrum[~keep] = 0.0
        samples = np.fft.irfft(spectrum, grid.num_samples)
    return SampledSignal(grid=grid, samples=samples, unit="volt")


class BandNoiseStats(NamedTuple):
    density: float          # V/sqrt(Hz) over the unmasked band bins
    relative_spread: float  # relative standard error of the band power mean
    bins_used: int
    segments: int


def _band_noise_stats(signal: SampledSignal, band_center: float, band_width: float,
                      segments: int,
                      mask_frequencies: Iterable[float] = ()) -> BandNoiseStats:
    """Averaged-periodogram band statistics behind :func:`noise_density`."""
    grid = signal.grid
    if segments < 4:
        raise ValidationError(f"segments must be >= 4, got {segments}")
    if grid.num_samples % segments != 0:
        raise ValidationError(
            f"record length {grid.num_samples} not divisible by {segments} segments")
    lo = band_center - band_width / 2.0
    hi = band_center + band_width / 2.0
    if lo < 0 or hi >= grid.nyquist:
        raise ValidationError(
            f"band [{lo!r}, {hi!r}] must lie within (0, Nyquist={grid.nyquist!r})")

    seg_len = grid.num_samples // segments
    seg_res = grid.sample_rate / seg_len
    chunks = signal.samples.reshape(segments, seg_len)
    spectra = np.fft.rfft(chunks, axis=1)
    # One-sided periodogram in V^2/Hz; DC and Nyquist are excluded below.
    psd = (np.abs(spectra) ** 2) * (2.0 / (grid.sample_rate * seg_len))

    k_lo = max(1, math.ceil(lo / seg_res - 1e-12))
    k_hi = min(seg_len // 2 - 1, math.floor(hi / seg_res + 1e-12))
    if k_hi < k_lo:
        raise InsufficientBandwidthError(
            f"band [{lo!r}, {hi!r}] contains no usable periodogram bins")
    bins = np.arange(k_lo, k_hi + 1)

    masked = np.zeros(bins.size, dtype=bool)
    for f in mask_frequencies:
        kf = f / seg_res
        # Exact stimulus bins plus one guard bin each side.
        lo_k = math.floor(kf) - 1
        hi_k = math.ceil(kf) + 1
        masked |= (bins >= lo_k) & (bins <= hi_k)
    used = bins[~masked]
    if used.size < 2:
        raise InsufficientBandwidthError(
            f"fewer than 2 unmasked bins left in band [{lo!r}, {hi!r}]")

    band_psd = psd[:, used]
    mean_power = float(band_psd.mean())
    per_segment = band_psd.mean(axis=1)
    spread = float(per_segment.std(ddof=1) / math.sqrt(segments) / mean_power) \
        if mean_power > 0 else 0.0
    return BandNoiseStats(density=math.sqrt(mean_power), relative_spread=spread,
                          bins_used=int(used.size), segments=segments)


def noise_density(signal: SampledSignal, band_center: float, band_width: float,
                  segments: int, mask_frequencies: Iterable[float] = ()) -> float:
    """One-sided voltage noise density over a band, in V/sqrt(Hz).

    The record is split into non-overlapping segments, rectangular-window
    periodograms are averaged, and the band power is taken over the bins in
    ``[band_center - band_width/2, band_center + band_width/2]``.  Any
    frequency listed in ``mask_frequencies`` is removed along with one guard
    bin on each side, separating deterministic rays from the noise floor.
    """
    return _band_noise_stats(signal, band_center, band_width, segments,
                             mask_frequencies).density
