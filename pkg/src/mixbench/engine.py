"""Single-balanced mixer transient engine.

The mixer is the textbook composition: an RF transconductor feeding a
differential pair that commutates the current at the LO rate, with resistive
loads.  The differential output is resolved analytically, so the output
voltage is simply ``rd * i_s(t) * switch(t)``.

Simulations run on a scaled coherent grid that preserves the configured
frequency ratios (19:18:1 for the default 1.9/1.8/0.1 GHz plan) instead of
literal GHz values; the physics of a memoryless model is identical and the
record stays short.  ``frequency_scale`` maps internal grid units back to Hz.

Two grid choices keep the switching spectrum exact:

* the sample rate is an integer multiple of the LO frequency, so every
  folded harmonic of the sampled square wave lands back on an odd LO
  multiple instead of smearing across stray bins;
* the default LO phase is offset by half a sample, so no sample ever lands
  on a switching instant and the commutation duty is exactly 50%.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Tuple

import numpy as np

from .devices import (
    BiasParams,
    LeakageParams,
    LoadParams,
    SwitchParams,
    TransconductorParams,
    switch_waveform,
    transconductor_current,
)
from .errors import AliasingError, ValidationError
from .signals import (
    SampledSignal,
    SimGrid,
    ToneSpec,
    synthesize_tone,
    white_noise,
)


@dataclass(frozen=True)
class MixerParams:
    """All device constants of the mixer in one bundle."""

    transconductor: TransconductorParams
    switch: SwitchParams
    load: LoadParams
    bias: BiasParams
    leakage: LeakageParams


@dataclass(frozen=True)
class FilterSpec:
    """Post-mixer IF filter; currently a second-order Butterworth low-pass."""

    kind: str = "lowpass2"
    cutoff: float = 0.0

    def __post_init__(self):
        if self.kind != "lowpass2":
            raise ValidationError(f"unknown filter kind {self.kind!r}")
        if not self.cutoff > 0:
            raise ValidationError(f"filter cutoff must be > 0, got {self.cutoff!r}")


@dataclass(frozen=True)
class Scenario:
    """One fully-specified simulation: mixer, grid, stimulus, noise, filter.

    Frequencies inside a scenario are in internal grid units;
    ``frequency_scale`` (Hz per unit) converts back to the physical plan.
    """

    mixer: MixerParams
    grid: SimGrid
    rf_tones: Tuple[ToneSpec, ...]
    lo_tone: ToneSpec
    noise_seed: int = 0
    input_noise_density: float = 0.0
    input_noise_band: Optional[Tuple[float, float]] = None
    if_filter: Optional[FilterSpec] = None
    frequency_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rf_tones", tuple(self.rf_tones))
        self.validate()

    def validate(self):
        if len(self.rf_tones) not in (1, 2):
            raise ValidationError(
                f"scenario needs 1 or 2 RF tones, got {len(self.rf_tones)}")
        for label, tone in self._labelled_tones():
            self.grid.bin_index(tone.frequency, label)
            if tone.frequency >= self.grid.nyquist:
                raise AliasingError(tone.frequency, self.grid.nyquist, label)
        # The primary mixing products must be representable.
        f_lo = self.lo_tone.frequency
        for tone in self.rf_tones:
            if tone.frequency + f_lo >= self.grid.nyquist:
                raise AliasingError(tone.frequency + f_lo, self.grid.nyquist,
                                    "sum product of RF tone and LO")
            if tone.frequency == f_lo:
                raise ValidationError("RF tone frequency equals the LO frequency")
        if self.input_noise_density < 0:
            raise ValidationError(
                f"input_noise_density must be >= 0, got {self.input_noise_density!r}")
        if self.if_filter is not None and self.if_filter.cutoff >= self.grid.nyquist:
            raise AliasingError(self.if_filter.cutoff, self.grid.nyquist, "IF filter cutoff")
        if not self.frequency_scale > 0:
            raise ValidationError(
                f"frequency_scale must be > 0, got {self.frequency_scale!r}")

    def _labelled_tones(self):
        for i, tone in enumerate(self.rf_tones):
            yield f"RF tone {i + 1} at {tone.frequency!r}", tone
        yield f"LO tone at {self.lo_tone.frequency!r}", self.lo_tone

    @property
    def f_lo(self) -> float:
        return self.lo_tone.frequency

    @property
    def f_rf(self) -> float:
        return self.rf_tones[0].frequency

    @property
    def f_if(self) -> float:
        return abs(self.f_rf - self.f_lo)

    def to_hz(self, internal: float) -> float:
        return internal * self.frequency_scale

    def with_rf_power(self, power_dbm: float) -> "Scenario":
        """Copy with every RF tone set to the given power."""
        tones = tuple(t.with_power(power_dbm) for t in self.rf_tones)
        return replace(self, rf_tones=tones)


@dataclass(frozen=True, eq=False)
class TransientResult:
    """All node waveforms of one simulation, sharing the scenario grid."""

    scenario: Scenario
    v_rf_port: SampledSignal        # stimulus + LO leakage + noise
    i_s: SampledSignal              # transconductor output current
    i_out: SampledSignal            # commutated current
    v_out: SampledSignal            # differential output voltage
    v_out_filtered: Optional[SampledSignal] = None


def analytic_conversion_gain(m: MixerParams) -> float:
    """Small-signal conversion gain in dB: 20*log10((2/pi) * rd * gm)."""
    return 20.0 * math.log10((2.0 / math.pi) * m.load.rd * m.transconductor.gm)


def butterworth2_response(frequency, cutoff: float):
    """Complex response of a second-order Butterworth low-pass.

    |H| = 1/sqrt(1 + (f/fc)^4); exactly 1/sqrt(2) at the cutoff.
    Accepts scalars or arrays.
    """
    x = np.asarray(frequency, dtype=np.float64) / cutoff
    h = 1.0 / (1.0 - x * x + 1j * math.sqrt(2.0) * x)
    return h if h.ndim else complex(h)


def apply_if_filter(f: FilterSpec, v: SampledSignal) -> SampledSignal:
    """Apply the IF filter as exact per-bin multiplication on the grid.

    The coherent grid makes the frequency-domain product exact and avoids
    the start-up transient a time-stepped filter would show.
    """
    if f.cutoff >= v.grid.nyquist:
        raise AliasingError(f.cutoff, v.grid.nyquist, "IF filter cutoff")
    spectrum = np.fft.rfft(v.samples)
    freqs = np.arange(spectrum.size) * v.grid.resolution
    spectrum *= butterworth2_response(freqs, f.cutoff)
    out = np.fft.irfft(spectrum, v.grid.num_samples)
    return SampledSignal(grid=v.grid, samples=out, unit=v.unit)


def simulate(s: Scenario) -> TransientResult:
    """Run the transient: stimulus, leakage, noise, V-I conversion, switching.

    Pure function of the scenario (the noise generator is seeded from it),
    so identical scenarios produce identical results.
    """
    grid = s.grid
    v_lo = synthesize_tone(grid, s.lo_tone)

    port = np.zeros(grid.num_samples)
    for tone in s.rf_tones:
        port = port + synthesize_tone(grid, tone).samples
    kappa = s.mixer.leakage.kappa
    if kappa != 0.0:
        port = port + kappa * v_lo.samples
    if s.input_noise_density > 0.0:
        noise = white_noise(grid, s.input_noise_density, s.noise_seed,
                            band=s.input_noise_band)
        port = port + noise.samples
    v_rf_port = SampledSignal(grid=grid, samples=port, unit="volt")

    i_s = transconductor_current(s.mixer.transconductor, v_rf_port)
    sw = switch_waveform(s.mixer.switch, v_lo)
    i_out = SampledSignal(grid=grid, samples=i_s.samples * sw.samples, unit="ampere")
    v_out = SampledSignal(grid=grid, samples=s.mixer.load.rd * i_out.samples,
                          unit="volt")
    v_filt = apply_if_filter(s.if_filter, v_out) if s.if_filter is not None else None
    return TransientResult(scenario=s, v_rf_port=v_rf_port, i_s=i_s,
                           i_out=i_out, v_out=v_out, v_out_filtered=v_filt)


# ---------------------------------------------------------------------------
# Scaled-grid construction


def plan_ratio(f_rf_hz: float, f_lo_hz: float,
               max_denominator: int = 64) -> Tuple[int, int, int]:
    """Smallest integer (rf, lo, if) triple matching the physical plan.

    The RF and LO frequencies must be commensurate with their difference
    (1.9/1.8 GHz gives (19, 18, 1)); the IF may be subdivided at most
    ``max_denominator`` times, which keeps accidental near-matches of
    irrational ratios from producing astronomically long records.
    """
    if not (f_rf_hz > f_lo_hz > 0):
        raise ValidationError(
            f"need f_rf > f_lo > 0, got rf={f_rf_hz!r}, lo={f_lo_hz!r}")
    f_if_hz = f_rf_hz - f_lo_hz
    frac = Fraction(f_rf_hz / f_if_hz).limit_denominator(max_denominator)
    n_rf, d = frac.numerator, frac.denominator
    if abs(n_rf / d - f_rf_hz / f_if_hz) > 1e-9 * (f_rf_hz / f_if_hz):
        raise ValidationError(
            f"RF/IF ratio {f_rf_hz / f_if_hz!r} has no small integer form; "
            f"choose commensurate frequencies")
    return n_rf, n_rf - d, d


@dataclass(frozen=True)
class ScaledPlan:
    """Coherent internal grid for a physical frequency plan.

    ``bins_per_unit`` sets how many grid bins one plan unit spans (the IF
    lands on bin bins_per_unit * n_if) and ``samples_per_lo_period`` sets the
    oversampling of the switch.  Keeping the latter a multiple of 4 makes
    the folded switching spectrum close under the odd-harmonic family.
    """

    f_rf_hz: float
    f_lo_hz: float
    bins_per_unit: int = 4
    samples_per_lo_period: int = 128

    def __post_init__(self):
        if self.bins_per_unit < 1:
            raise ValidationError(
                f"bins_per_unit must be >= 1, got {self.bins_per_unit}")
        p = self.samples_per_lo_period
        if p < 8 or p % 4 != 0:
            raise ValidationError(
                f"samples_per_lo_period must be a multiple of 4 and >= 8, got {p}")
        plan_ratio(self.f_rf_hz, self.f_lo_hz)  # validates commensurability

    @property
    def ratio(self) -> Tuple[int, int, int]:
        return plan_ratio(self.f_rf_hz, self.f_lo_hz)

    @property
    def rf_bin(self) -> int:
        return self.ratio[0] * self.bins_per_unit

    @property
    def lo_bin(self) -> int:
        return self.ratio[1] * self.bins_per_unit

    @property
    def if_bin(self) -> int:
        return self.ratio[2] * self.bins_per_unit

    @property
    def num_samples(self) -> int:
        return self.samples_per_lo_period * self.lo_bin

    @property
    def hz_per_unit(self) -> float:
        return (self.f_rf_hz - self.f_lo_hz) / self.if_bin

    def grid(self) -> SimGrid:
        n = self.num_samples
        return SimGrid(sample_rate=float(n), num_samples=n)

    def lo_half_sample_phase(self) -> float:
        """LO phase putting every switching instant between two samples."""
        return math.pi * self.lo_bin / self.num_samples

    def to_internal(self, f_hz: float, context: str = "") -> float:
        """Convert a physical frequency to internal grid units (exact bins)."""
        units = f_hz / self.hz_per_unit
        k = round(units)
        if abs(units - k) > 1e-9 * max(1.0, abs(units)):
            raise ValidationError(
                f"frequency {f_hz!r} Hz does not fall on the scaled grid"
                + (f" ({context})" if context else ""))
        return float(k)
