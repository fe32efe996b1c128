"""Figure-of-merit measurements: gain, compression, intercept, isolation, NF.

Every routine here drives the transient engine with a purpose-built stimulus
and reads exact grid bins, mirroring how the quantities are read off a
spectrum analyzer:

* conversion gain is the IF-bin amplitude over the stimulus amplitude;
* the 1 dB compression point comes from a power sweep, interpolated where
  the gain falls 1 dB below its weak-signal value;
* IIP3 comes from a two-tone run via ``delta/2 + per-tone power``;
* isolation is the LO ray observed at the RF port over the injected LO;
* noise figure is the power-ratio reading of output versus input noise
  density across the measured conversion gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from .devices import dc_power
from .engine import Scenario, simulate
from .errors import (
    CompressionNotFoundError,
    ImmeasurableIM3Error,
    MixbenchError,
    NoCompressionError,
    StimulusTooHotError,
    ValidationError,
    WrongStimulusError,
)
from .signals import (
    ToneSpec,
    _band_noise_stats,
    amplitude_to_dbm,
    bin_amplitude,
    dbm_to_amplitude,
)

# Below this power a ray is treated as numerically absent.
MEASUREMENT_FLOOR_DBM = -200.0
ISOLATION_FLOOR_DB = -200.0


@dataclass(frozen=True)
class GainSweepPoint:
    input_power_dbm: float
    output_power_dbm: float
    gain_db: float


def _sweep_point(input_dbm: float, output_dbm: float) -> GainSweepPoint:
    return GainSweepPoint(input_power_dbm=input_dbm, output_power_dbm=output_dbm,
                          gain_db=output_dbm - input_dbm)


@dataclass(frozen=True)
class P1dBResult:
    p1db_dbm: float
    small_signal_gain_db: float
    sweep: Tuple[GainSweepPoint, ...]


@dataclass(frozen=True)
class TwoToneResult:
    """Two-tone readings; ``iip3 = delta/2 + per-tone power`` by construction."""

    per_tone_dbm: float
    p_fund_dbm: float
    p_im3_dbm: float
    p_im3_mirror_dbm: float
    delta_db: float
    iip3_dbm: float


@dataclass(frozen=True)
class NoiseFigureSettings:
    """Band and averaging configuration for the noise-figure measurement.

    Band centers default to the scenario's RF (input) and IF (output)
    frequencies.  ``signal_out_frequency`` is where the conversion-gain probe
    ray is read; it defaults to the down-converted IF and must be overridden
    for a non-translating device (e.g. a pass-through stage).
    """

    input_band_width: float
    output_band_width: float
    segments: int = 32
    input_band_center: Optional[float] = None
    output_band_center: Optional[float] = None
    probe_power_dbm: float = -40.0
    signal_out_frequency: Optional[float] = None


@dataclass(frozen=True)
class NoiseFigureResult:
    nf_db: float
    input_density: float
    output_density: float
    gain_db: float
    warning: Optional[str] = None


def measure_conversion_gain(s: Scenario) -> float:
    """Conversion gain in dB of a single-tone scenario, read at the IF bin."""
    if len(s.rf_tones) != 1:
        raise WrongStimulusError(
            f"conversion gain needs a single RF tone, got {len(s.rf_tones)}")
    amp_in = s.rf_tones[0].peak_amplitude()
    if amp_in <= 0:
        raise WrongStimulusError("conversion gain needs a non-silent RF tone")
    result = simulate(s)
    amp_out = bin_amplitude(result.v_out, s.f_if).amplitude
    if amp_out <= 0:
        return -math.inf
    return 20.0 * math.log10(amp_out / amp_in)


def measure_p1db(s: Scenario, power_range: Tuple[float, float] = (-40.0, 0.0),
                 step: float = 0.5) -> P1dBResult:
    """Sweep the RF power and locate the 1 dB gain-compression point.

    The small-signal reference is the gain measured at the lowest sweep
    power, so the procedure works for any device model, and the crossing is
    interpolated linearly in (input dBm, gain dB) between bracketing points.
    """
    if len(s.rf_tones) != 1:
        raise WrongStimulusError(
            f"compression sweep needs a single RF tone, got {len(s.rf_tones)}")
    if not s.mixer.transconductor.a3 < 0:
        raise NoCompressionError(
            f"a3 must be < 0 for compression, got {s.mixer.transconductor.a3!r}")
    lo_dbm, hi_dbm = power_range
    if not (hi_dbm > lo_dbm and step > 0):
        raise ValidationError(f"bad sweep range {power_range!r} step {step!r}")

    sweep = []
    n_steps = int(math.floor((hi_dbm - lo_dbm) / step + 1e-9))
    for i in range(n_steps + 1):
        p_in = lo_dbm + i * step
        gain = measure_conversion_gain(s.with_rf_power(p_in))
        sweep.append(_sweep_point(p_in, p_in + gain))
    if len(sweep) < 2:
        raise ValidationError("sweep range too narrow for interpolation")

    ref_gain = sweep[0].gain_db
    threshold = ref_gain - 1.0
    for prev, cur in zip(sweep, sweep[1:]):
        if prev.gain_db >= threshold and cur.gain_db < threshold:
            frac = (threshold - prev.gain_db) / (cur.gain_db - prev.gain_db)
            p1db = prev.input_power_dbm + frac * (cur.input_power_dbm
                                                  - prev.input_power_dbm)
            return P1dBResult(p1db_dbm=p1db, small_signal_gain_db=ref_gain,
                              sweep=tuple(sweep))
    raise CompressionNotFoundError(
        f"gain never dropped 1 dB below {ref_gain:.3f} dB within "
        f"[{lo_dbm}, {hi_dbm}] dBm", sweep=sweep)


def two_tone_variant(s: Scenario, tone_spacing: Optional[float] = None) -> Scenario:
    """Derive a two-tone scenario from a single-tone one.

    The second tone sits ``tone_spacing`` above the first (default: half the
    IF), which keeps the down-converted third-order products on-grid and
    clear of the fundamentals.
    """
    if len(s.rf_tones) != 1:
        raise WrongStimulusError("two_tone_variant expects a single-tone scenario")
    base = s.rf_tones[0]
    spacing = tone_spacing if tone_spacing is not None else s.f_if / 2.0
    if spacing <= 0:
        raise ValidationError(f"tone spacing must be > 0, got {spacing!r}")
    second = ToneSpec(frequency=base.frequency + spacing,
                      power_dbm=base.power_dbm,
                      amplitude=base.amplitude, phase=base.phase)
    return replace(s, rf_tones=(base, second))


def measure_iip3(s: Scenario, per_tone_power_dbm: float) -> TwoToneResult:
    """Two-tone intercept: drive both tones equally and read the IM3 rays.

    The reported IM3 is the larger of the two mirror products (equal for a
    symmetric cubic).  A companion run 20 dB colder guards against running
    the intercept measurement inside compression.
    """
    if len(s.rf_tones) != 2:
        raise WrongStimulusError(
            f"IIP3 needs a two-tone scenario, got {len(s.rf_tones)} tones")
    f1, f2 = sorted(t.frequency for t in s.rf_tones)
    if f1 == f2:
        raise WrongStimulusError("the two RF tones must differ in frequency")
    f_lo = s.f_lo
    f_fund = abs(f1 - f_lo)
    f_im3_low = abs(2.0 * f1 - f2 - f_lo)
    f_im3_high = abs(2.0 * f2 - f1 - f_lo)
    grid = s.grid
    for label, f in (("fundamental ray", f_fund),
                     ("IM3 ray", f_im3_low), ("mirror IM3 ray", f_im3_high)):
        grid.bin_index(f, label)
        if not 0 < f < grid.nyquist:
            raise ValidationError(f"{label} at {f!r} is not representable")

    hot = simulate(s.with_rf_power(per_tone_power_dbm))
    amp_fund = bin_amplitude(hot.v_out, f_fund).amplitude
    amp_im3 = bin_amplitude(hot.v_out, f_im3_low).amplitude
    amp_mirror = bin_amplitude(hot.v_out, f_im3_high).amplitude

    p_fund = amplitude_to_dbm(amp_fund) if amp_fund > 0 else -math.inf
    p_im3 = amplitude_to_dbm(amp_im3) if amp_im3 > 0 else -math.inf
    p_mirror = amplitude_to_dbm(amp_mirror) if amp_mirror > 0 else -math.inf
    p_im3_used = max(p_im3, p_mirror)
    if p_im3_used < MEASUREMENT_FLOOR_DBM:
        raise ImmeasurableIM3Error(
            f"IM3 ray below {MEASUREMENT_FLOOR_DBM} dBm; the device has no "
            f"cubic nonlinearity")

    cold = simulate(s.with_rf_power(per_tone_power_dbm - 20.0))
    amp_cold = bin_amplitude(cold.v_out, f_fund).amplitude
    gain_hot = p_fund - per_tone_power_dbm
    gain_cold = amplitude_to_dbm(amp_cold) - (per_tone_power_dbm - 20.0)
    if gain_cold - gain_hot > 0.5:
        raise StimulusTooHotError(
            f"gain is {gain_cold - gain_hot:.2f} dB into compression at "
            f"{per_tone_power_dbm} dBm per tone; reduce the drive")

    delta = p_fund - p_im3_used
    return TwoToneResult(per_tone_dbm=per_tone_power_dbm, p_fund_dbm=p_fund,
                         p_im3_dbm=p_im3_used, p_im3_mirror_dbm=p_mirror,
                         delta_db=delta,
                         iip3_dbm=delta / 2.0 + per_tone_power_dbm)


def measure_isolation(s: Scenario) -> float:
    """LO-to-RF isolation in dB: LO ray power at the RF port over injected LO."""
    a_lo = s.lo_tone.peak_amplitude()
    if a_lo <= 0:
        raise WrongStimulusError("isolation needs an active LO tone")
    result = simulate(s)
    a_leak = bin_amplitude(result.v_rf_port, s.f_lo).amplitude
    ratio = a_leak / a_lo
    if 20.0 * math.log10(max(ratio, 1e-300)) <= ISOLATION_FLOOR_DB:
        return ISOLATION_FLOOR_DB
    return 20.0 * math.log10(ratio)


def noise_figure_from_densities(output_density: float, input_density: float,
                                gain_db: float) -> float:
    """Power-ratio noise figure from voltage noise densities and gain.

    NF = 10*log10(N_out^2 / (N_in^2 * G_power)), i.e. the output noise power
    density over the input noise power density times the power gain.
    """
    if not (output_density > 0 and input_density > 0):
        raise ValueError("noise densities must be > 0")
    g_amp = 10.0 ** (gain_db / 20.0)
    return 20.0 * math.log10(output_density / (input_density * g_amp))


def measure_noise_figure(s: Scenario, settings: NoiseFigureSettings) -> NoiseFigureResult:
    """Noise figure of a scenario with injected input noise.

    The input density is estimated at the RF port, the output density at the
    mixer output, both with stimulus rays masked out of the averaging.  The
    conversion gain is measured on a noise-free clone carrying a small probe
    tone, so the same procedure covers any device configuration.
    """
    if not s.input_noise_density > 0:
        raise ValueError("scenario has zero input noise density; nothing to measure")
    in_center = settings.input_band_center if settings.input_band_center is not None \
        else s.f_rf
    out_center = settings.output_band_center if settings.output_band_center is not None \
        else s.f_if
    f_signal_out = settings.signal_out_frequency if settings.signal_out_frequency \
        is not None else s.f_if

    result = simulate(s)
    stimulus = [t.frequency for t in s.rf_tones] + [s.f_lo]
    out_rays = list(stimulus)
    for f in (t.frequency for t in s.rf_tones):
        out_rays += [abs(f - s.f_lo), f + s.f_lo]
    k = 1
    while k * s.f_lo <= out_center + settings.output_band_width:
        out_rays.append(k * s.f_lo)
        k += 2

    n_in = _band_noise_stats(result.v_rf_port, in_center,
                             settings.input_band_width, settings.segments,
                             mask_frequencies=stimulus)
    n_out = _band_noise_stats(result.v_out, out_center,
                              settings.output_band_width, settings.segments,
                              mask_frequencies=out_rays)
    if n_in.density <= 0:
        raise ValueError("input noise density estimate is zero")

    probe_tone = ToneSpec(frequency=s.f_rf, power_dbm=settings.probe_power_dbm,
                          phase=s.rf_tones[0].phase)
    probe = replace(s, rf_tones=(probe_tone,), input_noise_density=0.0,
                    input_noise_band=None)
    probe_result = simulate(probe)
    g_amp = bin_amplitude(probe_result.v_out, f_signal_out).amplitude \
        / probe_tone.peak_amplitude()
    if g_amp <= 0:
        raise WrongStimulusError(
            f"no conversion ray at {f_signal_out!r}; check signal_out_frequency")
    gain_db = 20.0 * math.log10(g_amp)

    nf = noise_figure_from_densities(n_out.density, n_in.density, gain_db)
    warning = None
    spread = max(n_in.relative_spread, n_out.relative_spread)
    if spread > 0.10:
        warning = (f"unstable estimate: periodogram spread {spread:.1%} exceeds "
                   f"10%; increase segments or bandwidth")
    return NoiseFigureResult(nf_db=nf, input_density=n_in.density,
                             output_density=n_out.density, gain_db=gain_db,
                             warning=warning)


# ---------------------------------------------------------------------------
# Report assembly


@dataclass(frozen=True)
class ReferenceDesign:
    """Published 65 nm single-balanced design this bench is calibrated against."""

    technology_um: float = 0.065
    rf_ghz: float = 1.9
    conversion_gain_db: float = 12.42
    noise_figure_db: float = 8.92
    p1db_dbm: float = -11.5
    iip3_dbm: float = 6.0
    power_w: float = 2.0e-3
    # Reported operating-point noise densities and simulated gain, used for
    # the formula cross-check of the noise figure.
    input_noise_density: float = 0.383e-9
    output_noise_density: float = 4.266e-9
    simulated_gain_db: float = 12.425


REFERENCE_65NM = ReferenceDesign()


def reference_formula_noise_figure(ref: ReferenceDesign = REFERENCE_65NM) -> float:
    """Noise figure implied by the reference design's own densities and gain."""
    return noise_figure_from_densities(ref.output_noise_density,
                                       ref.input_noise_density,
                                       ref.simulated_gain_db)


@dataclass(frozen=True)
class MeasurementPlan:
    """Which measurements to run and with what sweep settings."""

    measurements: Tuple[str, ...] = ("cg", "p1db", "iip3", "isolation", "nf", "power")
    p1db_range: Tuple[float, float] = (-40.0, 0.0)
    p1db_step: float = 0.5
    iip3_per_tone_dbm: float = -40.0
    iip3_tone_spacing: Optional[float] = None
    nf_settings: Optional[NoiseFigureSettings] = None

    KNOWN = ("cg", "p1db", "iip3", "isolation", "nf", "power")

    def __post_init__(self):
        unknown = [m for m in self.measurements if m not in self.KNOWN]
        if unknown:
            raise ValidationError(f"unknown measurements {unknown!r}")
        if not self.measurements:
            raise ValidationError("at least one measurement must be requested")


@dataclass(frozen=True)
class MetricsReport:
    """Measured figures of merit beside the reference design values.

    A field is None when its measurement was not requested or failed; the
    failure reason is then recorded in ``errors`` under the measurement name.
    """

    conversion_gain_db: Optional[float] = None
    p1db_dbm: Optional[float] = None
    iip3_dbm: Optional[float] = None
    isolation_db: Optional[float] = None
    noise_figure_db: Optional[float] = None
    power_w: Optional[float] = None
    analytic_gain_db: Optional[float] = None
    errors: Dict[str, str] = field(default_factory=dict)
    details: Dict[str, object] = field(default_factory=dict)
    reference: ReferenceDesign = REFERENCE_65NM


def build_report(s: Scenario, plan: MeasurementPlan,
                 nf_scenario: Optional[Scenario] = None) -> MetricsReport:
    """Run the selected measurements, recording per-field failures.

    One failing measurement never aborts the others.  ``nf_scenario`` lets
    the caller supply a dedicated (typically longer) record for the noise
    measurement; it defaults to the main scenario.
    """
    from .engine import analytic_conversion_gain

    values: Dict[str, Optional[float]] = {}
    errors: Dict[str, str] = {}
    details: Dict[str, object] = {}

    def attempt(name, fn):
        try:
            return fn()
        except (MixbenchError, ValueError) as exc:
            errors[name] = f"{type(exc).__name__}: {exc}"
            return None

    if "cg" in plan.measurements:
        values["cg"] = attempt("cg", lambda: measure_conversion_gain(s))
    if "p1db" in plan.measurements:
        res = attempt("p1db", lambda: measure_p1db(s, plan.p1db_range, plan.p1db_step))
        if res is not None:
            values["p1db"] = res.p1db_dbm
            details["p1db"] = res
    if "iip3" in plan.measurements:
        def run_iip3():
            two = two_tone_variant(s, plan.iip3_tone_spacing)
            return measure_iip3(two, plan.iip3_per_tone_dbm)
        res = attempt("iip3", run_iip3)
        if res is not None:
            values["iip3"] = res.iip3_dbm
            details["iip3"] = res
    if "isolation" in plan.measurements:
        values["isolation"] = attempt("isolation", lambda: measure_isolation(s))
    if "nf" in plan.measurements:
        def run_nf():
            if plan.nf_settings is None:
                raise ValidationError("noise figure requested without nf_settings")
            return measure_noise_figure(nf_scenario if nf_scenario is not None else s,
                                        plan.nf_settings)
        res = attempt("nf", run_nf)
        if res is not None:
            values["nf"] = res.nf_db
            details["nf"] = res
    if "power" in plan.measurements:
        values["power"] = attempt("power", lambda: dc_power(s.mixer.bias))

    return MetricsReport(
        conversion_gain_db=values.get("cg"),
        p1db_dbm=values.get("p1db"),
        iip3_dbm=values.get("iip3"),
        isolation_db=values.get("isolation"),
        noise_figure_db=values.get("nf"),
        power_w=values.get("power"),
        analytic_gain_db=analytic_conversion_gain(s.mixer),
        errors=errors,
        details=details,
    )
