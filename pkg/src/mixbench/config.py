"""Run configuration: YAML parsing, defaults merging, scenario construction.

A config file describes one scenario plus the measurements to run on it.
Frequencies are given in Hz exactly as a user thinks about the design
(1.9 GHz RF, 1.8 GHz LO); the scaled internal grid is derived automatically
and reported in the run metadata.  Every omitted field falls back to the
built-in 65 nm calibration defaults, so an empty file is a complete run.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import yaml

from .devices import (
    BiasParams,
    LeakageParams,
    LoadParams,
    SwitchParams,
    TransconductorParams,
)
from .engine import FilterSpec, MixerParams, ScaledPlan, Scenario
from .errors import ValidationError
from .metrics import MeasurementPlan, NoiseFigureSettings
from .signals import ToneSpec

ALL_MEASUREMENTS = ("cg", "p1db", "iip3", "isolation", "nf",
                    "harmonics", "transient", "power")

# Calibration defaults: 34 mA/V transconductor with a cubic term sized for a
# -11.5 dBm compression point, 220 ohm loads for 13.55 dB of small-signal
# gain, LO coupling sized for -37.7 dB isolation, and the 1.9/1.8/0.1 GHz
# frequency plan.
DEFAULTS: Dict[str, Any] = {
    "scenario": {
        "rf_hz": 1.9e9,
        "lo_hz": 1.8e9,
        "rf_power_dbm": -30.0,
        "rf_phase_rad": 0.0,
        "lo_amplitude_v": 1.0,
        "lo_phase_rad": None,  # null -> half-sample offset (recommended)
        "mixer": {
            "gm": 0.034,        # A/V
            "v_gs1": 0.6,       # V
            "a2": 0.0,          # A/V^2
            "a3": -0.696,       # A/V^3
            "rd": 220.0,        # ohm
            "vdd": 1.8,         # V
            "i_bias": 1.111e-3, # A
            "kappa": 0.01303,   # LO->RF voltage coupling
            "switch_mode": "ideal_sign",
            "switch_v_sw": 0.05,  # V, smooth-mode transition scale
        },
        "noise": {
            "seed": 1729,
            "input_density": 0.383e-9,  # V/sqrt(Hz)
            "bandwidth_hz": None,        # null -> white across the whole grid
        },
        "if_filter": {
            "enabled": True,
            "kind": "lowpass2",
            "cutoff_hz": 2.0e8,
        },
        "grid": {
            "bins_per_unit": 4,
            "samples_per_lo_period": 128,
        },
    },
    "measurements": list(ALL_MEASUREMENTS),
    "sweeps": {
        "p1db": {"start_dbm": -40.0, "stop_dbm": 0.0, "step_db": 0.5},
        # Tone spacing IF/4 keeps both IM3 products clear of the spurs the
        # cubic makes out of the tones and the leaked LO.
        "iip3": {"per_tone_dbm": -40.0, "tone_spacing_hz": 2.5e7},
        "nf": {
            "segments": 32,
            "band_width_hz": 1.5e8,
            "probe_power_dbm": -40.0,
            "grid": {"bins_per_unit": 2048, "samples_per_lo_period": 32},
        },
        "harmonics": {"order": 5},
        "transient": {"decimation": 1},
    },
    "output": {"format": "csv"},
}


def _merge(defaults: Any, override: Any, path: str) -> Any:
    """Field-wise merge of a user mapping onto the defaults tree.

    Unknown keys are rejected with their full path so typos surface early.
    """
    if isinstance(defaults, dict):
        if not isinstance(override, dict):
            raise ValidationError(f"config field {path or '<root>'} must be a mapping")
        merged = {}
        for key, default_value in defaults.items():
            if key in override:
                merged[key] = _merge(default_value, override[key],
                                     f"{path}.{key}" if path else key)
            else:
                merged[key] = copy.deepcopy(default_value)
        unknown = set(override) - set(defaults)
        if unknown:
            where = path or "<root>"
            raise ValidationError(
                f"unknown config key(s) {sorted(unknown)!r} under {where}")
        return merged
    return copy.deepcopy(override)


@dataclass(frozen=True)
class RunConfig:
    """Fully merged, validated run description."""

    raw: Dict[str, Any]

    @property
    def measurements(self) -> Tuple[str, ...]:
        return tuple(self.raw["measurements"])

    @property
    def output_format(self) -> str:
        return self.raw["output"]["format"]

    @property
    def seed(self) -> int:
        return int(self.raw["scenario"]["noise"]["seed"])

    def with_seed(self, seed: int) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["scenario"]["noise"]["seed"] = int(seed)
        return RunConfig(raw=raw)

    def with_output_format(self, fmt: str) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        raw["output"]["format"] = fmt
        return RunConfig(raw=raw)

    def parameter_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def effective_yaml(self) -> str:
        return yaml.safe_dump(self.raw, sort_keys=True, default_flow_style=False)


def from_dict(data: Optional[Dict[str, Any]]) -> RunConfig:
    """Merge a (possibly empty) user mapping onto the defaults and validate."""
    merged = _merge(DEFAULTS, data or {}, "")
    cfg = RunConfig(raw=merged)
    _validate(cfg)
    return cfg


def load_config(path: str) -> RunConfig:
    """Load a YAML config file; an empty file yields the full default run."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path!r}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        detail = str(exc)
        raise ValidationError(f"cannot parse config {path!r}: {detail}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError(f"config {path!r} must be a mapping at top level")
    return from_dict(data)


def loads_config(text: str) -> RunConfig:
    data = yaml.safe_load(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError("config must be a mapping at top level")
    return from_dict(data)


def _validate(cfg: RunConfig):
    meas = cfg.raw["measurements"]
    if not isinstance(meas, (list, tuple)) or not meas:
        raise ValidationError("measurements must be a non-empty list")
    unknown = [m for m in meas if m not in ALL_MEASUREMENTS]
    if unknown:
        raise ValidationError(
            f"unknown measurement(s) {unknown!r}; choose from {ALL_MEASUREMENTS}")
    fmt = cfg.raw["output"]["format"]
    if fmt not in ("csv", "json"):
        raise ValidationError(f"output format must be csv or json, got {fmt!r}")
    # Building the scenario runs the full coherence/Nyquist validation.
    build_scenario(cfg)
    if "nf" in meas:
        build_nf_setup(cfg)
    if "iip3" in meas:
        iip3_tone_spacing_units(cfg)


def _mixer_from(cfg: RunConfig) -> MixerParams:
    m = cfg.raw["scenario"]["mixer"]
    return MixerParams(
        transconductor=TransconductorParams(gm=float(m["gm"]), v_gs1=float(m["v_gs1"]),
                                            a2=float(m["a2"]), a3=float(m["a3"])),
        switch=SwitchParams(mode=m["switch_mode"], v_sw=float(m["switch_v_sw"])),
        load=LoadParams(rd=float(m["rd"])),
        bias=BiasParams(vdd=float(m["vdd"]), i_bias=float(m["i_bias"])),
        leakage=LeakageParams(kappa=float(m["kappa"])),
    )


def _plan_from(cfg: RunConfig, grid_section: Dict[str, Any]) -> ScaledPlan:
    sc = cfg.raw["scenario"]
    return ScaledPlan(f_rf_hz=float(sc["rf_hz"]), f_lo_hz=float(sc["lo_hz"]),
                      bins_per_unit=int(grid_section["bins_per_unit"]),
                      samples_per_lo_period=int(grid_section["samples_per_lo_period"]))


def _scenario_on_plan(cfg: RunConfig, plan: ScaledPlan) -> Scenario:
    sc = cfg.raw["scenario"]
    rf_tone = ToneSpec(frequency=float(plan.rf_bin),
                       power_dbm=float(sc["rf_power_dbm"]),
                       phase=float(sc["rf_phase_rad"]))
    lo_phase = sc["lo_phase_rad"]
    lo_tone = ToneSpec(frequency=float(plan.lo_bin),
                       amplitude=float(sc["lo_amplitude_v"]),
                       phase=float(lo_phase) if lo_phase is not None
                       else plan.lo_half_sample_phase())
    noise = sc["noise"]
    band = None
    if noise["bandwidth_hz"] is not None:
        band = (0.0, float(noise["bandwidth_hz"]) / plan.hz_per_unit)
    if_filter = None
    filt = sc["if_filter"]
    if filt["enabled"]:
        if_filter = FilterSpec(kind=filt["kind"],
                               cutoff=float(filt["cutoff_hz"]) / plan.hz_per_unit)
    return Scenario(
        mixer=_mixer_from(cfg),
        grid=plan.grid(),
        rf_tones=(rf_tone,),
        lo_tone=lo_tone,
        noise_seed=int(noise["seed"]),
        input_noise_density=float(noise["input_density"]),
        input_noise_band=band,
        if_filter=if_filter,
        frequency_scale=plan.hz_per_unit,
    )


def build_plan(cfg: RunConfig) -> ScaledPlan:
    return _plan_from(cfg, cfg.raw["scenario"]["grid"])


def build_scenario(cfg: RunConfig) -> Scenario:
    """Main scenario on the metrics grid."""
    return _scenario_on_plan(cfg, build_plan(cfg))


def build_nf_setup(cfg: RunConfig) -> Tuple[Scenario, NoiseFigureSettings]:
    """Scenario and band settings for the noise-figure measurement.

    The noise measurement needs many periodogram bins per band, so it runs
    on its own, longer grid with the same mixer and frequency plan.
    """
    nf_cfg = cfg.raw["sweeps"]["nf"]
    plan = _plan_from(cfg, nf_cfg["grid"])
    scenario = _scenario_on_plan(cfg, plan)
    width = float(nf_cfg["band_width_hz"]) / plan.hz_per_unit
    settings = NoiseFigureSettings(
        input_band_width=width,
        output_band_width=width,
        segments=int(nf_cfg["segments"]),
        probe_power_dbm=float(nf_cfg["probe_power_dbm"]),
    )
    return scenario, settings


def iip3_tone_spacing_units(cfg: RunConfig) -> float:
    plan = build_plan(cfg)
    spacing_hz = float(cfg.raw["sweeps"]["iip3"]["tone_spacing_hz"])
    return plan.to_internal(spacing_hz, "IIP3 tone spacing")


def measurement_plan(cfg: RunConfig) -> MeasurementPlan:
    """Translate the config's sweep sections into a MeasurementPlan."""
    sw = cfg.raw["sweeps"]
    nf_settings = None
    if "nf" in cfg.measurements:
        _, nf_settings = build_nf_setup(cfg)
    core = tuple(m for m in cfg.measurements if m in MeasurementPlan.KNOWN)
    return MeasurementPlan(
        measurements=core if core else ("cg",),
        p1db_range=(float(sw["p1db"]["start_dbm"]), float(sw["p1db"]["stop_dbm"])),
        p1db_step=float(sw["p1db"]["step_db"]),
        iip3_per_tone_dbm=float(sw["iip3"]["per_tone_dbm"]),
        iip3_tone_spacing=iip3_tone_spacing_units(cfg) if "iip3" in cfg.measurements
        else None,
        nf_settings=nf_settings,
    )
