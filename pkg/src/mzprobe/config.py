"""Validated run configuration with JSON round-trip and shipped presets.

All field names carry explicit units; nothing is inferred. A RunConfig
fans out into the core dataclasses via the to_* methods, and
design_point() assembles the designer's operating point from the cloud,
the heating budget and the interferometer settings. resolved() returns
the plain dict that output files embed as provenance.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from . import designer
from .atoms import AtomCloud, ProbeSpec, photon_energy
from .detection import DetectorSpec, NoiseConfig
from .errors import ConfigError
from .fields import InterferometerSpec
from .lockin import LockInConfig
from .servo import ServoConfig, VibrationSpectrum


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CloudSettings(_Model):
    atom_count: float = 1e5
    extent_x_m: float = 50e-6
    extent_y_m: float = 2e-6
    extent_z_m: float = 2e-6
    probe_axis: str = "z"
    lifetime_s: float = 1.0


class ProbeSettings(_Model):
    wavelength_m: float = 780.241e-9
    power_w: float = 1e-9


class InterferometerSettings(_Model):
    splitter_ratio: float = 0.5
    operating_phase_rad: float = 0.0
    probe_arm_loss: float = 1.0
    lo_arm_loss: float = 1.0
    mode_matching_visibility: float = 1.0
    probe_attenuation: float = 1.0
    lo_power_w: float = 1e-3
    modulation_frequency_hz: float = 2.5e6
    modulation_depth: float | None = None


class DetectorSettings(_Model):
    quantum_efficiency: float = 0.72
    nep_w_per_rthz: float = 7e-12
    gain: float = 0.5
    one_over_f_corner_hz: float = 0.0
    shot_noise_limited_band_hz: tuple[float, float] = (0.5e6, 10e6)
    power_range_w: tuple[float, float] = (1e-6, 5e-3)


class NoiseSettings(_Model):
    intensity_noise_rin_per_rthz: float = 0.0
    common_mode_rejection_db: float = 50.0
    enable_shot: bool = True
    enable_nep: bool = False
    enable_one_over_f: bool = False
    enable_rin: bool = False


class LockinSettings(_Model):
    bandwidth_hz: float = 1e3
    reference_phase_rad: float = 0.0
    filter_order: int = 4
    output_sample_decimation: int = 0


class ServoSettings(_Model):
    proportional_gain: float = 0.5
    integral_gain_per_s: float = 1e5
    piezo_range_rad: float = 60.0
    loop_rate_hz: float = 128e3
    residual_floor_rad_per_rthz: float = 2e-4
    setpoint_rad: float = 0.0


class VibrationSettings(_Model):
    tones: tuple[tuple[float, float], ...] = ((50.0, 0.3), (150.0, 0.08))
    broadband_density_rad_per_rthz: float = 8e-4
    broadband_cutoff_hz: float = 1e3


class DesignSettings(_Model):
    target_optical_depth: float = 0.01
    modulation_penalty: float = 0.51
    loss_factor: float = 0.77
    max_scattering_rate_hz: float | None = None
    fractional_signal: float = 1.0


class ExperimentSettings(_Model):
    lo_powers_w: tuple[float, ...] = tuple(float(p) for p in np.geomspace(70e-6, 3e-3, 8))
    probe_powers_w: tuple[float, ...] = tuple(float(p) for p in np.geomspace(1e-10, 1e-8, 8))
    noise_seeds: int = 100
    snr_seeds: int = 20
    trace_duration_s: float = 0.15
    scan_points: int = 25
    scan_range_rad: float = 2.5 * math.pi
    locked_duration_s: float = 1.0
    locked_replicates: int = 5


class SimulateSettings(_Model):
    duration_s: float = 0.05


class RunConfig(_Model):
    name: str = "custom"
    seed: int = 12345
    sample_rate_hz: float = 6.4e6
    threads: int = 1
    out_dir: str | None = None
    cloud: CloudSettings = CloudSettings()
    probe: ProbeSettings = ProbeSettings()
    interferometer: InterferometerSettings = InterferometerSettings()
    detector_a: DetectorSettings = DetectorSettings()
    detector_b: DetectorSettings = DetectorSettings()
    noise: NoiseSettings = NoiseSettings()
    lockin: LockinSettings = LockinSettings()
    servo: ServoSettings = ServoSettings()
    vibration: VibrationSettings = VibrationSettings()
    design: DesignSettings = DesignSettings()
    experiment: ExperimentSettings = ExperimentSettings()
    simulate: SimulateSettings = SimulateSettings()

    def to_cloud(self) -> AtomCloud:
        return AtomCloud(**self.cloud.model_dump())

    def to_probe(self, input_power_w: float = None) -> ProbeSpec:
        cloud = self.to_cloud()
        detuning = designer.detuning_for_depth(
            self.design.target_optical_depth, cloud, self.probe.wavelength_m)
        power = self.probe.power_w if input_power_w is None else input_power_w
        return ProbeSpec(self.probe.wavelength_m, detuning, power)

    def _detector(self, settings: DetectorSettings) -> DetectorSpec:
        return DetectorSpec(**settings.model_dump())

    def to_detector_a(self) -> DetectorSpec:
        return self._detector(self.detector_a)

    def to_detector_b(self) -> DetectorSpec:
        return self._detector(self.detector_b)

    def to_noise(self) -> NoiseConfig:
        return NoiseConfig(**self.noise.model_dump())

    def to_lockin(self) -> LockInConfig:
        return LockInConfig(reference_frequency_hz=self.interferometer.modulation_frequency_hz,
                            **self.lockin.model_dump())

    def to_servo(self) -> ServoConfig:
        return ServoConfig(**self.servo.model_dump())

    def to_vibration(self) -> VibrationSpectrum:
        return VibrationSpectrum(**self.vibration.model_dump())

    def to_interferometer(self) -> InterferometerSpec:
        fields = self.interferometer.model_dump()
        fields.pop("lo_power_w")
        fields.pop("modulation_frequency_hz")
        fields.pop("modulation_depth")
        return InterferometerSpec(**fields)

    def modulation_depth(self) -> float:
        if self.interferometer.modulation_depth is not None:
            return self.interferometer.modulation_depth
        return designer.default_modulation_depth(self.design.modulation_penalty)

    def photon_energy_j(self) -> float:
        return photon_energy(self.probe.wavelength_m)

    def design_point(self) -> designer.DesignPoint:
        return designer.design_point(
            self.to_cloud(), self.probe.wavelength_m,
            target_optical_depth=self.design.target_optical_depth,
            lo_power_w=self.interferometer.lo_power_w,
            bandwidth_hz=self.lockin.bandwidth_hz,
            modulation_depth=self.modulation_depth(),
            fractional_signal=self.design.fractional_signal,
            max_scattering_rate_hz=self.design.max_scattering_rate_hz,
        )

    def resolved(self) -> dict:
        # output location is plumbing, not physics; keep files relocatable
        data = self.model_dump(mode="json")
        data.pop("out_dir", None)
        return data


# V * sqrt(probe_arm_loss) = 0.77 for the bench preset, so the ideal SNR
# curve sits exactly 30% above the simulated chain.
_BENCH_LOSS = 0.77**2 / 0.9**2

SHIPPED_CONFIGS = {
    "worked_example": {"name": "worked_example"},
    "bench_imperfect": {
        "name": "bench_imperfect",
        "interferometer": {"mode_matching_visibility": 0.9, "probe_arm_loss": _BENCH_LOSS},
    },
}


def shipped_config_names() -> tuple:
    return tuple(sorted(SHIPPED_CONFIGS))


def load_config(source=None) -> RunConfig:
    """Build a RunConfig from a shipped preset name, a JSON path, or a dict."""
    if source is None:
        source = "worked_example"
    try:
        if isinstance(source, dict):
            return RunConfig.model_validate(source)
        if isinstance(source, RunConfig):
            return source
        source = str(source)
        if source in SHIPPED_CONFIGS:
            return RunConfig.model_validate(SHIPPED_CONFIGS[source])
        path = Path(source)
        if not path.exists():
            raise ConfigError(
                f"no config file {source!r} and no shipped config of that name; "
                f"shipped: {', '.join(shipped_config_names())}")
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
