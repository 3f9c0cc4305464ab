"""Photodetection: optical power in, sampled photocurrent out.

A detector of quantum efficiency eta and current gain g turns optical power
P into a mean current g * (eta e / h nu) * P. Noise sources, each gated by a
flag and synthesized from its own seeded stream:

  shot     white Gaussian, one-sided density S = g^2 * 2e * (eta e / h nu) P
           [A^2/Hz]; Gaussian is the declared model since the photon flux
           at uW..mW powers is far above 1e6 per sample
  nep      detector noise floor, white, amplitude density g*(eta e/h nu)*NEP
  1/f      density S_nep * (corner / f) below the corner frequency,
           synthesized as a bank of octave-spaced one-pole low-pass
           sections driven by white noise; the bank tracks a 1/f slope
           within a fraction of a dB per octave between its end poles
  rin      fractional source-power modulation delta(t), identical across
           detectors fed the same `shared_rin` array, scaled by each
           detector's mean current

Balanced subtraction returns a - b plus a common-mode leakage term
(a + b)/2 * 10^(-rejection_db/20), so anticorrelated signal doubles while
correlated intensity noise drops by the rejection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.constants import e

from .errors import InvalidInputError

# Resolves the first few modulation sidebands of a 2.5 MHz drive with margin.
DEFAULT_SAMPLE_RATE_HZ = 25e6


@dataclass(frozen=True)
class DetectorSpec:
    """One photodiode channel.

    quantum_efficiency        photon-to-electron conversion eta
    nep_w_per_rthz            noise equivalent power [W/sqrt(Hz)]
    gain                      aggregate current gain g (output A per photo-A)
    one_over_f_corner_hz      corner below which the electronic noise rises
    shot_noise_limited_band_hz  (low, high) band where shot noise dominates
    power_range_w             (low, high) usable optical power range
    """

    quantum_efficiency: float
    nep_w_per_rthz: float = 0.0
    gain: float = 1.0
    one_over_f_corner_hz: float = 0.0
    shot_noise_limited_band_hz: tuple = (0.5e6, 10e6)
    power_range_w: tuple = (70e-6, 3e-3)

    def __post_init__(self):
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise InvalidInputError("quantum_efficiency must be in (0, 1]")
        if self.nep_w_per_rthz < 0:
            raise InvalidInputError("nep_w_per_rthz must be non-negative")
        if self.gain <= 0:
            raise InvalidInputError("gain must be positive")
        if self.one_over_f_corner_hz < 0:
            raise InvalidInputError("one_over_f_corner_hz must be non-negative")

    def responsivity_a_per_w(self, photon_energy_j: float) -> float:
        """Photocurrent per optical watt, eta * e / (h nu)."""
        return self.quantum_efficiency * e / photon_energy_j


@dataclass(frozen=True)
class NoiseConfig:
    """Noise-source switches and the correlated-intensity-noise model."""

    intensity_noise_rin_per_rthz: float = 0.0
    common_mode_rejection_db: float = 50.0
    enable_shot: bool = True
    enable_nep: bool = False
    enable_one_over_f: bool = False
    enable_rin: bool = False

    def __post_init__(self):
        if self.intensity_noise_rin_per_rthz < 0:
            raise InvalidInputError("RIN density must be non-negative")
        if self.common_mode_rejection_db < 0:
            raise InvalidInputError("common_mode_rejection_db must be non-negative")

    @classmethod
    def silent(cls) -> "NoiseConfig":
        """Every noise source off; photocurrent becomes deterministic."""
        return cls(enable_shot=False, enable_nep=False, enable_one_over_f=False,
                   enable_rin=False)


@dataclass(frozen=True)
class PhotocurrentTrace:
    """Uniformly sampled photocurrent [A] with its provenance."""

    samples: np.ndarray
    sample_rate_hz: float
    seed: object = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate_hz <= 0:
            raise InvalidInputError("sample_rate_hz must be positive")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate_hz


def flicker_noise(n_samples: int, sample_rate_hz: float, corner_hz: float,
                  density_at_corner: float, rng: np.random.Generator) -> np.ndarray:
    """Noise whose one-sided density is density_at_corner^2 * corner/f below corner.

    Sum of one-pole low-pass sections with octave-spaced poles from the
    corner down to roughly the trace length; scaled so the summed density
    matches the requested value at the corner frequency.
    """
    if corner_hz <= 0 or density_at_corner == 0 or n_samples == 0:
        return np.zeros(n_samples)
    f_min = max(sample_rate_hz / n_samples, corner_hz / 2**14)
    n_poles = max(1, int(math.ceil(math.log2(corner_hz / f_min))) + 1)
    poles = corner_hz / 2.0 ** np.arange(n_poles)

    def bank_density_sq(f):
        # One-sided density of the bank at f, unit white drive per section.
        total = 0.0
        for fp in poles:
            a = math.exp(-2.0 * math.pi * fp / sample_rate_hz)
            w = 2.0 * math.pi * f / sample_rate_hz
            total += (2.0 / sample_rate_hz) / abs(1.0 - a * np.exp(-1j * w)) ** 2
        return total

    out = np.zeros(n_samples)
    for fp in poles:
        a = math.exp(-2.0 * math.pi * fp / sample_rate_hz)
        out += signal.lfilter([1.0], [1.0, -a], rng.standard_normal(n_samples))
    scale = density_at_corner / math.sqrt(bank_density_sq(corner_hz))
    return scale * out


def photocurrent(power_w: np.ndarray, sample_rate_hz: float, spec: DetectorSpec,
                 noise: NoiseConfig, photon_energy_j: float, seed=None,
                 shared_rin: np.ndarray | None = None) -> PhotocurrentTrace:
    """Synthesize the sampled photocurrent for an optical power trace.

    power_w may be a scalar (constant illumination) or a per-sample array.
    White densities map to per-sample sigma via sigma^2 = S * fs / 2.
    Pass the same `shared_rin` fractional-modulation array to every
    detector lit by one laser to make their intensity noise correlated.
    Powers outside spec.power_range_w raise a saturation warning; the
    response model stays linear.
    """
    power = np.atleast_1d(np.asarray(power_w, dtype=float))
    if np.any(power < 0):
        raise InvalidInputError("optical power samples must be non-negative")
    if photon_energy_j <= 0:
        raise InvalidInputError("photon_energy_j must be positive")
    lo, hi = spec.power_range_w
    peak = float(power.max()) if power.size else 0.0
    if peak > hi or (peak > 0 and peak < lo):
        warnings.warn(
            f"mean optical power {peak:.3g} W outside the detector range "
            f"[{lo:.3g}, {hi:.3g}] W; linear response extrapolated",
            stacklevel=2,
        )

    rng = np.random.default_rng(seed)
    responsivity = spec.responsivity_a_per_w(photon_energy_j)
    n = len(power)

    current = spec.gain * responsivity * power
    if noise.enable_rin:
        delta = shared_rin
        if delta is None:
            delta = rin_modulation(noise, n, sample_rate_hz, rng)
        current = current * (1.0 + np.asarray(delta, dtype=float))
    if noise.enable_shot:
        sigma = spec.gain * np.sqrt(e * responsivity * power * sample_rate_hz)
        current = current + sigma * rng.standard_normal(n)
    if noise.enable_nep and spec.nep_w_per_rthz > 0:
        nep_density = spec.gain * responsivity * spec.nep_w_per_rthz
        current = current + nep_density * math.sqrt(sample_rate_hz / 2.0) * rng.standard_normal(n)
    if noise.enable_one_over_f:
        nep_density = spec.gain * responsivity * spec.nep_w_per_rthz
        current = current + flicker_noise(n, sample_rate_hz, spec.one_over_f_corner_hz,
                                          nep_density, rng)
    return PhotocurrentTrace(current, sample_rate_hz, seed=seed)


def rin_modulation(noise: NoiseConfig, n_samples: int, sample_rate_hz: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Fractional source-power modulation with the configured white density."""
    sigma = noise.intensity_noise_rin_per_rthz * math.sqrt(sample_rate_hz / 2.0)
    return sigma * rng.standard_normal(n_samples)


def balanced_subtract(a: PhotocurrentTrace, b: PhotocurrentTrace,
                      rejection_db: float = 50.0) -> PhotocurrentTrace:
    """Difference of two port currents with finite common-mode rejection.

    Returns (a - b) + eps * (a + b) / 2 with eps = 10^(-rejection_db / 20).
    Anticorrelated components double; independent noise powers add;
    correlated components survive only at the leakage eps.
    """
    if rejection_db < 0:
        raise InvalidInputError("rejection_db must be non-negative")
    if len(a.samples) != len(b.samples):
        raise InvalidInputError("traces must have equal length")
    if not math.isclose(a.sample_rate_hz, b.sample_rate_hz, rel_tol=1e-12):
        raise InvalidInputError("traces must share a sample rate")
    eps = 10.0 ** (-rejection_db / 20.0)
    out = (a.samples - b.samples) + eps * 0.5 * (a.samples + b.samples)
    return PhotocurrentTrace(out, a.sample_rate_hz, seed=(a.seed, b.seed))
