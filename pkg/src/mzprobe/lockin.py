"""Software lock-in: reference mixing, low-pass filtering, rms estimation.

The demodulator multiplies the input by sqrt(2) * cos(w_m t + ref_phase)
(and by -sqrt(2) * sin(...) for the quadrature), then low-pass filters, so
an input tone A * cos(w_m t + theta) reads (A / sqrt(2)) * cos(theta -
ref_phase) at dc: the rms convention.

The low-pass stage is a boxcar decimator followed by a Butterworth section
whose cutoff is calibrated numerically so the one-sided equivalent noise
bandwidth of the cascade equals the configured bandwidth B exactly. With
that convention, white input noise of one-sided density S reads out with
variance S * B, which is what ties measured noise floors to the analytic
shot-noise expressions with no filter-shape fudge factors. The boxcar
factor is chosen so no mixing image (the 2 w_m product folded by the
decimation) lands within 32 B of dc.

Filter settling: rms estimates discard the first 10 / B seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal
from scipy.optimize import brentq

from .detection import PhotocurrentTrace
from .errors import InsufficientDataError, InvalidInputError

SETTLE_TIME_CONSTANTS = 10.0


@dataclass(frozen=True)
class LockInConfig:
    """Demodulator settings.

    reference_frequency_hz    demodulation frequency (w_m / 2 pi)
    reference_phase_rad       phase of the cosine reference
    bandwidth_hz              equivalent noise bandwidth B of the output
    filter_order              order of the Butterworth section
    output_sample_decimation  extra decimation applied after filtering,
                              relative to the internal anti-aliased rate;
                              0 picks about 16 output samples per 1/B
    """

    reference_frequency_hz: float
    bandwidth_hz: float
    reference_phase_rad: float = 0.0
    filter_order: int = 4
    output_sample_decimation: int = 0

    def __post_init__(self):
        if self.reference_frequency_hz <= 0:
            raise InvalidInputError("reference_frequency_hz must be positive")
        if not 0.0 < self.bandwidth_hz < self.reference_frequency_hz:
            raise InvalidInputError("bandwidth must sit in (0, reference_frequency)")
        if self.filter_order < 1:
            raise InvalidInputError("filter_order must be at least 1")
        if self.output_sample_decimation < 0:
            raise InvalidInputError("output_sample_decimation must be non-negative")


@dataclass(frozen=True)
class DemodResult:
    """Demodulated output streams.

    inphase is the signal quadrature (the measurement); quadrature is kept
    as a diagnostic. settle_time_s marks the span rms estimates discard.
    """

    inphase: np.ndarray
    quadrature: np.ndarray
    sample_rate_hz: float
    settle_time_s: float

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(len(self.inphase)) / self.sample_rate_hz

    @property
    def settle_samples(self) -> int:
        return min(len(self.inphase), int(math.ceil(self.settle_time_s * self.sample_rate_hz)))

    @property
    def settled_inphase(self) -> np.ndarray:
        return self.inphase[self.settle_samples:]

    @property
    def settled_quadrature(self) -> np.ndarray:
        return self.quadrature[self.settle_samples:]


@lru_cache(maxsize=64)
def _calibrated_lowpass(bandwidth_hz: float, order: int, sample_rate_hz: float):
    """Butterworth sos whose measured one-sided ENBW equals bandwidth_hz.

    The ENBW of the digital filter is taken from its impulse response h via
    Parseval: ENBW = fs * sum(h^2) / (2 * (sum h)^2). The cutoff is found by
    root-finding around the analytic continuous-time value
    ENBW = fc * pi / (2 n sin(pi / 2n)).
    """
    guess = bandwidth_hz / (math.pi / (2 * order * math.sin(math.pi / (2 * order))))
    n_imp = int(min(2_000_000, max(256, round(40.0 * sample_rate_hz / bandwidth_hz))))
    impulse = np.zeros(n_imp)
    impulse[0] = 1.0

    def enbw_error(cutoff):
        sos = signal.butter(order, cutoff, "lowpass", fs=sample_rate_hz, output="sos")
        h = signal.sosfilt(sos, impulse)
        return sample_rate_hz * np.sum(h * h) / (2.0 * np.sum(h) ** 2) - bandwidth_hz

    lo, hi = 0.5 * guess, min(1.6 * guess, 0.49 * sample_rate_hz)
    cutoff = brentq(enbw_error, lo, hi, xtol=1e-9 * bandwidth_hz)
    return signal.butter(order, cutoff, "lowpass", fs=sample_rate_hz, output="sos"), cutoff


def _boxcar_factor(sample_rate_hz: float, reference_hz: float, bandwidth_hz: float) -> int:
    """Largest decimation keeping rate >= ~128 B and mixer images off dc.

    The mixed signal carries tones at w_m (detector dc offsets) and 2 w_m
    (the demodulated tone's sum term); the boxcar folds both. Keep their
    aliases at least 32 B from dc so the output filter buries them.
    """
    factor = max(1, int(sample_rate_hz / (128.0 * bandwidth_hz)))
    while factor > 1:
        decimated = sample_rate_hz / factor
        images = (math.remainder(reference_hz, decimated),
                  math.remainder(2.0 * reference_hz, decimated))
        if min(abs(f) for f in images) >= 32.0 * bandwidth_hz:
            break
        factor -= 1
    return factor


def stopband_attenuation_db(config: LockInConfig, offset_hz: float) -> float:
    """Guaranteed attenuation of a tone offset_hz away from the reference.

    The Butterworth section gives |H|^2 = 1 / (1 + (f / fc)^(2 n)), so the
    bound is 10 log10(1 + (offset / fc)^(2 n)) with fc the ENBW-calibrated
    cutoff (about B / 1.026 for order 4). At 5 B offset and order 4 this is
    about 56 dB; the boxcar stage only adds to it.
    """
    enbw_ratio = math.pi / (2 * config.filter_order * math.sin(math.pi / (2 * config.filter_order)))
    cutoff = config.bandwidth_hz / enbw_ratio
    return 10.0 * math.log10(1.0 + (offset_hz / cutoff) ** (2 * config.filter_order))


def demodulate(trace: PhotocurrentTrace, config: LockInConfig) -> DemodResult:
    """Mix the trace with the reference and low-pass to the noise bandwidth B.

    A tone A cos(w_m t + theta) lands at dc as (A / sqrt 2) cos(theta -
    ref_phase) in the in-phase stream and (A / sqrt 2) sin(theta - ref_phase)
    in the quadrature stream.
    """
    fs = trace.sample_rate_hz
    if config.reference_frequency_hz >= fs / 2.0:
        raise InvalidInputError("reference frequency must sit below Nyquist")

    t = trace.times_s
    w = 2.0 * math.pi * config.reference_frequency_hz
    ref_i = math.sqrt(2.0) * np.cos(w * t + config.reference_phase_rad)
    ref_q = -math.sqrt(2.0) * np.sin(w * t + config.reference_phase_rad)
    mixed_i = trace.samples * ref_i
    mixed_q = trace.samples * ref_q

    factor = _boxcar_factor(fs, config.reference_frequency_hz, config.bandwidth_hz)
    if factor > 1:
        usable = (len(mixed_i) // factor) * factor
        mixed_i = mixed_i[:usable].reshape(-1, factor).mean(axis=1)
        mixed_q = mixed_q[:usable].reshape(-1, factor).mean(axis=1)
    fs_mid = fs / factor

    sos, _ = _calibrated_lowpass(config.bandwidth_hz, config.filter_order, fs_mid)
    filt_i = signal.sosfilt(sos, mixed_i)
    filt_q = signal.sosfilt(sos, mixed_q)

    if config.output_sample_decimation > 0:
        keep = config.output_sample_decimation
    else:
        keep = max(1, int(fs_mid / (16.0 * config.bandwidth_hz)))
    return DemodResult(
        inphase=filt_i[::keep],
        quadrature=filt_q[::keep],
        sample_rate_hz=fs_mid / keep,
        settle_time_s=SETTLE_TIME_CONSTANTS / config.bandwidth_hz,
    )


def noise_floor(trace: PhotocurrentTrace, config: LockInConfig) -> float:
    """Rms of the settled demodulated output [A].

    Standard deviation after discarding the settling span. Removing the
    sample mean also removes its variance S(0)/T = var/(B*T), so the
    estimate is rescaled by 1/sqrt(1 - 1/(B*T)) with T the settled span;
    without this a white floor would read low by ~0.5/(B*T).
    """
    settle = SETTLE_TIME_CONSTANTS / config.bandwidth_hz
    if trace.duration_s < settle:
        raise InsufficientDataError(
            f"trace of {trace.duration_s:.4g} s is shorter than {settle:.4g} s "
            f"(10 filter time constants at B = {config.bandwidth_hz:g} Hz)"
        )
    result = demodulate(trace, config)
    settled = result.settled_inphase
    span = len(settled) / result.sample_rate_hz
    bt = config.bandwidth_hz * span
    if len(settled) < 8 or bt <= 2.0:
        raise InsufficientDataError("settled span too short for an rms estimate")
    return float(np.std(settled)) / math.sqrt(1.0 - 1.0 / bt)
