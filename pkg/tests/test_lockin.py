"""Digital lock-in: tone recovery, quadrature rejection, calibrated bandwidth."""

import math

import numpy as np
import pytest

from mzprobe.detection import PhotocurrentTrace
from mzprobe.errors import InsufficientDataError, InvalidInputError
from mzprobe.lockin import (SETTLE_TIME_CONSTANTS, LockInConfig, _boxcar_factor,
                            demodulate, noise_floor, stopband_attenuation_db)

FS = 6.4e6
F_REF = 2.5e6
CONFIG = LockInConfig(reference_frequency_hz=F_REF, bandwidth_hz=1e3)


def _tone_trace(amplitude, phase=0.0, duration=0.03, fs=FS, f=F_REF, offset=0.0):
    t = np.arange(int(round(duration * fs))) / fs
    return PhotocurrentTrace(offset + amplitude * np.cos(2.0 * math.pi * f * t + phase),
                             fs)


def test_inphase_tone_recovers_rms_amplitude():
    amp = 3.3e-8
    result = demodulate(_tone_trace(amp), CONFIG)
    assert np.mean(result.settled_inphase) == pytest.approx(amp / math.sqrt(2.0),
                                                            rel=1e-3)
    assert abs(np.mean(result.settled_quadrature)) < 1e-3 * amp


def test_quadrature_tone_lands_in_quadrature():
    # A cos(w t + theta) -> (A / sqrt 2) sin(theta) in the quadrature stream
    amp = 3.3e-8
    result = demodulate(_tone_trace(amp, phase=math.pi / 2.0), CONFIG)
    assert np.mean(result.settled_quadrature) == pytest.approx(amp / math.sqrt(2.0),
                                                               rel=1e-3)
    assert abs(np.mean(result.settled_inphase)) < 1e-3 * amp


def test_reference_phase_rotates_output():
    amp = 1e-7
    shifted = LockInConfig(reference_frequency_hz=F_REF, bandwidth_hz=1e3,
                           reference_phase_rad=0.7)
    result = demodulate(_tone_trace(amp, phase=0.7), shifted)
    assert np.mean(result.settled_inphase) == pytest.approx(amp / math.sqrt(2.0),
                                                            rel=1e-3)


def test_dc_offset_is_rejected():
    result = demodulate(_tone_trace(1e-8, offset=1e-3), CONFIG)
    assert np.mean(result.settled_inphase) == pytest.approx(1e-8 / math.sqrt(2.0),
                                                            rel=2e-3)


def test_off_band_tone_is_suppressed():
    off = _tone_trace(1e-6, f=F_REF + 64e3)
    result = demodulate(off, CONFIG)
    leak = math.hypot(np.mean(result.settled_inphase),
                      np.mean(result.settled_quadrature))
    attenuation = stopband_attenuation_db(CONFIG, 64e3)
    assert attenuation > 100.0
    assert leak < 1e-6 * 10.0**(-attenuation / 20.0) * 3.0


def test_noise_floor_matches_white_density():
    # white current noise of known one-sided density D gives floor D sqrt(B)
    density = 1e-12
    sigma = density * math.sqrt(FS / 2.0)
    floors = []
    rng = np.random.default_rng(42)
    for _ in range(20):
        trace = PhotocurrentTrace(sigma * rng.standard_normal(int(0.15 * FS)), FS)
        floors.append(noise_floor(trace, CONFIG))
    measured = np.mean(floors)
    assert measured == pytest.approx(density * math.sqrt(1e3), rel=0.03)


def test_noise_floor_scales_with_sqrt_bandwidth():
    rng = np.random.default_rng(9)
    sigma = 1e-9
    trace = PhotocurrentTrace(sigma * rng.standard_normal(int(0.6 * FS)), FS)
    f1 = noise_floor(trace, LockInConfig(F_REF, bandwidth_hz=100.0))
    f2 = noise_floor(trace, LockInConfig(F_REF, bandwidth_hz=1e3))
    assert f2 / f1 == pytest.approx(math.sqrt(10.0), rel=0.12)


def test_settle_time_excluded_from_statistics():
    result = demodulate(_tone_trace(1e-7, duration=0.05), CONFIG)
    assert result.settle_time_s == pytest.approx(SETTLE_TIME_CONSTANTS / 1e3)
    n_settle = int(math.ceil(result.settle_time_s * result.sample_rate_hz))
    assert result.settle_samples == n_settle
    assert len(result.settled_inphase) == len(result.inphase) - n_settle
    # the transient start differs from the settled level
    assert abs(result.inphase[0]) < 0.1 * abs(np.mean(result.settled_inphase))


def test_demodulate_is_deterministic():
    trace = _tone_trace(1e-7)
    a = demodulate(trace, CONFIG)
    b = demodulate(trace, CONFIG)
    assert np.array_equal(a.inphase, b.inphase)
    assert np.array_equal(a.quadrature, b.quadrature)


def test_boxcar_factor_keeps_images_away():
    for fs, b in ((6.4e6, 1e3), (25e6, 1e3), (6.4e6, 1e4), (6.4e6, 100.0)):
        factor = _boxcar_factor(fs, F_REF, b)
        mid = fs / factor
        for image in (math.remainder(F_REF, mid), math.remainder(2.0 * F_REF, mid)):
            assert abs(image) >= 32.0 * b


def test_short_trace_raises():
    with pytest.raises(InsufficientDataError):
        noise_floor(_tone_trace(1e-7, duration=0.005), CONFIG)


def test_lockin_config_validation():
    with pytest.raises(InvalidInputError):
        LockInConfig(reference_frequency_hz=0.0, bandwidth_hz=1e3)
    with pytest.raises(InvalidInputError):
        LockInConfig(reference_frequency_hz=F_REF, bandwidth_hz=0.0)
    with pytest.raises(InvalidInputError):
        LockInConfig(reference_frequency_hz=F_REF, bandwidth_hz=F_REF)
    with pytest.raises(InvalidInputError):
        LockInConfig(reference_frequency_hz=F_REF, bandwidth_hz=1e3, filter_order=0)
