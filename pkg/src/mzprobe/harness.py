"""Scripted Monte-Carlo experiments over the synthetic chain.

Every stochastic input is drawn from the seed tree (config seed,
experiment id, sweep point, replicate, channel), so a result is exactly
reproducible from (config, seeds) and sweep points can run in any order,
including threaded, without changing a single byte of output. Slope fits
are unweighted least squares on log-log data; fringe fits are linear
least squares on the fixed-period basis (sin g, cos g, 1). Parameter
uncertainties come from the residual covariance in both cases.

The analytic overlays (shot-noise background, fringe amplitude, ideal
modulated SNR) are evaluated through the designer operations on the same
operating point, never re-derived here, so the Monte-Carlo chain and the
closed forms stay independent routes to the same number.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import seeding
from .config import RunConfig
from .designer import signal_and_noise_currents
from .detection import NoiseConfig, PhotocurrentTrace, balanced_subtract, photocurrent
from .errors import InvalidInputError
from .fields import port_power_traces
from .lockin import SETTLE_TIME_CONSTANTS, demodulate, noise_floor
from .servo import close_loop, open_loop_phase

EXPERIMENT_IDS = {
    "noise_vs_power": 1,
    "fringe_scan": 2,
    "snr_vs_power": 3,
    "locked_sensitivity": 4,
}


@dataclass(frozen=True)
class FitResult:
    """Fitted model with parameter uncertainties."""

    model: str
    parameters: dict
    uncertainties: dict

    def __post_init__(self):
        if set(self.parameters) != set(self.uncertainties):
            raise InvalidInputError("every fit parameter needs an uncertainty")


@dataclass(frozen=True)
class ExperimentResult:
    """One sweep: a measured point per sweep value, plus the fit and seeds."""

    name: str
    sweep_name: str
    sweep_values: tuple
    measured: tuple
    standard_errors: tuple
    fit: FitResult
    seeds: tuple
    extras: dict

    def __post_init__(self):
        n = len(self.sweep_values)
        if len(self.measured) != n or len(self.standard_errors) != n:
            raise InvalidInputError("one measured value and error per sweep point")


def fit_power_law(x, y) -> FitResult:
    """Unweighted log10-log10 straight line through (x, y)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) < 3 or np.any(x <= 0) or np.any(y <= 0):
        raise InvalidInputError("power-law fit needs >= 3 positive points")
    coeffs, cov = np.polyfit(np.log10(x), np.log10(y), 1, cov=True)
    errs = np.sqrt(np.diag(cov))
    return FitResult(
        model="power_law",
        parameters={"slope": float(coeffs[0]), "intercept_log10": float(coeffs[1])},
        uncertainties={"slope": float(errs[0]), "intercept_log10": float(errs[1])},
    )


def fit_fixed_period_sine(angles, values) -> FitResult:
    """Least-squares A * sin(g - g0) + C on the basis (sin g, cos g, 1)."""
    angles, values = np.asarray(angles, dtype=float), np.asarray(values, dtype=float)
    if len(angles) < 4:
        raise InvalidInputError("sine fit needs >= 4 points")
    basis = np.column_stack([np.sin(angles), np.cos(angles), np.ones_like(angles)])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    resid = values - basis @ coef
    dof = len(values) - 3
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(basis.T @ basis)
    s, c, offset = (float(v) for v in coef)
    amplitude = math.hypot(s, c)
    phase = math.atan2(-c, s)
    if amplitude > 0:
        var_amp = (s * s * cov[0, 0] + c * c * cov[1, 1] + 2 * s * c * cov[0, 1]) / amplitude**2
        var_phase = (c * c * cov[0, 0] + s * s * cov[1, 1] - 2 * s * c * cov[0, 1]) / amplitude**4
    else:
        var_amp = cov[0, 0] + cov[1, 1]
        var_phase = math.inf
    return FitResult(
        model="fixed_period_sine",
        parameters={"amplitude": amplitude, "phase_rad": phase, "offset": offset},
        uncertainties={"amplitude": math.sqrt(max(0.0, var_amp)),
                       "phase_rad": math.sqrt(max(0.0, var_phase)),
                       "offset": math.sqrt(max(0.0, cov[2, 2]))},
    )


def _map_indexed(worker, count: int, threads: int) -> list:
    """Run worker(i) for i in range(count), merged in index order."""
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, range(count)))
    return [worker(i) for i in range(count)]


def _port_traces(config: RunConfig, probe_arm_power_w: float, theta, n_samples: int,
                 experiment_id: int, point: int, rep: int,
                 silent: bool = False) -> tuple[PhotocurrentTrace, PhotocurrentTrace]:
    """Synthesize both port photocurrents for an interferometer phase theta."""
    fs = config.sample_rate_hz
    times = np.arange(n_samples) / fs
    itf = config.interferometer
    port_a_w, port_b_w = port_power_traces(
        probe_arm_power_w, itf.lo_power_w * itf.lo_arm_loss, theta,
        config.modulation_depth(), 2.0 * math.pi * itf.modulation_frequency_hz,
        times, splitter_ratio=itf.splitter_ratio,
        visibility=itf.mode_matching_visibility)
    noise = NoiseConfig.silent() if silent else config.to_noise()
    h_nu = config.photon_energy_j()
    shared = None
    if noise.enable_rin:
        from .detection import rin_modulation
        shared = rin_modulation(noise, n_samples, fs, seeding.stream(
            config.seed, experiment_id, point, rep, seeding.CHANNEL_SOURCE_RIN))
    trace_a = photocurrent(port_a_w, fs, config.to_detector_a(), noise, h_nu,
                           seed=seeding.seed_path(config.seed, experiment_id, point,
                                                  rep, seeding.CHANNEL_DETECTOR_A),
                           shared_rin=shared)
    trace_b = photocurrent(port_b_w, fs, config.to_detector_b(), noise, h_nu,
                           seed=seeding.seed_path(config.seed, experiment_id, point,
                                                  rep, seeding.CHANNEL_DETECTOR_B),
                           shared_rin=shared)
    return trace_a, trace_b


def _balanced(config: RunConfig, trace_a: PhotocurrentTrace,
              trace_b: PhotocurrentTrace) -> PhotocurrentTrace:
    return balanced_subtract(trace_a, trace_b, config.noise.common_mode_rejection_db)


def _probe_arm_power(config: RunConfig, probe_input_w: float) -> float:
    itf = config.interferometer
    return probe_input_w * itf.probe_attenuation * itf.probe_arm_loss


def _settled_mean_inphase(trace: PhotocurrentTrace, lockin_config) -> float:
    return float(np.mean(demodulate(trace, lockin_config).settled_inphase))


def _fringe_amplitude(config: RunConfig, probe_input_w: float, experiment_id: int,
                      point: int) -> float:
    """Noiseless balanced fringe amplitude [A] from the simulated chain.

    Half the difference of the demodulated output at theta = +-pi/2; this
    is the bench calibration (half the fringe peak-to-peak), not a formula.
    """
    lock = config.to_lockin()
    n = int(round((SETTLE_TIME_CONSTANTS + 20.0) / lock.bandwidth_hz
                  * config.sample_rate_hz))
    arm = _probe_arm_power(config, probe_input_w)
    outputs = []
    for rep, theta in enumerate((0.5 * math.pi, -0.5 * math.pi)):
        a, b = _port_traces(config, arm, theta, n, experiment_id, point, rep, silent=True)
        outputs.append(_settled_mean_inphase(_balanced(config, a, b), lock))
    return 0.5 * (outputs[0] - outputs[1])


def run_noise_vs_power(powers, config: RunConfig, threads: int = None) -> ExperimentResult:
    """Demodulated noise of the local-oscillator beam alone versus its power.

    The probe arm is blocked; one output port (detector A) sees the
    split-off fraction of each swept LO power. Per point the standard
    deviation of the demodulated trace is averaged over noise_seeds
    independent seeds, then fit with a log-log power law. The overlay is
    the shot-noise background at the same points.
    """
    powers = tuple(float(p) for p in powers)
    if not powers:
        raise InvalidInputError("empty power sweep")
    exp_id = EXPERIMENT_IDS["noise_vs_power"]
    threads = config.threads if threads is None else threads
    lock = config.to_lockin()
    detector = config.to_detector_a()
    noise = config.to_noise()
    h_nu = config.photon_energy_j()
    fs = config.sample_rate_hz
    n = int(round(config.experiment.trace_duration_s * fs))
    n_seeds = config.experiment.noise_seeds
    itf = config.interferometer
    port_fraction = (1.0 - itf.splitter_ratio) * itf.lo_arm_loss
    lo_range, hi_range = detector.power_range_w

    point_template = config.design_point()
    flagged = []
    for p in powers:
        incident = p * port_fraction
        bad = not lo_range <= incident <= hi_range
        flagged.append(bad)
        if bad:
            warnings.warn(f"LO power {p:.3g} W puts {incident:.3g} W on the detector, "
                          "outside its range; point flagged", stacklevel=2)

    def one_point(i: int):
        incident = np.full(n, powers[i] * port_fraction)
        floors = np.empty(n_seeds)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for rep in range(n_seeds):
                trace = photocurrent(incident, fs, detector, noise, h_nu,
                                     seed=seeding.seed_path(config.seed, exp_id, i, rep,
                                                            seeding.CHANNEL_DETECTOR_A))
                floors[rep] = noise_floor(trace, lock)
        return float(floors.mean()), float(floors.std(ddof=1) / math.sqrt(n_seeds))

    results = _map_indexed(one_point, len(powers), threads)
    means = tuple(r[0] for r in results)
    errors = tuple(r[1] for r in results)
    overlay = tuple(
        signal_and_noise_currents(replace(point_template, lo_power_w=p), detector, 0.0)[1]
        for p in powers)
    deviation = tuple((m - o) / o for m, o in zip(means, overlay))
    return ExperimentResult(
        name="noise_vs_power",
        sweep_name="lo_power_w",
        sweep_values=powers,
        measured=means,
        standard_errors=errors,
        fit=fit_power_law(powers, means),
        seeds=tuple(range(n_seeds)),
        extras={"shot_noise_overlay_a": overlay,
                "relative_deviation": deviation,
                "flagged": tuple(flagged),
                "detector_port_fraction": port_fraction},
    )


def run_fringe_scan(scan_range_rad: float, config: RunConfig,
                    threads: int = None) -> ExperimentResult:
    """Sweep the interferometer phase and fit the demodulated fringe.

    No atoms: the phase scan mimics an atomic phase shift. Returns the
    fitted amplitude (the current-per-radian calibration at mid-fringe),
    phase and offset, plus the chain's own noiseless amplitude and the
    closed-form prediction in the extras.
    """
    if scan_range_rad <= 0:
        raise InvalidInputError("scan_range_rad must be positive")
    if scan_range_rad < 2.0 * math.pi:
        warnings.warn("scan covers less than one fringe; sine fit may be degenerate",
                      stacklevel=2)
    exp_id = EXPERIMENT_IDS["fringe_scan"]
    threads = config.threads if threads is None else threads
    lock = config.to_lockin()
    fs = config.sample_rate_hz
    n = int(round(config.experiment.trace_duration_s * fs))
    gammas = tuple(float(g) for g in
                   np.linspace(0.0, scan_range_rad, config.experiment.scan_points))
    arm = _probe_arm_power(config, config.probe.power_w)

    def one_point(i: int):
        # theta = phi - gamma with phi = 0 (no atoms).
        a, b = _port_traces(config, arm, -gammas[i], n, exp_id, i, 0)
        result = demodulate(_balanced(config, a, b), lock)
        settled = result.settled_inphase
        n_eff = max(1.0, 2.0 * lock.bandwidth_hz * len(settled) / result.sample_rate_hz)
        return float(settled.mean()), float(settled.std(ddof=1) / math.sqrt(n_eff))

    results = _map_indexed(one_point, len(gammas), threads)
    means = tuple(r[0] for r in results)
    errors = tuple(r[1] for r in results)
    fit = fit_fixed_period_sine(gammas, means)
    residual = np.asarray(means) - (
        fit.parameters["amplitude"]
        * np.sin(np.asarray(gammas) - fit.parameters["phase_rad"])
        + fit.parameters["offset"])

    itf = config.interferometer
    point = replace(config.design_point(),
                    transmitted_probe_power_w=arm,
                    lo_power_w=itf.lo_power_w * itf.lo_arm_loss)
    predicted = 2.0 * itf.mode_matching_visibility * abs(
        signal_and_noise_currents(point, config.to_detector_a(), 0.5 * math.pi)[0])
    chain_amplitude = _fringe_amplitude(config, config.probe.power_w, exp_id, 10_000)
    return ExperimentResult(
        name="fringe_scan",
        sweep_name="operating_phase_rad",
        sweep_values=gammas,
        measured=means,
        standard_errors=errors,
        fit=fit,
        seeds=(0,),
        extras={"calibration_a_per_rad": fit.parameters["amplitude"],
                "residual_rms_a": float(np.sqrt(np.mean(residual**2))),
                "predicted_amplitude_a": predicted,
                "chain_amplitude_a": chain_amplitude},
    )


def run_snr_vs_power(probe_powers, config: RunConfig, threads: int = None) -> ExperimentResult:
    """SNR of a full-fringe (pi) signal versus probe power.

    Per point: the signal is the fringe peak-to-peak (twice the noiseless
    chain amplitude), the noise is the demodulated floor at mid-fringe
    averaged over snr_seeds seeds, and SNR is their ratio. Extras carry
    the ideal closed-form curve and its loss-scaled version.
    """
    probe_powers = tuple(float(p) for p in probe_powers)
    if not probe_powers:
        raise InvalidInputError("empty power sweep")
    exp_id = EXPERIMENT_IDS["snr_vs_power"]
    threads = config.threads if threads is None else threads
    lock = config.to_lockin()
    fs = config.sample_rate_hz
    n = int(round(config.experiment.trace_duration_s * fs))
    n_seeds = config.experiment.snr_seeds
    detector = config.to_detector_a()
    point_template = config.design_point()

    def one_point(i: int):
        power = probe_powers[i]
        if power <= 0:
            return 0.0, 0.0, 0.0
        amplitude = _fringe_amplitude(config, power, exp_id, i)
        arm = _probe_arm_power(config, power)
        floors = np.empty(n_seeds)
        for rep in range(n_seeds):
            a, b = _port_traces(config, arm, 0.0, n, exp_id, i, rep)
            floors[rep] = noise_floor(_balanced(config, a, b), lock)
        mean_floor = float(floors.mean())
        floor_se = float(floors.std(ddof=1) / math.sqrt(n_seeds))
        snr = 2.0 * amplitude / mean_floor
        return snr, snr * floor_se / mean_floor, amplitude

    results = _map_indexed(one_point, len(probe_powers), threads)
    snrs = tuple(r[0] for r in results)
    errors = tuple(r[1] for r in results)

    def ideal_pi_snr(power: float) -> float:
        if power <= 0:
            return 0.0
        point = replace(point_template, transmitted_probe_power_w=power)
        i_sig, i_shot = signal_and_noise_currents(point, detector, 0.5 * math.pi)
        return 2.0 * 2.0 * i_sig / (math.sqrt(2.0) * i_shot)

    ideal = tuple(ideal_pi_snr(p) for p in probe_powers)
    scaled = tuple(v * config.design.loss_factor for v in ideal)
    ratios = [i / s for i, s in zip(ideal, snrs) if s > 0]
    ratio_mean = float(np.mean(ratios)) if ratios else math.nan
    ratio_se = (float(np.std(ratios, ddof=1) / math.sqrt(len(ratios)))
                if len(ratios) > 1 else math.nan)
    positive = [(p, s) for p, s in zip(probe_powers, snrs) if s > 0]
    fit = fit_power_law([p for p, _ in positive], [s for _, s in positive])
    return ExperimentResult(
        name="snr_vs_power",
        sweep_name="probe_power_w",
        sweep_values=probe_powers,
        measured=snrs,
        standard_errors=errors,
        fit=fit,
        seeds=tuple(range(n_seeds)),
        extras={"eq_ideal_snr": ideal,
                "eq_loss_scaled_snr": scaled,
                "loss_factor": config.design.loss_factor,
                "ideal_over_measured_mean": ratio_mean,
                "ideal_over_measured_se": ratio_se,
                "chain_amplitudes_a": tuple(r[2] for r in results)},
    )


def run_locked_sensitivity(duration_s: float, config: RunConfig,
                           threads: int = None) -> ExperimentResult:
    """Closed-loop phase-noise density and the SNR ceiling it implies.

    Vibration realizations are locked by the servo; the residual phase
    (including the injected in-lock floor) is read out through the full
    chain at mid-fringe. The density estimate is the demodulated noise
    over the fringe calibration; the pi-swing SNR ceiling is
    2 / (density * sqrt(B)). Lost lock flags the result instead of
    raising, so partial data survives.
    """
    if duration_s <= 0:
        raise InvalidInputError("duration_s must be positive")
    exp_id = EXPERIMENT_IDS["locked_sensitivity"]
    threads = config.threads if threads is None else threads
    lock_cfg = config.to_lockin()
    servo_cfg = config.to_servo()
    spectrum = config.to_vibration()
    fs = config.sample_rate_hz
    n = int(round(duration_s * fs))
    replicates = config.experiment.locked_replicates
    bandwidth = lock_cfg.bandwidth_hz
    calibration = _fringe_amplitude(config, config.probe.power_w, exp_id, 10_000)
    arm = _probe_arm_power(config, config.probe.power_w)
    settled_s = duration_s - SETTLE_TIME_CONSTANTS / bandwidth

    def one_rep(rep: int):
        open_phase = open_loop_phase(
            spectrum, duration_s, fs,
            seed=seeding.seed_path(config.seed, exp_id, 0, rep, seeding.CHANNEL_VIBRATION),
            mean_phase_rad=0.3)
        locked = close_loop(open_phase, fs, servo_cfg,
                            seed=seeding.seed_path(config.seed, exp_id, 0, rep,
                                                   seeding.CHANNEL_SERVO_FLOOR))
        theta = locked.locked_phase_rad - servo_cfg.setpoint_rad
        a, b = _port_traces(config, arm, theta, n, exp_id, 0, rep)
        floor = noise_floor(_balanced(config, a, b), lock_cfg)
        density = floor / (calibration * math.sqrt(bandwidth))
        # std of a std over an effective 2*B*T independent samples
        point_se = density / math.sqrt(2.0 * max(1.0, 2.0 * bandwidth * settled_s))
        return density, point_se, locked.lock_maintained

    results = _map_indexed(one_rep, replicates, threads)
    densities = tuple(r[0] for r in results)
    point_errors = tuple(r[1] for r in results)
    maintained = tuple(r[2] for r in results)
    if not all(maintained):
        warnings.warn("lock lost in at least one replicate; result flagged", stacklevel=2)
    mean_density = float(np.mean(densities))
    density_se = (float(np.std(densities, ddof=1) / math.sqrt(replicates))
                  if replicates > 1 else 0.0)
    ceiling = 2.0 / (mean_density * math.sqrt(bandwidth))
    fit = FitResult(
        model="constant",
        parameters={"density_rad_per_rthz": mean_density, "snr_pi_ceiling": ceiling},
        uncertainties={"density_rad_per_rthz": density_se,
                       "snr_pi_ceiling": ceiling * density_se / mean_density},
    )
    return ExperimentResult(
        name="locked_sensitivity",
        sweep_name="replicate",
        sweep_values=tuple(float(r) for r in range(replicates)),
        measured=densities,
        standard_errors=point_errors,
        fit=fit,
        seeds=tuple(range(replicates)),
        extras={"configured_floor_rad_per_rthz": servo_cfg.residual_floor_rad_per_rthz,
                "configured_snr_pi_ceiling": 2.0 / (servo_cfg.residual_floor_rad_per_rthz
                                                    * math.sqrt(bandwidth)),
                "lock_maintained": maintained,
                "all_locks_held": all(maintained),
                "calibration_a_per_rad": calibration},
    )


def run_experiment(name: str, config: RunConfig, threads: int = None) -> ExperimentResult:
    """Dispatch one named experiment with the config's sweep defaults."""
    if name not in EXPERIMENT_IDS:
        valid = ", ".join(sorted(EXPERIMENT_IDS))
        raise InvalidInputError(f"unknown experiment {name!r}; valid names: {valid}")
    if name == "noise_vs_power":
        return run_noise_vs_power(config.experiment.lo_powers_w, config, threads)
    if name == "fringe_scan":
        return run_fringe_scan(config.experiment.scan_range_rad, config, threads)
    if name == "snr_vs_power":
        return run_snr_vs_power(config.experiment.probe_powers_w, config, threads)
    return run_locked_sensitivity(config.experiment.locked_duration_s, config, threads)
