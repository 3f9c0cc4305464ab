"""Closed-form operating-point analytics and inverse design.

The chain measures the dispersive phase phi = k * Delta / 2 that a cloud
of column density n_col imprints on the probe arm. A heating budget fixes
the absorbed power P_ab; the photon-flux-limited signal-to-noise ratio
for a fractional column change dn/n in a bandwidth B is then

    snr_max = (1/2) sqrt(eta P_ab n_col sigma0 / (h nu B)) * dn/n

independent of the detuning. Reading out at the modulation frequency
keeps only the first sideband pair, so the realized ratio is

    snr_mod = J1(m) sqrt(eta P_ab n_col sigma0 / (h nu B)) * dn/n
            = 2 J1(m) sqrt(eta P_Pt / (h nu B)) * dphi

with P_Pt the transmitted probe power and dphi the phase signal; the two
forms agree in the thin, far-detuned limit. The demodulated rms
photocurrent and the shot-noise background of the detector pair are

    i_sig  = alpha eta e / (sqrt(2) h nu) * sqrt(P_LO P_Pt) J1(m) sin(theta)
    i_shot = (alpha e / sqrt(2)) * sqrt(eta P_LO B / (2 h nu))

where theta is the interferometer phase measured from mid-fringe and
alpha = 2 * gain sets the current scale of one detector; the balanced
combination (2 i_sig of signal against sqrt(2) i_shot of noise) gives
back snr_mod for any alpha. All operations are pure functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

from scipy.constants import elementary_charge
from scipy.optimize import brentq
from scipy.special import j1

from .atoms import AtomCloud, phase_shift, photon_energy, resonant_cross_section
from .detection import DetectorSpec
from .errors import DesignWarning, InfeasibleDesignError, InvalidInputError

# J1 peaks at m = 1.8412 where 2 J1 = 1.1640; larger penalties are unreachable.
_J1_ARGMAX = 1.8411837813406593
_MAX_PENALTY = 2.0 * j1(_J1_ARGMAX)


@dataclass(frozen=True)
class DesignPoint:
    """One operating point of the instrument.

    wavelength_m                probe wavelength
    detuning                    Delta, units of half the atomic linewidth
    target_optical_depth        k seen by the probe
    absorbed_power_w            P_ab, fixed by the heating budget
    transmitted_probe_power_w   P_Pt = P_ab / (1 - exp(-k))
    lo_power_w                  local-oscillator power on the detector
    bandwidth_hz                measurement bandwidth B
    modulation_depth            phase-modulation depth m
    fractional_signal           column-density change dn/n to resolve
    phase_signal_rad            dphi = (Delta / 2) k dn/n; derived when None
    """

    wavelength_m: float
    detuning: float
    target_optical_depth: float
    absorbed_power_w: float
    transmitted_probe_power_w: float
    lo_power_w: float
    bandwidth_hz: float
    modulation_depth: float
    fractional_signal: float = 1.0
    phase_signal_rad: float = None

    def __post_init__(self):
        if self.wavelength_m <= 0:
            raise InvalidInputError("wavelength_m must be positive")
        if not 0.0 < self.target_optical_depth < 1.0:
            raise InvalidInputError("target_optical_depth must be in (0, 1)")
        for name in ("absorbed_power_w", "transmitted_probe_power_w", "lo_power_w"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")
        if self.bandwidth_hz <= 0:
            raise InvalidInputError("bandwidth_hz must be positive")
        if self.modulation_depth < 0:
            raise InvalidInputError("modulation_depth must be non-negative")
        if self.fractional_signal < 0:
            raise InvalidInputError("fractional_signal must be non-negative")
        if self.phase_signal_rad is None:
            derived = 0.5 * self.detuning * self.target_optical_depth * self.fractional_signal
            object.__setattr__(self, "phase_signal_rad", derived)


@dataclass(frozen=True)
class DesignReport:
    """Noise budget of a design point.

    snr_max and phase_sensitivity_rad_per_rthz are photon-flux bounds at
    unit quantum efficiency; snr_detected, snr_modulated and the column
    sensitivity fold in the detector. pi_swing_snr_ceiling is the
    full-fringe ratio allowed by the locking floor alone, which caps the
    bench measurement once shot noise is subdominant.
    """

    snr_max: float
    snr_detected: float
    snr_modulated: float
    signal_current_a: float
    shot_noise_current_a: float
    phase_sensitivity_rad_per_rthz: float
    column_density_sensitivity_per_rthz: float
    minimum_detectable_fraction: float
    full_cloud_phase_rad: float
    heating_rate_per_atom_hz: float
    modulation_penalty: float
    locking_floor_rad_per_rthz: float
    locking_limited: bool
    achievable_phase_sensitivity_rad_per_rthz: float
    pi_swing_snr_ceiling: float
    loss_factor: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.modulation_penalty <= 1.2:
            raise InvalidInputError("modulation_penalty must be in (0, 1.2]")
        # Overdriven modulation (2 J1 > 1) may beat the unmodulated bound;
        # below that the bound must hold.
        cap = self.snr_max * max(1.0, self.modulation_penalty) * (1.0 + 1e-12)
        if self.snr_modulated > cap:
            raise InvalidInputError("snr_modulated exceeds snr_max beyond the penalty")
        if not 0.0 < self.loss_factor <= 1.0:
            raise InvalidInputError("loss_factor must be in (0, 1]")


def detuning_for_depth(k_target: float, cloud: AtomCloud, wavelength_m: float) -> float:
    """Detuning that thins the cloud to optical depth k_target.

    Inverts k = n_col sigma0 / (1 + Delta**2): Delta = sqrt(n_col
    sigma0 / k - 1). k_target equal to the resonant depth returns 0;
    larger is unreachable at any detuning.
    """
    if k_target <= 0:
        raise InvalidInputError("k_target must be positive")
    resonant_depth = cloud.column_density * resonant_cross_section(wavelength_m)
    if k_target > resonant_depth:
        raise InfeasibleDesignError(
            f"k_target {k_target:g} exceeds the resonant optical depth {resonant_depth:g}")
    return math.sqrt(resonant_depth / k_target - 1.0)


def transmitted_power(absorbed_power_w: float, k: float) -> float:
    """Probe power after the cloud when it absorbs absorbed_power_w.

    P_Pt = P_ab / (1 - exp(-k)); approaches P_ab / k for thin clouds and
    P_ab when everything is absorbed.
    """
    if k <= 0:
        raise InvalidInputError("optical depth k must be positive")
    if absorbed_power_w < 0:
        raise InvalidInputError("absorbed_power_w must be non-negative")
    return absorbed_power_w / -math.expm1(-k)


def default_modulation_depth(penalty: float = 0.51) -> float:
    """Smallest depth m with 2 J1(m) equal to the given penalty."""
    if penalty <= 0:
        raise InvalidInputError("penalty must be positive")
    if penalty > _MAX_PENALTY:
        raise InfeasibleDesignError(
            f"penalty {penalty:g} exceeds the 2 J1 maximum {_MAX_PENALTY:.4f}")
    if penalty == _MAX_PENALTY:
        return _J1_ARGMAX
    return brentq(lambda m: 2.0 * j1(m) - penalty, 1e-12, _J1_ARGMAX,
                  xtol=1e-15, rtol=8.882e-16)


def _column_cross_section(point: DesignPoint, cloud: AtomCloud) -> float:
    return cloud.column_density * resonant_cross_section(point.wavelength_m)


def _snr_max_unit(point: DesignPoint, cloud: AtomCloud, eta: float) -> float:
    """snr_max at dn/n = 1."""
    h_nu = photon_energy(point.wavelength_m)
    return 0.5 * math.sqrt(eta * point.absorbed_power_w * _column_cross_section(point, cloud)
                           / (h_nu * point.bandwidth_hz))


def snr_max(point: DesignPoint, cloud: AtomCloud, detector: DetectorSpec) -> float:
    """Photon-flux-limited SNR for the point's fractional signal."""
    if point.target_optical_depth > 0.1:
        warnings.warn("optically thick cloud: k > 0.1", DesignWarning, stacklevel=2)
    return _snr_max_unit(point, cloud, detector.quantum_efficiency) * point.fractional_signal


def snr_modulated(point: DesignPoint, cloud: AtomCloud, detector: DetectorSpec) -> float:
    """Realized SNR of the modulated readout.

    Evaluates both the column-density and the phase form, requires them
    to agree within the thin-cloud window 0.5 k + 2 / Delta**2, and
    returns the column form, so snr_modulated / snr_max = 2 J1(m) holds
    exactly. Raises if the point's transmitted power or phase signal is
    inconsistent with its absorbed power and optical depth.
    """
    k, delta = point.target_optical_depth, point.detuning
    if k > 0.1 or abs(delta) < 10.0 or abs(point.phase_signal_rad) > 1.0:
        warnings.warn("outside the thin, far-detuned, linear-fringe regime",
                      DesignWarning, stacklevel=2)
    tol = 0.5 * k + (2.0 / delta**2 if delta != 0.0 else math.inf) + 1e-9
    expected_ppt = transmitted_power(point.absorbed_power_w, k)
    if point.transmitted_probe_power_w <= 0 or abs(
            point.transmitted_probe_power_w / expected_ppt - 1.0) > tol:
        raise InvalidInputError("transmitted power inconsistent with absorbed power and k")

    eta = detector.quantum_efficiency
    h_nu = photon_energy(point.wavelength_m)
    penalty = 2.0 * j1(point.modulation_depth)
    column_form = (0.5 * penalty * math.sqrt(
        eta * point.absorbed_power_w * _column_cross_section(point, cloud)
        / (h_nu * point.bandwidth_hz)) * point.fractional_signal)
    phase_form = (penalty * math.sqrt(
        eta * point.transmitted_probe_power_w / (h_nu * point.bandwidth_hz))
        * abs(point.phase_signal_rad))
    if column_form > 0 and abs(phase_form / column_form - 1.0) > tol:
        raise InvalidInputError("phase signal inconsistent with the column-density form")
    return column_form


def signal_and_noise_currents(point: DesignPoint, detector: DetectorSpec,
                              phase_offset_rad: float) -> tuple:
    """Demodulated rms signal current and shot-noise background (i_sig, i_shot).

    phase_offset_rad is theta = phi - gamma, the interferometer phase away
    from mid-fringe. alpha = 2 * gain, so the pair ratio
    2 i_sig / (sqrt(2) i_shot) reproduces snr_modulated at small theta
    for any gain.
    """
    alpha = 2.0 * detector.gain
    eta = detector.quantum_efficiency
    h_nu = photon_energy(point.wavelength_m)
    i_sig = (alpha * eta * elementary_charge / (math.sqrt(2.0) * h_nu)
             * math.sqrt(point.lo_power_w * point.transmitted_probe_power_w)
             * j1(point.modulation_depth) * math.sin(phase_offset_rad))
    i_shot = (alpha * elementary_charge / math.sqrt(2.0)
              * math.sqrt(eta * point.lo_power_w * point.bandwidth_hz / (2.0 * h_nu)))
    return i_sig, i_shot


def phase_sensitivity(point: DesignPoint, cloud: AtomCloud,
                      detector: DetectorSpec) -> float:
    """Phase noise floor [rad/rtHz]: full cloud phase over the 1 Hz SNR."""
    full_phase = phase_shift(cloud.column_density,
                             resonant_cross_section(point.wavelength_m), point.detuning)
    snr_unit_1hz = (_snr_max_unit(point, cloud, detector.quantum_efficiency)
                    * math.sqrt(point.bandwidth_hz))
    return abs(full_phase) / snr_unit_1hz


def column_density_sensitivity(point: DesignPoint, cloud: AtomCloud,
                               detector: DetectorSpec) -> float:
    """Fractional column change at SNR 1 in 1 Hz, via the modulated readout."""
    if point.modulation_depth <= 0:
        raise InvalidInputError("modulation_depth must be positive for a sensitivity")
    h_nu = photon_energy(point.wavelength_m)
    snr_unit_1hz = j1(point.modulation_depth) * math.sqrt(
        detector.quantum_efficiency * point.absorbed_power_w
        * _column_cross_section(point, cloud) / h_nu)
    return 1.0 / snr_unit_1hz


def minimum_detectable_fraction(point: DesignPoint, cloud: AtomCloud,
                                detector: DetectorSpec) -> float:
    """dn/n at snr_max = 1 in the point's bandwidth."""
    return 1.0 / _snr_max_unit(point, cloud, detector.quantum_efficiency)


def design_point(cloud: AtomCloud, wavelength_m: float,
                 target_optical_depth: float = 0.01, lo_power_w: float = 1e-3,
                 bandwidth_hz: float = 1e3, modulation_depth: float = None,
                 fractional_signal: float = 1.0,
                 max_scattering_rate_hz: float = None) -> DesignPoint:
    """Inverse design from a cloud and a heating budget.

    The absorbed power comes from the scattering-rate cap (default: one
    photon per atom per cloud lifetime); the detuning from the target
    optical depth; the modulation depth from the 2 J1(m) = 0.51 default.
    """
    rate = (cloud.atom_count / cloud.lifetime_s
            if max_scattering_rate_hz is None else max_scattering_rate_hz)
    if rate <= 0:
        raise InvalidInputError("scattering-rate budget must be positive")
    h_nu = photon_energy(wavelength_m)
    absorbed = rate * h_nu
    depth = default_modulation_depth() if modulation_depth is None else modulation_depth
    return DesignPoint(
        wavelength_m=wavelength_m,
        detuning=detuning_for_depth(target_optical_depth, cloud, wavelength_m),
        target_optical_depth=target_optical_depth,
        absorbed_power_w=absorbed,
        transmitted_probe_power_w=transmitted_power(absorbed, target_optical_depth),
        lo_power_w=lo_power_w,
        bandwidth_hz=bandwidth_hz,
        modulation_depth=depth,
        fractional_signal=fractional_signal,
    )


def design_report(point: DesignPoint, cloud: AtomCloud, detector: DetectorSpec,
                  locking_floor_rad_per_rthz: float = 2e-4) -> DesignReport:
    """Full noise budget at one operating point.

    The signal current is quoted at theta equal to the full cloud phase
    against a mid-fringe lock. The report is flagged locking-limited when
    the floor of the locking loop exceeds the shot-noise phase
    sensitivity; the achievable sensitivity line then carries the floor.
    """
    if locking_floor_rad_per_rthz <= 0:
        raise InvalidInputError("locking_floor_rad_per_rthz must be positive")
    ideal = replace(detector, quantum_efficiency=1.0)
    full_phase = phase_shift(cloud.column_density,
                             resonant_cross_section(point.wavelength_m), point.detuning)
    i_sig, i_shot = signal_and_noise_currents(point, detector, full_phase)
    sens = phase_sensitivity(point, cloud, ideal)
    limited = locking_floor_rad_per_rthz > sens
    return DesignReport(
        snr_max=snr_max(point, cloud, ideal),
        snr_detected=snr_max(point, cloud, detector),
        snr_modulated=snr_modulated(point, cloud, detector),
        signal_current_a=i_sig,
        shot_noise_current_a=i_shot,
        phase_sensitivity_rad_per_rthz=sens,
        column_density_sensitivity_per_rthz=column_density_sensitivity(point, cloud, detector),
        minimum_detectable_fraction=minimum_detectable_fraction(point, cloud, ideal),
        full_cloud_phase_rad=full_phase,
        heating_rate_per_atom_hz=point.absorbed_power_w
        / (photon_energy(point.wavelength_m) * cloud.atom_count),
        modulation_penalty=2.0 * j1(point.modulation_depth),
        locking_floor_rad_per_rthz=locking_floor_rad_per_rthz,
        locking_limited=limited,
        achievable_phase_sensitivity_rad_per_rthz=max(sens, locking_floor_rad_per_rthz),
        pi_swing_snr_ceiling=2.0 / (locking_floor_rad_per_rthz
                                    * math.sqrt(point.bandwidth_hz)),
    )


def imperfection_scaling(report: DesignReport, loss_factor: float) -> DesignReport:
    """Fold an aggregate loss (optics, mode mismatch, calibration) into a report.

    SNR entries and the signal current scale down by loss_factor;
    sensitivities and the minimum detectable fraction scale up; the shot
    noise and the locking-floor ceiling are unaffected.
    """
    if not 0.0 < loss_factor <= 1.0:
        raise InvalidInputError("loss_factor must be in (0, 1]")
    sens = report.phase_sensitivity_rad_per_rthz / loss_factor
    return replace(
        report,
        snr_max=report.snr_max * loss_factor,
        snr_detected=report.snr_detected * loss_factor,
        snr_modulated=report.snr_modulated * loss_factor,
        signal_current_a=report.signal_current_a * loss_factor,
        phase_sensitivity_rad_per_rthz=sens,
        column_density_sensitivity_per_rthz=report.column_density_sensitivity_per_rthz
        / loss_factor,
        minimum_detectable_fraction=report.minimum_detectable_fraction / loss_factor,
        locking_limited=report.locking_floor_rad_per_rthz > sens,
        achievable_phase_sensitivity_rad_per_rthz=max(sens, report.locking_floor_rad_per_rthz),
        loss_factor=report.loss_factor * loss_factor,
    )


_TABLE_ROWS = (
    ("snr (quantum-limited)", "snr_max", ""),
    ("snr (detected)", "snr_detected", ""),
    ("snr (modulated readout)", "snr_modulated", ""),
    ("signal current", "signal_current_a", "A"),
    ("shot-noise current", "shot_noise_current_a", "A"),
    ("phase sensitivity", "phase_sensitivity_rad_per_rthz", "rad/rtHz"),
    ("column sensitivity", "column_density_sensitivity_per_rthz", "1/rtHz"),
    ("min detectable fraction", "minimum_detectable_fraction", ""),
    ("full cloud phase", "full_cloud_phase_rad", "rad"),
    ("heating rate", "heating_rate_per_atom_hz", "photon/atom/s"),
    ("modulation penalty 2 J1(m)", "modulation_penalty", ""),
    ("locking floor", "locking_floor_rad_per_rthz", "rad/rtHz"),
    ("locking limited", "locking_limited", ""),
    ("achievable phase sensitivity", "achievable_phase_sensitivity_rad_per_rthz", "rad/rtHz"),
    ("pi-swing snr ceiling", "pi_swing_snr_ceiling", ""),
    ("loss factor", "loss_factor", ""),
)


def report_table(report: DesignReport, point: DesignPoint = None) -> str:
    """Human-readable table; the JSON form carries the same numbers."""
    lines = []
    if point is not None:
        lines += [
            f"{'detuning':<34}{point.detuning:>14.6f}  half-linewidths",
            f"{'optical depth':<34}{point.target_optical_depth:>14.6g}",
            f"{'absorbed power':<34}{point.absorbed_power_w:>14.6e}  W",
            f"{'transmitted probe power':<34}{point.transmitted_probe_power_w:>14.6e}  W",
            f"{'lo power':<34}{point.lo_power_w:>14.6e}  W",
            f"{'bandwidth':<34}{point.bandwidth_hz:>14.6g}  Hz",
            f"{'modulation depth':<34}{point.modulation_depth:>14.6f}  rad",
        ]
    for label, attr, unit in _TABLE_ROWS:
        value = getattr(report, attr)
        text = f"{value:>14.6g}" if not isinstance(value, bool) else f"{str(value):>14}"
        lines.append(f"{label:<34}{text}" + (f"  {unit}" if unit else ""))
    return "\n".join(lines) + "\n"
