"""Optical response of a cold two-level atom cloud.

Far from resonance the cloud acts on the probe as a thin dispersive slab.
With column density n_col [m^-2] along the probe axis and detuning Delta in
units of half the atomic linewidth, the transmitted carrier acquires

    phase shift    phi = n_col * sigma0 * Delta / (2 * (1 + Delta**2))  [rad]
    optical depth  k   = n_col * sigma0 / (1 + Delta**2)

where sigma0 = 3 * lambda**2 / (2 * pi) is the resonant absorption cross
section; power transmission through the cloud is exp(-k). Each absorbed
photon deposits one recoil, so holding the sample to one scattered photon
per atom per lifetime caps the absorbed power at P_ab = (N / tau) * h * nu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c, h

from .errors import InvalidInputError

_AXES = ("x", "y", "z")


@dataclass(frozen=True)
class AtomCloud:
    """Uniform-density box of atoms probed along one axis.

    atom_count  total number of atoms in the box
    extent_*_m  box edge lengths [m]
    probe_axis  axis the probe propagates along ("x", "y" or "z")
    lifetime_s  usable sample lifetime [s]; sets the heating budget
    """

    atom_count: float
    extent_x_m: float
    extent_y_m: float
    extent_z_m: float
    probe_axis: str = "z"
    lifetime_s: float = 1.0

    def __post_init__(self):
        if self.atom_count <= 0:
            raise InvalidInputError("atom_count must be positive")
        if min(self.extent_x_m, self.extent_y_m, self.extent_z_m) <= 0:
            raise InvalidInputError("cloud extents must be positive")
        if self.probe_axis not in _AXES:
            raise InvalidInputError(f"probe_axis must be one of {_AXES}")
        if self.lifetime_s <= 0:
            raise InvalidInputError("lifetime_s must be positive")

    @property
    def column_density(self) -> float:
        """Atoms per unit area transverse to the probe axis [m^-2]."""
        extents = dict(x=self.extent_x_m, y=self.extent_y_m, z=self.extent_z_m)
        transverse = [v for k, v in extents.items() if k != self.probe_axis]
        return self.atom_count / (transverse[0] * transverse[1])


@dataclass(frozen=True)
class ProbeSpec:
    """Probe light parameters.

    wavelength_m   optical wavelength [m]
    detuning       offset from resonance in units of half the linewidth;
                   sign picks the side of resonance
    input_power_w  probe power entering the cloud [W]
    """

    wavelength_m: float
    detuning: float
    input_power_w: float = 0.0

    def __post_init__(self):
        if self.wavelength_m <= 0:
            raise InvalidInputError("wavelength_m must be positive")
        if self.input_power_w < 0:
            raise InvalidInputError("input_power_w must be non-negative")

    @property
    def frequency_hz(self) -> float:
        return c / self.wavelength_m

    @property
    def photon_energy_j(self) -> float:
        return photon_energy(self.wavelength_m)


@dataclass(frozen=True)
class OpticalResponse:
    """What the cloud does to the probe carrier and its sidebands.

    phase_shift_rad     dispersive phase phi picked up in transmission
    optical_depth       attenuation exponent k
    transmission        power transmission exp(-k)
    scattering_rate_hz  photons absorbed per second at the given probe power
    """

    phase_shift_rad: float
    optical_depth: float
    transmission: float
    scattering_rate_hz: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.transmission <= 1.0:
            raise InvalidInputError("transmission must be in (0, 1]")
        if not math.isclose(self.transmission, math.exp(-self.optical_depth), rel_tol=1e-9):
            raise InvalidInputError("transmission must equal exp(-optical_depth)")
        if self.scattering_rate_hz < 0:
            raise InvalidInputError("scattering_rate_hz must be non-negative")

    @classmethod
    def vacuum(cls) -> "OpticalResponse":
        """No atoms in the beam."""
        return cls(phase_shift_rad=0.0, optical_depth=0.0, transmission=1.0)


@dataclass(frozen=True)
class HeatingBudget:
    """Absorbed-power cap from the one-photon-per-atom-per-lifetime rule."""

    max_scattering_rate_hz: float
    max_absorbed_power_w: float


def photon_energy(wavelength_m: float) -> float:
    """Photon energy h * c / lambda [J]."""
    if wavelength_m <= 0:
        raise InvalidInputError("wavelength must be positive")
    return h * c / wavelength_m


def resonant_cross_section(wavelength_m: float) -> float:
    """Resonant absorption cross section 3 * lambda**2 / (2 * pi) [m^2]."""
    if wavelength_m <= 0:
        raise InvalidInputError("wavelength must be positive")
    return 3.0 * wavelength_m**2 / (2.0 * math.pi)


def phase_shift(column_density: float, cross_section: float, detuning: float) -> float:
    """Dispersive phase n_col * sigma0 * Delta / (2 * (1 + Delta**2)) [rad]."""
    if column_density < 0:
        raise InvalidInputError("column_density must be non-negative")
    if cross_section < 0:
        raise InvalidInputError("cross_section must be non-negative")
    return column_density * cross_section * detuning / (2.0 * (1.0 + detuning**2))


def optical_depth(column_density: float, cross_section: float, detuning: float) -> float:
    """Off-resonant optical depth n_col * sigma0 / (1 + Delta**2)."""
    if column_density < 0:
        raise InvalidInputError("column_density must be non-negative")
    if cross_section < 0:
        raise InvalidInputError("cross_section must be non-negative")
    return column_density * cross_section / (1.0 + detuning**2)


def heating_budget(cloud: AtomCloud, photon_energy_j: float) -> HeatingBudget:
    """Scattering-rate and absorbed-power caps for one photon/atom/lifetime."""
    if photon_energy_j <= 0:
        raise InvalidInputError("photon_energy_j must be positive")
    rate = cloud.atom_count / cloud.lifetime_s
    return HeatingBudget(max_scattering_rate_hz=rate, max_absorbed_power_w=rate * photon_energy_j)


def cloud_response(cloud: AtomCloud, probe: ProbeSpec) -> OpticalResponse:
    """Evaluate phi, k, transmission and the scattering rate for a probe."""
    sigma0 = resonant_cross_section(probe.wavelength_m)
    n_col = cloud.column_density
    phi = phase_shift(n_col, sigma0, probe.detuning)
    k = optical_depth(n_col, sigma0, probe.detuning)
    transmission = math.exp(-k)
    absorbed = probe.input_power_w * (1.0 - transmission)
    return OpticalResponse(
        phase_shift_rad=phi,
        optical_depth=k,
        transmission=transmission,
        scattering_rate_hz=absorbed / probe.photon_energy_j,
    )
