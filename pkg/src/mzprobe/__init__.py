"""Shot-noise-limited two-color Mach-Zehnder probe for cold-atom clouds.

The package simulates the full measurement chain of a dispersive atom
detector: a weak probe picks up a phase shift from the cloud, beats against
a strong local oscillator on a pair of photodiodes, and is read out by
lock-in demodulation at the probe's phase-modulation frequency while a
servo holds the interferometer path length. A closed-form designer finds
the operating point (detuning, powers, bandwidth) allowed by a heating
budget, and a Monte-Carlo harness reproduces the standard bench
characterizations (noise-vs-power, fringe calibration, SNR-vs-power,
locked sensitivity).
"""

__version__ = "0.1.0"

from .atoms import (
    AtomCloud,
    OpticalResponse,
    ProbeSpec,
    cloud_response,
    heating_budget,
    optical_depth,
    phase_shift,
    resonant_cross_section,
)
from .errors import (
    ConfigError,
    InfeasibleDesignError,
    InsufficientDataError,
    InvalidInputError,
    LockFailureError,
    MzprobeError,
)
from .fields import (
    InterferometerSpec,
    OutputPort,
    SpectralField,
    apply_atoms,
    apply_loss,
    apply_phase_modulation,
    beamsplitter,
    run_chain,
)
from .detection import DetectorSpec, NoiseConfig, PhotocurrentTrace, balanced_subtract, photocurrent
from .lockin import LockInConfig, demodulate, noise_floor
from .servo import ServoConfig, VibrationSpectrum, close_loop, open_loop_phase
from .designer import DesignPoint, DesignReport, design_point, design_report
from .config import RunConfig, load_config, shipped_config_names
from .harness import ExperimentResult, FitResult, run_experiment
