"""Staggered-grid time-domain electromagnetic solver with CPML absorbers."""

from .cpml import AxisProfiles, build_axis_profiles, unity_profiles
from .domain import (AXES, BOUNDARY_KINDS, SOURCE_KINDS, CwRamp, GaussianPulse,
                     SimulationDomain, SourceSpec, build_source_faces)
from .phasors import (CalibrationError, ConvergenceError, PhasorField,
                      PhasorFormatError, calibrate_power, cell_centered_e,
                      cell_centered_h, default_flux_box, load_phasors,
                      poynting_flux_box, save_phasors)
from .solver import FdtdSolver, StabilityError, UnsupportedMaterialError, em_energy

__all__ = [
    "AxisProfiles", "build_axis_profiles", "unity_profiles",
    "AXES", "BOUNDARY_KINDS", "SOURCE_KINDS",
    "CwRamp", "GaussianPulse", "SimulationDomain", "SourceSpec",
    "build_source_faces",
    "CalibrationError", "ConvergenceError", "PhasorField", "PhasorFormatError",
    "calibrate_power", "cell_centered_e", "cell_centered_h", "default_flux_box",
    "load_phasors", "poynting_flux_box", "save_phasors",
    "FdtdSolver", "StabilityError", "UnsupportedMaterialError", "em_energy",
]
