"""Voxel-phantom microwave dosimetry: dispersive FDTD, SAR averaging, bioheat.

The package is organized as a pipeline. ``materials`` defines single-pole
dispersive tissue models and the material table; ``phantom`` builds and stores
voxel geometries; ``fdtd`` drives them to a steady state and extracts complex
field phasors; ``sar`` turns calibrated phasors into point and mass-averaged
absorption maps with compliance verdicts; ``bioheat`` integrates the resulting
heating transient; ``sweep`` ties the stages into distance/power/density
parameter scans. The ``voxdosim`` console script exposes each stage as a
subcommand.
"""

__version__ = "0.1.0"

from .bioheat import (ThermalParams, ThermalResult, ThermalState, run_exposure,
                      stable_dt, step_thermal)
from .constants import C0, EPS0, ETA0, MU0
from .fdtd import (CalibrationError, ConvergenceError, FdtdSolver,
                   PhasorField, SimulationDomain, SourceSpec, StabilityError,
                   calibrate_power, cell_centered_e, load_phasors,
                   poynting_flux_box, save_phasors)
from .materials import (DispersiveModel, Material, MaterialTableError,
                        default_material_table, effective_conductivity,
                        evaluate_permittivity, load_material_table,
                        save_material_table)
from .phantom import (PhantomFormatError, PhantomSpec, VoxelPhantom,
                      fibroglandular_fraction, generate_phantom, load_phantom,
                      resample, save_phantom, total_tissue_mass)
from .sar import (LIMIT_1G_W_PER_KG, LIMIT_10G_W_PER_KG, ComplianceReport,
                  SarField, compliance, mass_averaged_sar, point_sar)
from .sweep import (SweepResult, SweepRow, SweepSpec, default_power_ladder,
                    run_sweep, write_sweep_csv)
from .volumes import VolumeFormatError, load_volume, save_volume

__all__ = [
    "C0", "EPS0", "ETA0", "MU0",
    "CalibrationError", "ConvergenceError", "FdtdSolver", "PhasorField",
    "SimulationDomain", "SourceSpec", "StabilityError", "calibrate_power",
    "cell_centered_e", "load_phasors", "poynting_flux_box", "save_phasors",
    "DispersiveModel", "Material", "MaterialTableError",
    "default_material_table", "effective_conductivity",
    "evaluate_permittivity", "load_material_table", "save_material_table",
    "PhantomFormatError", "PhantomSpec", "VoxelPhantom",
    "fibroglandular_fraction", "generate_phantom", "load_phantom", "resample",
    "save_phantom", "total_tissue_mass",
    "LIMIT_1G_W_PER_KG", "LIMIT_10G_W_PER_KG", "ComplianceReport", "SarField",
    "compliance", "mass_averaged_sar", "point_sar",
    "ThermalParams", "ThermalResult", "ThermalState", "run_exposure",
    "stable_dt", "step_thermal",
    "SweepResult", "SweepRow", "SweepSpec", "default_power_ladder",
    "run_sweep", "write_sweep_csv",
    "VolumeFormatError", "load_volume", "save_volume",
    "__version__",
]
