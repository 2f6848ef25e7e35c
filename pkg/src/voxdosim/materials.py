"""Dispersive tissue dielectrics and the material table.

A material's complex relative permittivity follows a single-pole Cole-Cole
model with a static conductivity term, under the e^{+i w t} phasor convention::

    eps*(w) = eps_inf + delta_eps / (1 + (i w tau)^(1 - alpha)) + sigma_s / (i w eps0)

alpha = 0 is the Debye special case, the only one the time-domain solver
accepts. Loss shows up as a negative imaginary part; the effective (total)
conductivity at frequency f is

    sigma_eff(w) = sigma_s - w eps0 Im[pole term]

which is what point SAR uses.

The built-in table returned by :func:`default_material_table` holds
literature-typical single-pole fits for breast tissues plus two hardware
materials. The values are reasonable defaults for desk studies, not a
calibrated reference; replace them via a material table file for any work
where the dielectric data matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .constants import EPS0

__all__ = [
    "DispersiveModel",
    "Material",
    "MaterialTableError",
    "evaluate_permittivity",
    "effective_conductivity",
    "parse_material_table",
    "format_material_table",
    "load_material_table",
    "save_material_table",
    "default_material_table",
]


class MaterialTableError(ValueError):
    """Raised for malformed material table text."""


@dataclass(frozen=True)
class DispersiveModel:
    """Single-pole Cole-Cole dispersion parameters.

    Parameters
    ----------
    eps_inf : float
        Optical-limit relative permittivity, >= 1.
    delta_eps : float
        Pole strength (eps_static - eps_inf), >= 0.
    tau : float
        Relaxation time in seconds. Must be > 0 when delta_eps > 0.
    alpha : float
        Cole-Cole broadening exponent in [0, 1). 0 means Debye.
    sigma_s : float
        Static (ionic) conductivity in S/m, >= 0.
    """

    eps_inf: float
    delta_eps: float = 0.0
    tau: float = 0.0
    alpha: float = 0.0
    sigma_s: float = 0.0

    def __post_init__(self) -> None:
        if not self.eps_inf >= 1.0:
            raise ValueError(f"eps_inf must be >= 1, got {self.eps_inf}")
        if self.delta_eps < 0.0:
            raise ValueError(f"delta_eps must be >= 0, got {self.delta_eps}")
        if self.delta_eps > 0.0 and not self.tau > 0.0:
            raise ValueError("tau must be > 0 when delta_eps > 0")
        if self.tau < 0.0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.sigma_s < 0.0:
            raise ValueError(f"sigma_s must be >= 0, got {self.sigma_s}")

    @property
    def is_debye(self) -> bool:
        """True when the pole is plain Debye (alpha == 0)."""
        return self.alpha == 0.0


@dataclass(frozen=True)
class Material:
    """A named voxel material: dielectric model plus bulk/thermal data.

    Thermal fields follow the Pennes convention: ``thermal_k`` in W/(m K),
    ``heat_capacity`` in J/(kg K), ``perfusion`` as a volumetric blood
    exchange rate in 1/s, ``metabolic_rate`` in W/m^3.
    """

    name: str
    model: DispersiveModel
    density: float                 # kg/m^3
    thermal_k: float = 0.0         # W/(m K)
    heat_capacity: float = 0.0     # J/(kg K)
    perfusion: float = 0.0         # 1/s
    metabolic_rate: float = 0.0    # W/m^3

    def __post_init__(self) -> None:
        if not self.name or any(c.isspace() for c in self.name):
            raise ValueError(f"material name must be non-empty without spaces: {self.name!r}")
        if not self.density > 0.0:
            raise ValueError(f"density must be > 0, got {self.density}")
        for field in ("thermal_k", "heat_capacity", "perfusion", "metabolic_rate"):
            if getattr(self, field) < 0.0:
                raise ValueError(f"{field} must be >= 0")


def evaluate_permittivity(model: DispersiveModel, frequency_hz):
    """Complex relative permittivity eps*(w) at one or more frequencies.

    Parameters
    ----------
    model : DispersiveModel
    frequency_hz : float or array_like
        Frequencies in Hz, all > 0.

    Returns
    -------
    complex or np.ndarray of complex
        eps_inf + delta_eps/(1 + (i w tau)^(1-alpha)) + sigma_s/(i w eps0),
        with Im <= 0 (lossy or lossless, never gainy).
    """
    f = np.asarray(frequency_hz, dtype=np.float64)
    if np.any(f <= 0.0):
        raise ValueError("frequency_hz must be > 0")
    w = 2.0 * np.pi * f
    eps = np.full(f.shape, model.eps_inf, dtype=np.complex128)
    if model.delta_eps > 0.0:
        eps = eps + model.delta_eps / (1.0 + _pole_denominator(w, model))
    if model.sigma_s > 0.0:
        eps = eps + model.sigma_s / (1j * w * EPS0)
    return eps if eps.shape else complex(eps)


def effective_conductivity(model: DispersiveModel, frequency_hz):
    """Total conductivity sigma_eff(w) = sigma_s - w eps0 Im[pole term], in S/m.

    This is the dissipation the point-SAR formula uses. The static term enters
    directly; the pole contributes its out-of-phase polarization loss.
    """
    f = np.asarray(frequency_hz, dtype=np.float64)
    if np.any(f <= 0.0):
        raise ValueError("frequency_hz must be > 0")
    w = 2.0 * np.pi * f
    sig = np.full(f.shape, model.sigma_s, dtype=np.float64)
    if model.delta_eps > 0.0:
        pole = model.delta_eps / (1.0 + _pole_denominator(w, model))
        sig = sig - w * EPS0 * pole.imag
    return sig if sig.shape else float(sig)


def _pole_denominator(w, model: DispersiveModel):
    """(i w tau)^(1-alpha), taking the exact product path for plain Debye.

    Complex exponentiation goes through exp/log and costs ~1e-11 relative
    accuracy even for an exponent of exactly 1.0, so alpha == 0 must not
    pay it.
    """
    if model.alpha == 0.0:
        return 1j * w * model.tau
    return (1j * w * model.tau) ** (1.0 - model.alpha)


# ---------------------------------------------------------------------------
# Material table text format
#
# One material per line, '#' starts a comment, blank lines ignored:
#   name eps_inf delta_eps tau_ps alpha sigma_s density k C perfusion Q_m
# tau is given in picoseconds in files, seconds in DispersiveModel.
# Line order defines voxel IDs (first line = ID 0 = background/free space).
# ---------------------------------------------------------------------------

_TABLE_FIELDS = 11


def parse_material_table(text: str) -> list[Material]:
    """Parse material table text into an ordered list (index = voxel ID)."""
    materials: list[Material] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != _TABLE_FIELDS:
            raise MaterialTableError(
                f"line {lineno}: expected {_TABLE_FIELDS} fields "
                f"(name eps_inf delta_eps tau_ps alpha sigma_s density k C perfusion Q_m), "
                f"got {len(parts)}"
            )
        name = parts[0]
        try:
            nums = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise MaterialTableError(f"line {lineno}: non-numeric field: {exc}") from None
        try:
            model = DispersiveModel(
                eps_inf=nums[0],
                delta_eps=nums[1],
                tau=nums[2] * 1e-12,
                alpha=nums[3],
                sigma_s=nums[4],
            )
            materials.append(
                Material(
                    name=name,
                    model=model,
                    density=nums[5],
                    thermal_k=nums[6],
                    heat_capacity=nums[7],
                    perfusion=nums[8],
                    metabolic_rate=nums[9],
                )
            )
        except ValueError as exc:
            raise MaterialTableError(f"line {lineno}: {exc}") from None
    if not materials:
        raise MaterialTableError("material table is empty")
    if len(materials) > 256:
        raise MaterialTableError("material table exceeds 256 entries (voxel IDs are one byte)")
    return materials


def format_material_table(materials: list[Material]) -> str:
    """Render materials back to the text format (inverse of parse)."""
    lines = ["# name eps_inf delta_eps tau_ps alpha sigma_s density k C perfusion Q_m"]
    for m in materials:
        d = m.model
        lines.append(
            f"{m.name} {d.eps_inf!r} {d.delta_eps!r} {d.tau * 1e12!r} {d.alpha!r} "
            f"{d.sigma_s!r} {m.density!r} {m.thermal_k!r} {m.heat_capacity!r} "
            f"{m.perfusion!r} {m.metabolic_rate!r}"
        )
    return "\n".join(lines) + "\n"


def load_material_table(path) -> list[Material]:
    """Load a material table file. See :func:`parse_material_table`."""
    return parse_material_table(Path(path).read_text())


def save_material_table(materials: list[Material], path) -> None:
    Path(path).write_text(format_material_table(materials))


def default_material_table() -> list[Material]:
    """Built-in table: free space, breast tissues, and hardware materials.

    IDs: 0 free_space, 1 skin, 2 adipose, 3 fibroglandular, 4 abs_shell,
    5 gelatin_water. Tissue poles are plain Debye so the table works in the
    time-domain solver. Values are literature-typical fits, not authoritative
    measurements; override with a table file when accuracy matters.
    """
    def mat(name, eps_inf, delta_eps, tau_ps, sigma_s, density, k, c, w_b, q_m):
        return Material(
            name=name,
            model=DispersiveModel(eps_inf, delta_eps, tau_ps * 1e-12, 0.0, sigma_s),
            density=density,
            thermal_k=k,
            heat_capacity=c,
            perfusion=w_b,
            metabolic_rate=q_m,
        )

    return [
        mat("free_space",     1.00,  0.00,  0.0, 0.000, 1.2,  0.026, 1005.0, 0.0,    0.0),
        mat("skin",           4.00, 33.00,  7.23, 0.100, 1109.0, 0.37, 3391.0, 1.8e-3, 1827.0),
        mat("adipose",        2.55,  1.85, 13.00, 0.043,  911.0, 0.21, 2348.0, 5.0e-4,  464.0),
        mat("fibroglandular", 13.81, 35.55, 13.00, 0.738, 1041.0, 0.33, 3610.0, 9.0e-4,  700.0),
        mat("abs_shell",      3.50,  0.00,  0.0, 0.000, 1040.0, 0.25, 1500.0, 0.0,    0.0),
        mat("gelatin_water",  5.00, 48.00,  9.40, 0.600, 1050.0, 0.55, 3900.0, 0.0,    0.0),
    ]
