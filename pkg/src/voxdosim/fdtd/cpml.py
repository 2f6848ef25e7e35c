"""Convolutional PML (CPML) stretching profiles.

One absorbing layer of ``npml`` cells lines each end of a stretched axis.
The complex stretch s(d) = kappa(d) + sigma(d)/(a(d) + i w eps0) is graded
polynomially with depth d in [0, 1] (0 at the interface, 1 at the wall):

    sigma(d) = sigma_max d^m        sigma_max = sigma_ratio (m+1)/(eta0 dx)
    kappa(d) = 1 + (kappa_max-1) d^m
    a(d)     = a_max (1 - d)

The time-update recursion uses, per sample position,

    b = exp(-(sigma/kappa + a) dt/eps0)
    c = sigma (b - 1) / ((sigma + kappa a) kappa)

Two samplings per axis: integer grid positions (edge-located H updates) and
half positions (face-located E updates). Outside the layers kappa = 1 and
c = 0, so the same update formulas hold everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constants import EPS0, ETA0

__all__ = ["AxisProfiles", "build_axis_profiles", "unity_profiles"]


@dataclass(frozen=True)
class AxisProfiles:
    """1-D stretch data for one axis (premultiplied by the cell size).

    ``inv_d_int``/``inv_d_half``: 1/(kappa dx) at integer/half positions,
    used as the curl-derivative scale. ``b_*`` and ``c_*`` drive the psi
    recursion; ``c_*`` already carries the 1/dx of the spatial difference.
    """

    inv_d_int: np.ndarray    # length n+1
    inv_d_half: np.ndarray   # length n
    b_int: np.ndarray
    c_int: np.ndarray
    b_half: np.ndarray
    c_half: np.ndarray
    npml: int

    @property
    def slabs_int(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Index ranges [start, stop) of nonzero-psi integer positions."""
        n = len(self.inv_d_half)
        if self.npml == 0:
            return (0, 0), (0, 0)
        return (1, self.npml), (n - self.npml + 1, n)

    @property
    def slabs_half(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Index ranges [start, stop) of nonzero-psi half positions."""
        n = len(self.inv_d_half)
        if self.npml == 0:
            return (0, 0), (0, 0)
        return (0, self.npml), (n - self.npml, n)


def _grade(depth, dt, dx, m, sigma_ratio, kappa_max, a_max):
    depth = np.clip(depth, 0.0, 1.0)
    sigma_max = sigma_ratio * (m + 1) / (ETA0 * dx)
    sigma = sigma_max * depth ** m
    kappa = 1.0 + (kappa_max - 1.0) * depth ** m
    a = np.where(depth > 0.0, a_max * (1.0 - depth), 0.0)
    b = np.exp(-(sigma / kappa + a) * dt / EPS0)
    denom = (sigma + kappa * a) * kappa
    c = np.where(denom > 0.0, sigma * (b - 1.0) / np.where(denom > 0, denom, 1.0), 0.0)
    return kappa, b, c


def build_axis_profiles(n_cells: int, npml: int, dt: float, dx: float,
                        m: int = 3, sigma_ratio: float = 0.8,
                        kappa_max: float = 5.0, a_max: float = 0.05) -> AxisProfiles:
    """Profiles for an axis of ``n_cells`` cells with ``npml``-cell CPML ends."""
    if npml < 1:
        raise ValueError("npml must be >= 1 for a CPML axis")
    if 2 * npml >= n_cells:
        raise ValueError(f"axis of {n_cells} cells cannot hold two {npml}-cell CPML layers")

    def depth_of(pos):
        lower = (npml - pos) / npml
        upper = (pos - (n_cells - npml)) / npml
        return np.maximum(lower, upper)

    pos_int = np.arange(n_cells + 1, dtype=np.float64)
    pos_half = np.arange(n_cells, dtype=np.float64) + 0.5
    k_i, b_i, c_i = _grade(depth_of(pos_int), dt, dx, m, sigma_ratio, kappa_max, a_max)
    k_h, b_h, c_h = _grade(depth_of(pos_half), dt, dx, m, sigma_ratio, kappa_max, a_max)
    return AxisProfiles(
        inv_d_int=1.0 / (k_i * dx),
        inv_d_half=1.0 / (k_h * dx),
        b_int=b_i, c_int=c_i / dx,
        b_half=b_h, c_half=c_h / dx,
        npml=npml,
    )


def unity_profiles(n_cells: int, dx: float) -> AxisProfiles:
    """No-stretch profiles for periodic or bare-wall axes (psi stays zero)."""
    ones_i = np.full(n_cells + 1, 1.0 / dx)
    ones_h = np.full(n_cells, 1.0 / dx)
    zero_i = np.zeros(n_cells + 1)
    zero_h = np.zeros(n_cells)
    return AxisProfiles(
        inv_d_int=ones_i, inv_d_half=ones_h,
        b_int=zero_i, c_int=zero_i.copy(),
        b_half=zero_h, c_half=zero_h.copy(),
        npml=0,
    )
