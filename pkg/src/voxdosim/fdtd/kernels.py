"""Compiled update kernels for the staggered-grid solver.

Layout (domain of nx*ny*nz cells, cell size dx):

    Ex (nx+1, ny, nz)   at (i,     j+1/2, k+1/2)   = x-face centers
    Ey (nx, ny+1, nz)   at (i+1/2, j,     k+1/2)
    Ez (nx, ny, nz+1)   at (i+1/2, j+1/2, k)
    Hx (nx, ny+1, nz+1) at (i+1/2, j,     k)       = x-edge midpoints
    Hy (nx+1, ny, nz+1) at (i,     j+1/2, k)
    Hz (nx+1, ny+1, nz) at (i,     j,     k+1/2)

E components sit on the faces between material voxels; H components on the
edges. Tangential H on the outer box is never updated (a magnetic wall), so
every E component updates over its full array. Each time step advances H by
a half step, then E by a full step.

The E update is semi-implicit in the conductivity and carries one Debye
polarization accumulator P per component with exponential time stepping:

    e1 = ca*e0 + cb*(curl + (1-ap)*p0/dt)
    p1 = ap*p0 + bp*(e0 + e1)

With delta_eps = 0 the coefficients give bp = 0 and p stays exactly zero, so
the update degenerates bitwise to the plain lossy scheme.

Kernels write each cell exactly once with no cross-iteration reductions, so
results are bitwise identical for any thread count. Set VOXDOSIM_SERIAL=1 to
compile without the parallel target (faster JIT, same numbers).
"""

import os

import numpy as np
from numba import njit, prange

_PARALLEL = os.environ.get("VOXDOSIM_SERIAL", "0") != "1"
_jit = njit(cache=True, parallel=_PARALLEL, fastmath=False)
_jit_serial = njit(cache=True, fastmath=False)


# ---------------------------------------------------------------------------
# H updates (curl of E); psi arrays are zero outside the CPML slabs
# ---------------------------------------------------------------------------

@_jit
def update_hx(hx, ey, ez, inv_dy_int, inv_dz_int, psi_y, psi_z, dtmu):
    nx, nyp, nzp = hx.shape
    for i in prange(nx):
        for j in range(1, nyp - 1):
            for k in range(1, nzp - 1):
                hx[i, j, k] -= dtmu * (
                    (ez[i, j, k] - ez[i, j - 1, k]) * inv_dy_int[j] + psi_y[i, j, k]
                    - (ey[i, j, k] - ey[i, j, k - 1]) * inv_dz_int[k] - psi_z[i, j, k]
                )


@_jit
def update_hy(hy, ez, ex, inv_dz_int, inv_dx_int, psi_z, psi_x, dtmu):
    nxp, ny, nzp = hy.shape
    for i in prange(1, nxp - 1):
        for j in range(ny):
            for k in range(1, nzp - 1):
                hy[i, j, k] -= dtmu * (
                    (ex[i, j, k] - ex[i, j, k - 1]) * inv_dz_int[k] + psi_z[i, j, k]
                    - (ez[i, j, k] - ez[i - 1, j, k]) * inv_dx_int[i] - psi_x[i, j, k]
                )


@_jit
def update_hz(hz, ex, ey, inv_dx_int, inv_dy_int, psi_x, psi_y, dtmu):
    nxp, nyp, nz = hz.shape
    for i in prange(1, nxp - 1):
        for j in range(1, nyp - 1):
            for k in range(nz):
                hz[i, j, k] -= dtmu * (
                    (ey[i, j, k] - ey[i - 1, j, k]) * inv_dx_int[i] + psi_x[i, j, k]
                    - (ex[i, j, k] - ex[i, j - 1, k]) * inv_dy_int[j] - psi_y[i, j, k]
                )


# ---------------------------------------------------------------------------
# E updates (curl of H, material coefficients, Debye accumulator)
# ---------------------------------------------------------------------------

@_jit
def update_ex(ex, hy, hz, ca, cb, ap, bp, pol, inv_dy_half, inv_dz_half,
              psi_y, psi_z, inv_dt):
    nxp, ny, nz = ex.shape
    for i in prange(nxp):
        for j in range(ny):
            for k in range(nz):
                curl = (
                    (hz[i, j + 1, k] - hz[i, j, k]) * inv_dy_half[j] + psi_y[i, j, k]
                    - (hy[i, j, k + 1] - hy[i, j, k]) * inv_dz_half[k] - psi_z[i, j, k]
                )
                e0 = ex[i, j, k]
                p0 = pol[i, j, k]
                e1 = ca[i, j, k] * e0 + cb[i, j, k] * (
                    curl + (1.0 - ap[i, j, k]) * p0 * inv_dt
                )
                pol[i, j, k] = ap[i, j, k] * p0 + bp[i, j, k] * (e0 + e1)
                ex[i, j, k] = e1


@_jit
def update_ey(ey, hz, hx, ca, cb, ap, bp, pol, inv_dz_half, inv_dx_half,
              psi_z, psi_x, inv_dt):
    nx, nyp, nz = ey.shape
    for i in prange(nx):
        for j in range(nyp):
            for k in range(nz):
                curl = (
                    (hx[i, j, k + 1] - hx[i, j, k]) * inv_dz_half[k] + psi_z[i, j, k]
                    - (hz[i + 1, j, k] - hz[i, j, k]) * inv_dx_half[i] - psi_x[i, j, k]
                )
                e0 = ey[i, j, k]
                p0 = pol[i, j, k]
                e1 = ca[i, j, k] * e0 + cb[i, j, k] * (
                    curl + (1.0 - ap[i, j, k]) * p0 * inv_dt
                )
                pol[i, j, k] = ap[i, j, k] * p0 + bp[i, j, k] * (e0 + e1)
                ey[i, j, k] = e1


@_jit
def update_ez(ez, hx, hy, ca, cb, ap, bp, pol, inv_dx_half, inv_dy_half,
              psi_x, psi_y, inv_dt):
    nx, ny, nzp = ez.shape
    for i in prange(nx):
        for j in range(ny):
            for k in range(nzp):
                curl = (
                    (hy[i + 1, j, k] - hy[i, j, k]) * inv_dx_half[i] + psi_x[i, j, k]
                    - (hx[i, j + 1, k] - hx[i, j, k]) * inv_dy_half[j] - psi_y[i, j, k]
                )
                e0 = ez[i, j, k]
                p0 = pol[i, j, k]
                e1 = ca[i, j, k] * e0 + cb[i, j, k] * (
                    curl + (1.0 - ap[i, j, k]) * p0 * inv_dt
                )
                pol[i, j, k] = ap[i, j, k] * p0 + bp[i, j, k] * (e0 + e1)
                ez[i, j, k] = e1


# ---------------------------------------------------------------------------
# CPML psi recursions, run only over the slab [s0, s1) of the stretched axis.
# The c arrays already include the 1/dx of the spatial difference.
# ---------------------------------------------------------------------------

@_jit
def psi_e_yx(psi, hz, b, c, s0, s1):
    # psi for dHz/dy in the Ex update; stretch along y (half positions)
    nxp, ny, nz = psi.shape
    for i in prange(nxp):
        for j in range(s0, s1):
            for k in range(nz):
                psi[i, j, k] = b[j] * psi[i, j, k] + c[j] * (hz[i, j + 1, k] - hz[i, j, k])


@_jit
def psi_e_zx(psi, hy, b, c, s0, s1):
    # psi for dHy/dz in the Ex update; stretch along z
    nxp, ny, nz = psi.shape
    for i in prange(nxp):
        for j in range(ny):
            for k in range(s0, s1):
                psi[i, j, k] = b[k] * psi[i, j, k] + c[k] * (hy[i, j, k + 1] - hy[i, j, k])


@_jit
def psi_e_zy(psi, hx, b, c, s0, s1):
    # psi for dHx/dz in the Ey update; stretch along z
    nx, nyp, nz = psi.shape
    for i in prange(nx):
        for j in range(nyp):
            for k in range(s0, s1):
                psi[i, j, k] = b[k] * psi[i, j, k] + c[k] * (hx[i, j, k + 1] - hx[i, j, k])


@_jit
def psi_e_xy(psi, hz, b, c, s0, s1):
    # psi for dHz/dx in the Ey update; stretch along x
    nx, nyp, nz = psi.shape
    for i in prange(s0, s1):
        for j in range(nyp):
            for k in range(nz):
                psi[i, j, k] = b[i] * psi[i, j, k] + c[i] * (hz[i + 1, j, k] - hz[i, j, k])


@_jit
def psi_e_xz(psi, hy, b, c, s0, s1):
    # psi for dHy/dx in the Ez update; stretch along x
    nx, ny, nzp = psi.shape
    for i in prange(s0, s1):
        for j in range(ny):
            for k in range(nzp):
                psi[i, j, k] = b[i] * psi[i, j, k] + c[i] * (hy[i + 1, j, k] - hy[i, j, k])


@_jit
def psi_e_yz(psi, hx, b, c, s0, s1):
    # psi for dHx/dy in the Ez update; stretch along y
    nx, ny, nzp = psi.shape
    for i in prange(nx):
        for j in range(s0, s1):
            for k in range(nzp):
                psi[i, j, k] = b[j] * psi[i, j, k] + c[j] * (hx[i, j + 1, k] - hx[i, j, k])


@_jit
def psi_h_yx(psi, ez, b, c, s0, s1):
    # psi for dEz/dy in the Hx update; stretch along y (integer positions)
    nx, nyp, nzp = psi.shape
    for i in prange(nx):
        for j in range(s0, s1):
            for k in range(nzp - 1):
                psi[i, j, k] = b[j] * psi[i, j, k] + c[j] * (ez[i, j, k] - ez[i, j - 1, k])


@_jit
def psi_h_zx(psi, ey, b, c, s0, s1):
    # psi for dEy/dz in the Hx update; stretch along z
    nx, nyp, nzp = psi.shape
    for i in prange(nx):
        for j in range(nyp - 1):
            for k in range(s0, s1):
                psi[i, j, k] = b[k] * psi[i, j, k] + c[k] * (ey[i, j, k] - ey[i, j, k - 1])


@_jit
def psi_h_zy(psi, ex, b, c, s0, s1):
    # psi for dEx/dz in the Hy update; stretch along z
    nxp, ny, nzp = psi.shape
    for i in prange(nxp):
        for j in range(ny):
            for k in range(s0, s1):
                psi[i, j, k] = b[k] * psi[i, j, k] + c[k] * (ex[i, j, k] - ex[i, j, k - 1])


@_jit
def psi_h_xy(psi, ez, b, c, s0, s1):
    # psi for dEz/dx in the Hy update; stretch along x
    nxp, ny, nzp = psi.shape
    for i in prange(s0, s1):
        for j in range(ny):
            for k in range(nzp - 1):
                psi[i, j, k] = b[i] * psi[i, j, k] + c[i] * (ez[i, j, k] - ez[i - 1, j, k])


@_jit
def psi_h_xz(psi, ey, b, c, s0, s1):
    # psi for dEy/dx in the Hz update; stretch along x
    nxp, nyp, nz = psi.shape
    for i in prange(s0, s1):
        for j in range(nyp - 1):
            for k in range(nz):
                psi[i, j, k] = b[i] * psi[i, j, k] + c[i] * (ey[i, j, k] - ey[i - 1, j, k])


@_jit
def psi_h_yz(psi, ex, b, c, s0, s1):
    # psi for dEx/dy in the Hz update; stretch along y
    nxp, nyp, nz = psi.shape
    for i in prange(nxp):
        for j in range(s0, s1):
            for k in range(nz):
                psi[i, j, k] = b[j] * psi[i, j, k] + c[j] * (ex[i, j, k] - ex[i, j - 1, k])


# ---------------------------------------------------------------------------
# Periodic seams: boundary rows of the H updates with wrapped reads.
# E components never need seams (their reads stay in bounds); the duplicate
# top planes of each array are synced by the driver after the kernels run.
# ---------------------------------------------------------------------------

@_jit_serial
def seam_hx(hx, ey, ez, inv_dy_int, inv_dz_int, psi_y, psi_z, dtmu, py, pz):
    nx, nyp, nzp = hx.shape
    ny = nyp - 1
    nz = nzp - 1
    if py:
        k0 = 0 if pz else 1
        for i in range(nx):
            for k in range(k0, nz):
                km = k - 1 if k > 0 else nz - 1
                hx[i, 0, k] -= dtmu * (
                    (ez[i, 0, k] - ez[i, ny - 1, k]) * inv_dy_int[0] + psi_y[i, 0, k]
                    - (ey[i, 0, k] - ey[i, 0, km]) * inv_dz_int[k] - psi_z[i, 0, k]
                )
    if pz:
        for i in range(nx):
            for j in range(1, ny):
                hx[i, j, 0] -= dtmu * (
                    (ez[i, j, 0] - ez[i, j - 1, 0]) * inv_dy_int[j] + psi_y[i, j, 0]
                    - (ey[i, j, 0] - ey[i, j, nz - 1]) * inv_dz_int[0] - psi_z[i, j, 0]
                )


@_jit_serial
def seam_hy(hy, ez, ex, inv_dz_int, inv_dx_int, psi_z, psi_x, dtmu, pz, px):
    nxp, ny, nzp = hy.shape
    nx = nxp - 1
    nz = nzp - 1
    if pz:
        i0 = 0 if px else 1
        for i in range(i0, nx):
            im = i - 1 if i > 0 else nx - 1
            for j in range(ny):
                hy[i, j, 0] -= dtmu * (
                    (ex[i, j, 0] - ex[i, j, nz - 1]) * inv_dz_int[0] + psi_z[i, j, 0]
                    - (ez[i, j, 0] - ez[im, j, 0]) * inv_dx_int[i] - psi_x[i, j, 0]
                )
    if px:
        for j in range(ny):
            for k in range(1, nz):
                hy[0, j, k] -= dtmu * (
                    (ex[0, j, k] - ex[0, j, k - 1]) * inv_dz_int[k] + psi_z[0, j, k]
                    - (ez[0, j, k] - ez[nx - 1, j, k]) * inv_dx_int[0] - psi_x[0, j, k]
                )


@_jit_serial
def seam_hz(hz, ex, ey, inv_dx_int, inv_dy_int, psi_x, psi_y, dtmu, px, py):
    nxp, nyp, nz = hz.shape
    nx = nxp - 1
    ny = nyp - 1
    if px:
        j0 = 0 if py else 1
        for j in range(j0, ny):
            jm = j - 1 if j > 0 else ny - 1
            for k in range(nz):
                hz[0, j, k] -= dtmu * (
                    (ey[0, j, k] - ey[nx - 1, j, k]) * inv_dx_int[0] + psi_x[0, j, k]
                    - (ex[0, j, k] - ex[0, jm, k]) * inv_dy_int[j] - psi_y[0, j, k]
                )
    if py:
        for i in range(1, nx):
            for k in range(nz):
                hz[i, 0, k] -= dtmu * (
                    (ey[i, 0, k] - ey[i - 1, 0, k]) * inv_dx_int[i] + psi_x[i, 0, k]
                    - (ex[i, 0, k] - ex[i, ny - 1, k]) * inv_dy_int[0] - psi_y[i, 0, k]
                )


# ---------------------------------------------------------------------------
# Soft source injection and running-DFT accumulation
# ---------------------------------------------------------------------------

@_jit_serial
def inject_soft(field, cb, ii, jj, kk, values):
    """field += -cb * J at the listed faces (soft current source)."""
    for e in range(len(ii)):
        field[ii[e], jj[e], kk[e]] -= cb[ii[e], jj[e], kk[e]] * values[e]


@_jit
def accumulate_phasor(acc, field, phase):
    """acc += field * phase, with a complex scalar phase factor."""
    n0, n1, n2 = field.shape
    for i in prange(n0):
        for j in range(n1):
            for k in range(n2):
                acc[i, j, k] = acc[i, j, k] + field[i, j, k] * phase
