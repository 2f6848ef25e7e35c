"""Time-domain solver: coefficient assembly, stepping, steady-state phasors.

Material properties live on voxels; E components live on the faces between
them. Each face coefficient uses the arithmetic mean of the two voxels the
face separates (relaxation times are averaged weighted by the dispersive
strength, so a dispersive/non-dispersive interface keeps the dispersive
voxel's time constant). The semi-implicit update for a face with effective
values (eps_inf, sigma, delta_eps, tau) and time step dt:

    a_p   = exp(-dt/tau)
    b_p   = eps0 * delta_eps * (1 - a_p) / 2
    denom = eps0*eps_inf/dt + sigma/2 + b_p/dt
    ca    = (eps0*eps_inf/dt - sigma/2 - b_p/dt) / denom
    cb    = 1 / denom

Time stepping snaps to an integer number of steps per excitation period
(dt = T/ceil(T/dt_cfl)), which makes the steady-state discrete Fourier
transform leakage-free. Convergence is judged on the total E-field energy
metric sampled once per period; two consecutive relative changes below the
tolerance count as steady, after which the phasor transform accumulates over
whole periods.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from ..constants import C0, EPS0, MU0
from ..materials import MaterialTableError
from . import kernels as K
from .cpml import AxisProfiles, build_axis_profiles, unity_profiles
from .domain import CwRamp, SimulationDomain, SourceSpec, build_source_faces
from .phasors import PhasorField

__all__ = ["FdtdSolver", "StabilityError", "UnsupportedMaterialError", "em_energy"]


class StabilityError(RuntimeError):
    """The time stepping diverged (non-finite or runaway field energy)."""

    def __init__(self, message: str, history=()):
        super().__init__(message)
        self.history = tuple(history)


class UnsupportedMaterialError(MaterialTableError):
    """A material in the grid cannot be represented by the time-domain update."""


def _face_average(cell: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    """Mean of the two cells adjacent to each face along ``axis``.

    Output gains one sample along ``axis``. Non-periodic boundary faces take
    the single adjacent cell's value; periodic ones average across the seam.
    """
    pad = [(0, 0)] * 3
    pad[axis] = (1, 1)
    p = np.pad(cell, pad, mode="wrap" if periodic else "edge")
    sl_lo = [slice(None)] * 3
    sl_hi = [slice(None)] * 3
    sl_lo[axis] = slice(0, -1)
    sl_hi[axis] = slice(1, None)
    return 0.5 * (p[tuple(sl_lo)] + p[tuple(sl_hi)])


class FdtdSolver:
    """Explicit staggered-grid solver over a SimulationDomain.

    Parameters
    ----------
    domain : SimulationDomain
    source : SourceSpec, optional
        Parametric excitation; omit it and call add_drive() for custom feeds.
    dt_override : float, optional
        Replace the stability-limited time step (diagnostics only; values
        above the limit diverge, which is the point of the knob).
    """

    def __init__(self, domain: SimulationDomain, source: SourceSpec | None = None,
                 dt_override: float | None = None):
        self.domain = domain
        self.source_spec = source
        nx, ny, nz = domain.cell_dims
        self.cell_dims = (nx, ny, nz)
        dx = domain.resolution
        self.dx = dx

        # --- time step: integer steps per period ---------------------------
        f = domain.frequency_hz
        period = 1.0 / f
        self.cfl_dt = domain.courant_factor * dx / (C0 * math.sqrt(3.0))
        if dt_override is None:
            self.steps_per_period = int(math.ceil(period / self.cfl_dt))
            self.dt = period / self.steps_per_period
        else:
            if not dt_override > 0.0:
                raise ValueError("dt_override must be > 0")
            self.dt = float(dt_override)
            self.steps_per_period = max(1, int(round(period / self.dt)))
        self.n = 0

        # --- material lookup -----------------------------------------------
        ids = domain.material_ids()
        mats = domain.phantom.materials
        present = np.unique(ids)
        for mid in present:
            m = mats[mid]
            if m.model.alpha != 0.0:
                raise UnsupportedMaterialError(
                    f"material {m.name!r} has a fractional relaxation exponent "
                    f"(alpha={m.model.alpha}); the time-domain update only covers "
                    f"alpha=0. Evaluate it in the frequency domain instead."
                )
        nmat = len(mats)
        lut_eps = np.array([m.model.eps_inf for m in mats])
        lut_sig = np.array([m.model.sigma_s for m in mats])
        lut_dep = np.array([m.model.delta_eps for m in mats])
        lut_tau = np.array([m.model.tau for m in mats])
        eps_c = lut_eps[ids]
        sig_c = lut_sig[ids]
        dep_c = lut_dep[ids]
        dtau_c = (lut_dep * lut_tau)[ids]

        periodic = tuple(b == "periodic" for b in domain.boundary)
        self._periodic = periodic

        def coeffs(comp_axis):
            eps_f = _face_average(eps_c, comp_axis, periodic[comp_axis])
            sig_f = _face_average(sig_c, comp_axis, periodic[comp_axis])
            dep_f = _face_average(dep_c, comp_axis, periodic[comp_axis])
            dtau_f = _face_average(dtau_c, comp_axis, periodic[comp_axis])
            tau_f = np.where(dep_f > 0.0, dtau_f / np.where(dep_f > 0.0, dep_f, 1.0), 1.0)
            ap = np.exp(-self.dt / tau_f)
            bp = EPS0 * dep_f * (1.0 - ap) / 2.0
            denom = EPS0 * eps_f / self.dt + sig_f / 2.0 + bp / self.dt
            ca = (EPS0 * eps_f / self.dt - sig_f / 2.0 - bp / self.dt) / denom
            cb = 1.0 / denom
            return (np.ascontiguousarray(ca), np.ascontiguousarray(cb),
                    np.ascontiguousarray(ap), np.ascontiguousarray(bp))

        self.ca_x, self.cb_x, self.ap_x, self.bp_x = coeffs(0)
        self.ca_y, self.cb_y, self.ap_y, self.bp_y = coeffs(1)
        self.ca_z, self.cb_z, self.ap_z, self.bp_z = coeffs(2)

        # --- boundary profiles ----------------------------------------------
        def make_profile(axis, n_cells) -> AxisProfiles:
            if domain.boundary[axis] == "cpml":
                return build_axis_profiles(n_cells, domain.pml_cells, self.dt, dx)
            return unity_profiles(n_cells, dx)

        self.prof = (make_profile(0, nx), make_profile(1, ny), make_profile(2, nz))

        # --- field state ------------------------------------------------------
        z = np.zeros
        self.ex = z((nx + 1, ny, nz))
        self.ey = z((nx, ny + 1, nz))
        self.ez = z((nx, ny, nz + 1))
        self.hx = z((nx, ny + 1, nz + 1))
        self.hy = z((nx + 1, ny, nz + 1))
        self.hz = z((nx + 1, ny + 1, nz))
        self.pol_x = z(self.ex.shape)
        self.pol_y = z(self.ey.shape)
        self.pol_z = z(self.ez.shape)
        self.psi_ex_y = z(self.ex.shape)
        self.psi_ex_z = z(self.ex.shape)
        self.psi_ey_z = z(self.ey.shape)
        self.psi_ey_x = z(self.ey.shape)
        self.psi_ez_x = z(self.ez.shape)
        self.psi_ez_y = z(self.ez.shape)
        self.psi_hx_y = z(self.hx.shape)
        self.psi_hx_z = z(self.hx.shape)
        self.psi_hy_z = z(self.hy.shape)
        self.psi_hy_x = z(self.hy.shape)
        self.psi_hz_x = z(self.hz.shape)
        self.psi_hz_y = z(self.hz.shape)

        # --- drives ---------------------------------------------------------
        self._drives: list[dict] = []
        self.source_bbox = None
        if source is not None:
            comp, idx, amps, phases, bbox = build_source_faces(domain, source)
            self._check_source_clearance(bbox)
            wf = CwRamp(domain.frequency_hz, source.ramp_periods)
            self.add_drive(comp, idx[0], idx[1], idx[2], amplitudes=amps,
                           phases=phases, waveform=wf, bbox=bbox)

    # ------------------------------------------------------------------ drives

    def _check_source_clearance(self, bbox) -> None:
        lo, hi = bbox
        n = self.cell_dims
        for a in range(3):
            if self.domain.boundary[a] != "cpml":
                continue
            pml = self.domain.pml_cells
            if lo[a] < pml + 1 or hi[a] > n[a] - pml - 2:
                raise ValueError(
                    f"source cells {lo}..{hi} reach into the absorbing layer on "
                    f"axis {a}; increase padding on that side"
                )

    def add_drive(self, component: str, ii, jj, kk, amplitudes=None, phases=None,
                  waveform=None, bbox=None) -> None:
        """Register a soft current drive on faces of one E component.

        ``waveform.value(t, phases)`` is evaluated at the half step and
        injected as a current density. ``bbox`` (inclusive cell box) extends
        the region used for power calibration.
        """
        if component not in ("x", "y", "z"):
            raise ValueError("component must be x, y, or z")
        ii = np.ascontiguousarray(ii, dtype=np.int64).ravel()
        jj = np.ascontiguousarray(jj, dtype=np.int64).ravel()
        kk = np.ascontiguousarray(kk, dtype=np.int64).ravel()
        if not (len(ii) == len(jj) == len(kk)) or len(ii) == 0:
            raise ValueError("ii, jj, kk must be equal-length and non-empty")
        field = getattr(self, "e" + component)
        for arr, axis in ((ii, 0), (jj, 1), (kk, 2)):
            if arr.min() < 0 or arr.max() >= field.shape[axis]:
                raise ValueError(f"drive indices out of range on axis {axis}")
        amps = (np.ones(len(ii)) if amplitudes is None
                else np.ascontiguousarray(amplitudes, dtype=np.float64).ravel())
        phs = (np.zeros(len(ii)) if phases is None
               else np.ascontiguousarray(phases, dtype=np.float64).ravel())
        if len(amps) != len(ii) or len(phs) != len(ii):
            raise ValueError("amplitudes/phases length mismatch")
        if waveform is None:
            waveform = CwRamp(self.domain.frequency_hz)
        self._drives.append({
            "component": component, "ii": ii, "jj": jj, "kk": kk,
            "amps": amps, "phases": phs, "waveform": waveform,
        })
        if bbox is not None:
            if self.source_bbox is None:
                self.source_bbox = bbox
            else:
                lo0, hi0 = self.source_bbox
                lo1, hi1 = bbox
                self.source_bbox = (
                    tuple(min(a, b) for a, b in zip(lo0, lo1)),
                    tuple(max(a, b) for a, b in zip(hi0, hi1)),
                )

    # ------------------------------------------------------------------ stepping

    def step(self) -> None:
        """Advance H by one half step and E by one full step."""
        px, py, pz = self._periodic
        fx, fy, fz = self.prof
        dtmu = self.dt / MU0
        inv_dt = 1.0 / self.dt

        # CPML recursions feeding the H updates (read E at step n)
        if fx.npml:
            for s0, s1 in fx.slabs_int:
                K.psi_h_xy(self.psi_hy_x, self.ez, fx.b_int, fx.c_int, s0, s1)
                K.psi_h_xz(self.psi_hz_x, self.ey, fx.b_int, fx.c_int, s0, s1)
        if fy.npml:
            for s0, s1 in fy.slabs_int:
                K.psi_h_yx(self.psi_hx_y, self.ez, fy.b_int, fy.c_int, s0, s1)
                K.psi_h_yz(self.psi_hz_y, self.ex, fy.b_int, fy.c_int, s0, s1)
        if fz.npml:
            for s0, s1 in fz.slabs_int:
                K.psi_h_zx(self.psi_hx_z, self.ey, fz.b_int, fz.c_int, s0, s1)
                K.psi_h_zy(self.psi_hy_z, self.ex, fz.b_int, fz.c_int, s0, s1)

        K.update_hx(self.hx, self.ey, self.ez, fy.inv_d_int, fz.inv_d_int,
                    self.psi_hx_y, self.psi_hx_z, dtmu)
        K.update_hy(self.hy, self.ez, self.ex, fz.inv_d_int, fx.inv_d_int,
                    self.psi_hy_z, self.psi_hy_x, dtmu)
        K.update_hz(self.hz, self.ex, self.ey, fx.inv_d_int, fy.inv_d_int,
                    self.psi_hz_x, self.psi_hz_y, dtmu)

        if py or pz:
            K.seam_hx(self.hx, self.ey, self.ez, fy.inv_d_int, fz.inv_d_int,
                      self.psi_hx_y, self.psi_hx_z, dtmu, py, pz)
        if pz or px:
            K.seam_hy(self.hy, self.ez, self.ex, fz.inv_d_int, fx.inv_d_int,
                      self.psi_hy_z, self.psi_hy_x, dtmu, pz, px)
        if px or py:
            K.seam_hz(self.hz, self.ex, self.ey, fx.inv_d_int, fy.inv_d_int,
                      self.psi_hz_x, self.psi_hz_y, dtmu, px, py)
        if px:
            self.hy[-1] = self.hy[0]
            self.hz[-1] = self.hz[0]
        if py:
            self.hx[:, -1] = self.hx[:, 0]
            self.hz[:, -1] = self.hz[:, 0]
        if pz:
            self.hx[:, :, -1] = self.hx[:, :, 0]
            self.hy[:, :, -1] = self.hy[:, :, 0]

        # CPML recursions feeding the E updates (read H at step n+1/2)
        if fx.npml:
            for s0, s1 in fx.slabs_half:
                K.psi_e_xy(self.psi_ey_x, self.hz, fx.b_half, fx.c_half, s0, s1)
                K.psi_e_xz(self.psi_ez_x, self.hy, fx.b_half, fx.c_half, s0, s1)
        if fy.npml:
            for s0, s1 in fy.slabs_half:
                K.psi_e_yx(self.psi_ex_y, self.hz, fy.b_half, fy.c_half, s0, s1)
                K.psi_e_yz(self.psi_ez_y, self.hx, fy.b_half, fy.c_half, s0, s1)
        if fz.npml:
            for s0, s1 in fz.slabs_half:
                K.psi_e_zx(self.psi_ex_z, self.hy, fz.b_half, fz.c_half, s0, s1)
                K.psi_e_zy(self.psi_ey_z, self.hx, fz.b_half, fz.c_half, s0, s1)

        K.update_ex(self.ex, self.hy, self.hz, self.ca_x, self.cb_x, self.ap_x,
                    self.bp_x, self.pol_x, fy.inv_d_half, fz.inv_d_half,
                    self.psi_ex_y, self.psi_ex_z, inv_dt)
        K.update_ey(self.ey, self.hz, self.hx, self.ca_y, self.cb_y, self.ap_y,
                    self.bp_y, self.pol_y, fz.inv_d_half, fx.inv_d_half,
                    self.psi_ey_z, self.psi_ey_x, inv_dt)
        K.update_ez(self.ez, self.hx, self.hy, self.ca_z, self.cb_z, self.ap_z,
                    self.bp_z, self.pol_z, fx.inv_d_half, fy.inv_d_half,
                    self.psi_ez_x, self.psi_ez_y, inv_dt)

        t_mid = (self.n + 0.5) * self.dt
        for d in self._drives:
            vals = np.asarray(d["waveform"].value(t_mid, d["phases"]),
                              dtype=np.float64) * d["amps"]
            field = getattr(self, "e" + d["component"])
            cb = getattr(self, "cb_" + d["component"])
            K.inject_soft(field, cb, d["ii"], d["jj"], d["kk"],
                          np.ascontiguousarray(vals))

        if px:
            self.ex[-1] = self.ex[0]
            self.pol_x[-1] = self.pol_x[0]
        if py:
            self.ey[:, -1] = self.ey[:, 0]
            self.pol_y[:, -1] = self.pol_y[:, 0]
        if pz:
            self.ez[:, :, -1] = self.ez[:, :, 0]
            self.pol_z[:, :, -1] = self.pol_z[:, :, 0]

        self.n += 1

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()

    def field_energy_metric(self) -> float:
        """Sum of squared E samples; the per-period convergence observable."""
        m = 0.0
        for arr in (self.ex, self.ey, self.ez):
            flat = arr.ravel()
            m += float(np.dot(flat, flat))
        return m

    def _check_stable(self, history) -> None:
        m = history[-1]
        if not math.isfinite(m) or m > 1.0e100:
            peak = math.sqrt(m) if math.isfinite(m) else float("inf")
            raise StabilityError(
                f"field energy diverged after {self.n} steps "
                f"(dt={self.dt:.3e} s, stability limit {self.cfl_dt:.3e} s); "
                f"metric reached {m!r}", history=history,
            )

    # ------------------------------------------------------------------ phasors

    def run_to_steady_state(self, tol: float = 1.0e-3, max_periods: int = 60,
                            accumulate_periods: int = 4,
                            min_periods: int | None = None) -> PhasorField:
        """March to steady state, then Fourier-transform whole periods.

        Returns an uncalibrated PhasorField; its ``converged`` flag records
        whether the per-period energy metric settled (relative change below
        ``tol`` twice in a row) before ``max_periods``.
        """
        if accumulate_periods < 1:
            raise ValueError("accumulate_periods must be >= 1")
        spp = self.steps_per_period
        ramp = max((getattr(d["waveform"], "ramp_periods", 0.0)
                    for d in self._drives), default=0.0)
        if min_periods is None:
            min_periods = max(int(math.ceil(ramp)) + 2, 4)
        history = []
        consec = 0
        converged = False
        for p in range(1, max_periods + 1):
            self.run(spp)
            history.append(self.field_energy_metric())
            self._check_stable(history)
            if len(history) >= 2 and p >= min_periods:
                prev, cur = history[-2], history[-1]
                rel = abs(cur - prev) / max(abs(cur), 1.0e-300)
                consec = consec + 1 if rel < tol else 0
                if consec >= 2:
                    converged = True
                    break

        acc = {name: np.zeros(getattr(self, name).shape, dtype=np.complex128)
               for name in ("ex", "ey", "ez", "hx", "hy", "hz")}
        w = 2.0 * math.pi * self.domain.frequency_hz
        total = accumulate_periods * spp
        for _ in range(total):
            self.step()
            t_e = self.n * self.dt
            t_h = (self.n - 0.5) * self.dt
            ph_e = cmath.exp(-1j * w * t_e)
            ph_h = cmath.exp(-1j * w * t_h)
            for name in ("ex", "ey", "ez"):
                K.accumulate_phasor(acc[name], getattr(self, name), ph_e)
            for name in ("hx", "hy", "hz"):
                K.accumulate_phasor(acc[name], getattr(self, name), ph_h)
        history.append(self.field_energy_metric())
        self._check_stable(history)
        scale = 2.0 / total
        for name in acc:
            acc[name] *= scale

        dom = self.domain
        return PhasorField(
            ex=acc["ex"], ey=acc["ey"], ez=acc["ez"],
            hx=acc["hx"], hy=acc["hy"], hz=acc["hz"],
            frequency_hz=dom.frequency_hz, resolution_m=dom.resolution,
            cell_dims=self.cell_dims, phantom_offset=dom.phantom_offset,
            phantom_dims=dom.phantom.dims, pml_cells=dom.pml_cells,
            boundary=dom.boundary, source_bbox=self.source_bbox,
            converged=converged, periods_accumulated=accumulate_periods,
            convergence_history=tuple(history),
        )


def em_energy(ex, ey, ez, hx, hy, hz, cell_volume: float,
              h_prev: tuple | None = None) -> float:
    """Total electromagnetic energy in joules for free-space fields.

    The magnetic term uses the product of consecutive H snapshots when
    ``h_prev`` is given (the time-centered discrete invariant); otherwise it
    squares the current H.
    """
    def ssq(a, b):
        return float(np.dot(a.ravel(), b.ravel()))

    we = 0.5 * EPS0 * (ssq(ex, ex) + ssq(ey, ey) + ssq(ez, ez))
    if h_prev is None:
        wh = 0.5 * MU0 * (ssq(hx, hx) + ssq(hy, hy) + ssq(hz, hz))
    else:
        hpx, hpy, hpz = h_prev
        wh = 0.5 * MU0 * (ssq(hx, hpx) + ssq(hy, hpy) + ssq(hz, hpz))
    return (we + wh) * cell_volume
