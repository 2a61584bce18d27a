"""Finite-difference Landau-Lifshitz-Gilbert solver for a PMA strip on a heavy metal.

The strip is discretised on a regular grid of cells; ``m`` holds one unit
vector per cell with shape ``(nx, ny, nz, 3)``.  The effective field contains
exchange, uniaxial anisotropy (with the thin-film demagnetising energy folded
into ``K_eff``) and interfacial DMI.  A damping-like spin-Hall torque drives
the wall when charge current flows through the heavy metal along +x.

Sign conventions
----------------
* Interfacial DMI uses the energy density
  ``D [m_z div(m) - (m . grad) m_z]``; ``D < 0`` favours left-handed Neel walls.
  The boundary condition at an edge with outward normal ``n`` is
  ``dm/dn = D/(2A) m x (n x z)``.
* Current along +x injects spins along ``SPIN_POLARIZATION`` for a positive
  spin-Hall angle.  With ``D < 0`` this moves walls along the current.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import _kernels
from .constants import CONSTANTS
from .errors import (
    AmbiguousStateError,
    CalibrationError,
    NonConvergenceError,
    NumericalDivergenceError,
    StabilityError,
)

MU0 = CONSTANTS.mu0
GAMMA = CONSTANTS.gamma

# RK4 is stable for purely oscillatory modes up to |omega dt| = 2*sqrt(2);
# 2.0 leaves margin for the damping and torque terms.
STABILITY_FACTOR = 2.0
DEFAULT_DT = 25e-15

ALPHA_RELAX = 0.5
RELAX_TORQUE_TOL = 1e-4  # in units of Ms
RELAX_MAX_STEPS = 1_000_000

TRANSIENT_FRACTION = 0.2

SPIN_POLARIZATION = np.array([0.0, 1.0, 0.0])

ALL_TERMS = ("exchange", "anisotropy", "dmi")


@dataclass(frozen=True)
class MaterialParams:
    """Pt/CoFe/MgO material set; defaults are the device table values."""

    Ms: float = 700e3
    A_ex: float = 1e-11
    Ku: float = 4.8e5
    D: float = -1.2e-3
    alpha: float = 0.3
    theta_SH: float = 0.07
    t_FM: float = 0.6e-9
    t_HM: float = 3e-9

    def __post_init__(self):
        for name in ("Ms", "A_ex", "Ku", "t_FM", "t_HM"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if abs(self.theta_SH) > 1:
            raise ValueError(f"|theta_SH| must be <= 1, got {self.theta_SH}")

    @property
    def K_eff(self):
        """Uniaxial constant with the thin-film shape anisotropy subtracted."""
        return self.Ku - 0.5 * MU0 * self.Ms**2

    @property
    def wall_width(self):
        """Bloch wall parameter sqrt(A/K_eff)."""
        return float(np.sqrt(self.A_ex / self.K_eff))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def digest(self):
        blob = json.dumps(dataclasses.asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class StripGeometry:
    length: float = 120e-9
    width: float = 20e-9
    cell: tuple = (4e-9, 1e-9, 0.6e-9)

    @property
    def shape(self):
        nx = int(round(self.length / self.cell[0]))
        ny = int(round(self.width / self.cell[1]))
        return nx, ny, 1

    @property
    def cross_section(self):
        return self.width * self.cell[2]


TABLE_I_STRIP = StripGeometry()
CALIBRATION_STRIP = StripGeometry(length=240e-9, width=160e-9, cell=(4e-9, 4e-9, 0.6e-9))


@dataclass
class MagnetizationGrid:
    nx: int
    ny: int
    nz: int
    cell: tuple
    m: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.cell = tuple(float(c) for c in self.cell)
        self.m = np.asarray(self.m, dtype=float)
        if self.m.shape != (self.nx, self.ny, self.nz, 3):
            raise ValueError(f"m has shape {self.m.shape}, expected {(self.nx, self.ny, self.nz, 3)}")

    @classmethod
    def uniform(cls, geometry=TABLE_I_STRIP, direction=(0.0, 0.0, 1.0)):
        nx, ny, nz = geometry.shape
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        m = np.broadcast_to(d, (nx, ny, nz, 3)).copy()
        return cls(nx, ny, nz, geometry.cell, m)

    @property
    def length(self):
        return self.nx * self.cell[0]

    @property
    def x_centers(self):
        return (np.arange(self.nx) + 0.5) * self.cell[0]

    def copy(self):
        return MagnetizationGrid(self.nx, self.ny, self.nz, self.cell, self.m.copy())

    def norm_error(self):
        return float(np.max(np.abs(np.linalg.norm(self.m, axis=-1) - 1.0)))

    def mz_profile(self):
        """Row-averaged m_z along x (mean over y and z, fixed order)."""
        return self.m[..., 2].mean(axis=(1, 2))


@dataclass(frozen=True)
class WallState:
    position: float
    width: float
    chirality: str

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("wall width must be positive")
        if self.chirality not in ("left", "right"):
            raise ValueError("chirality must be 'left' or 'right'")


# --------------------------------------------------------------------------
# fields


def _ghosts(c, cell, p):
    """Component-major ``(3, nx+2, ny+2, nz+2)`` copy of ``c`` with ghost cells.

    Ghost values satisfy ``(ghost - edge)/h = D/(2A) m x (n x z)`` on the four
    in-plane faces and a free boundary along z.
    """
    _, nx, ny, nz = c.shape
    P = np.empty((3, nx + 2, ny + 2, nz + 2))
    P[:, 1:-1, 1:-1, 1:-1] = c
    P[:, 0, 1:-1, 1:-1] = c[:, 0]
    P[:, -1, 1:-1, 1:-1] = c[:, -1]
    P[:, 1:-1, 0, 1:-1] = c[:, :, 0]
    P[:, 1:-1, -1, 1:-1] = c[:, :, -1]
    if p.D != 0.0:
        k = p.D / (2.0 * p.A_ex)
        hx, hy = cell[0] * k, cell[1] * k
        # n = -x: n x z = +y, m x y = (-mz, 0, mx); n = +x flips the sign
        P[0, 0, 1:-1, 1:-1] -= hx * c[2, 0]
        P[2, 0, 1:-1, 1:-1] += hx * c[0, 0]
        P[0, -1, 1:-1, 1:-1] += hx * c[2, -1]
        P[2, -1, 1:-1, 1:-1] -= hx * c[0, -1]
        # n = -y: n x z = -x, m x (-x) = (0, -mz, my); n = +y flips the sign
        P[1, 1:-1, 0, 1:-1] -= hy * c[2, :, 0]
        P[2, 1:-1, 0, 1:-1] += hy * c[1, :, 0]
        P[1, 1:-1, -1, 1:-1] += hy * c[2, :, -1]
        P[2, 1:-1, -1, 1:-1] -= hy * c[1, :, -1]
    P[:, :, :, 0] = P[:, :, :, 1]
    P[:, :, :, -1] = P[:, :, :, -2]
    return P


def dmi_boundary(grid, p):
    """Return ``m`` padded with ghost cells that satisfy the DMI edge condition.

    The result has shape ``(nx+2, ny+2, nz+2, 3)``; the interior equals
    ``grid.m``.  Along z the boundary is free (the DMI is interfacial).
    """
    P = _ghosts(np.moveaxis(grid.m, -1, 0), grid.cell, p)
    return np.ascontiguousarray(np.moveaxis(P, 0, -1))


def _field_c(c, cell, p, h_ext=None, terms=ALL_TERMS):
    """Effective field for component-major magnetization ``c`` of shape (3, nx, ny, nz)."""
    hx, hy, hz = cell
    H = np.zeros_like(c)
    if "exchange" in terms or "dmi" in terms:
        P = _ghosts(c, cell, p)
        xp, xm = P[:, 2:, 1:-1, 1:-1], P[:, :-2, 1:-1, 1:-1]
        yp, ym = P[:, 1:-1, 2:, 1:-1], P[:, 1:-1, :-2, 1:-1]
        if "exchange" in terms:
            lap = (xp + xm - 2.0 * c) / hx**2 + (yp + ym - 2.0 * c) / hy**2
            if c.shape[3] > 1:
                lap += (P[:, 1:-1, 1:-1, 2:] + P[:, 1:-1, 1:-1, :-2] - 2.0 * c) / hz**2
            H += (2.0 * p.A_ex / (MU0 * p.Ms)) * lap
        if "dmi" in terms and p.D != 0.0:
            k = 2.0 * p.D / (MU0 * p.Ms)
            H[0] += k * (xp[2] - xm[2]) / (2 * hx)
            H[1] += k * (yp[2] - ym[2]) / (2 * hy)
            H[2] -= k * ((xp[0] - xm[0]) / (2 * hx) + (yp[1] - ym[1]) / (2 * hy))
    if "anisotropy" in terms:
        H[2] += (2.0 * p.K_eff / (MU0 * p.Ms)) * c[2]
    if h_ext is not None:
        h = np.asarray(h_ext, dtype=float)
        H += np.moveaxis(h, -1, 0) if h.ndim > 1 else h.reshape(3, 1, 1, 1)
    return H


def _cross(a, b):
    return np.stack((a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]))


def _check_finite(arr, what):
    bad = ~np.isfinite(arr)
    if bad.any():
        cell = tuple(int(i) for i in np.argwhere(bad.any(axis=0))[0])
        raise NumericalDivergenceError(f"non-finite {what} at cell {cell}", cell=cell)


def _to_c(m):
    return np.ascontiguousarray(np.moveaxis(m, -1, 0))


def _from_c(c):
    return np.ascontiguousarray(np.moveaxis(c, 0, -1))


def effective_field(grid, p, h_ext=None, terms=ALL_TERMS):
    """Exchange + effective anisotropy + DMI (+ optional applied) field in A/m.

    Returns an array shaped like ``grid.m``.
    """
    c = _to_c(grid.m)
    _check_finite(c, "magnetization")
    H = _field_c(c, grid.cell, p, h_ext, terms)
    _check_finite(H, "effective field")
    return _from_c(H)


def spin_hall_field(p, J):
    """Damping-like spin-Hall field amplitude hbar*theta*J / (2 mu0 e t Ms), in A/m."""
    return CONSTANTS.hbar * p.theta_SH * J / (2.0 * MU0 * CONSTANTS.e_charge * p.t_FM * p.Ms)


# --------------------------------------------------------------------------
# time integration


def _llg_rhs(c, cell, p, J, h_ext, terms, alpha):
    # Gilbert form with the implicit damping eliminated:
    # (1+a^2) dm/dt = -g m x H - a g m x (m x H) + g hs [m x (s x m) + a m x s]
    H = _field_c(c, cell, p, h_ext, terms)
    mxH = _cross(c, H)
    dm = -mxH - alpha * _cross(c, mxH)
    if J != 0.0:
        hs = spin_hall_field(p, J)
        sigma = SPIN_POLARIZATION.reshape(3, 1, 1, 1)
        mdots = (c * sigma).sum(axis=0)
        # m x (s x m) = s - (m.s) m
        dm += hs * (sigma - mdots * c + alpha * _cross(c, np.broadcast_to(sigma, c.shape)))
    dm *= GAMMA / (1.0 + alpha**2)
    return dm


def stability_bound(cell, p, J=0.0, h_ext=None, terms=ALL_TERMS, shape=(2, 2, 1)):
    """Largest RK4 step (s) accepted by :func:`llg_step`.

    Built from the stiffest field scale on the grid: the exchange Laplacian
    eigenvalue ``4/h^2`` for every axis with more than one cell, plus DMI,
    anisotropy, spin-Hall and applied field magnitudes.
    """
    h_max = 0.0
    if "exchange" in terms:
        h_max += (2.0 * p.A_ex / (MU0 * p.Ms)) * sum(4.0 / c**2 for c, n in zip(cell, shape) if n > 1)
    if "dmi" in terms:
        h_max += (2.0 * abs(p.D) / (MU0 * p.Ms)) * sum(1.0 / c for c in cell[:2])
    if "anisotropy" in terms:
        h_max += 2.0 * abs(p.K_eff) / (MU0 * p.Ms)
    h_max += abs(spin_hall_field(p, J))
    if h_ext is not None:
        h_max += float(np.max(np.linalg.norm(np.atleast_2d(h_ext), axis=-1)))
    if h_max == 0.0:
        return np.inf
    return STABILITY_FACTOR / (GAMMA * h_max)


def _grid_bound(grid, p, J=0.0, h_ext=None, terms=ALL_TERMS):
    return stability_bound(grid.cell, p, J, h_ext, terms, shape=(grid.nx, grid.ny, grid.nz))


def _require_stable(dt, bound):
    if dt > bound:
        raise StabilityError(f"dt={dt:.3e} s exceeds the stability bound {bound:.3e} s", bound)


def _rk4_reference(c, cell, p, J, dt, h_ext, terms, alpha):
    """Plain numpy RK4 step; the compiled kernel is checked against this."""
    k1 = _llg_rhs(c, cell, p, J, h_ext, terms, alpha)
    k2 = _llg_rhs(c + 0.5 * dt * k1, cell, p, J, h_ext, terms, alpha)
    k3 = _llg_rhs(c + 0.5 * dt * k2, cell, p, J, h_ext, terms, alpha)
    k4 = _llg_rhs(c + dt * k3, cell, p, J, h_ext, terms, alpha)
    out = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(out, "magnetization")
    out /= np.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2)
    return out


def _kernel_args(cell, p, J, h_ext, terms, alpha):
    ex = 2.0 * p.A_ex / (MU0 * p.Ms) if "exchange" in terms else 0.0
    uses_ghosts = "exchange" in terms or "dmi" in terms
    k_bc = p.D / (2.0 * p.A_ex) if uses_ghosts else 0.0
    dmi = 2.0 * p.D / (MU0 * p.Ms) if "dmi" in terms else 0.0
    kan = 2.0 * p.K_eff / (MU0 * p.Ms) if "anisotropy" in terms else 0.0
    hext = np.zeros(3) if h_ext is None else np.asarray(h_ext, dtype=float).reshape(3)
    return (float(cell[0]), float(cell[1]), float(cell[2]), ex, k_bc, dmi, kan, hext,
            float(spin_hall_field(p, J)), SPIN_POLARIZATION.astype(float), float(alpha), GAMMA)


def _rk4(c, cell, p, J, dt, h_ext, terms, alpha, n=1):
    """``n`` RK4 steps; uses the compiled kernel unless the applied field varies per cell."""
    if h_ext is not None and np.ndim(h_ext) > 1:
        for _ in range(n):
            c = _rk4_reference(c, cell, p, J, dt, h_ext, terms, alpha)
        return c
    out = _kernels.rk4_steps(c, n, dt, *_kernel_args(cell, p, J, h_ext, terms, alpha))
    _check_finite(out, "magnetization")
    return out


def llg_step(grid, p, J=0.0, dt=DEFAULT_DT, h_ext=None, terms=ALL_TERMS, alpha=None):
    """Advance ``grid`` by one RK4 step of the explicit LLG + spin-Hall equation.

    ``J`` is the charge current density in the heavy metal along +x (A/m^2).
    ``alpha`` overrides the material damping (used by :func:`relax`).
    Returns a new grid; the input is not modified.
    """
    _require_stable(dt, _grid_bound(grid, p, J, h_ext, terms))
    c = _rk4(_to_c(grid.m), grid.cell, p, J, dt, h_ext, terms, p.alpha if alpha is None else alpha)
    return MagnetizationGrid(grid.nx, grid.ny, grid.nz, grid.cell, _from_c(c))


def integrate(grid, p, J, duration, dt=DEFAULT_DT, h_ext=None, terms=ALL_TERMS, sample_every=1):
    """Run ``duration`` seconds of dynamics.

    Returns the final grid, the sample times and the sampled magnetizations
    (shape ``(n_samples, nx, ny, nz, 3)``).
    """
    _require_stable(dt, _grid_bound(grid, p, J, h_ext, terms))
    n_steps = int(round(duration / dt))
    c = _to_c(grid.m)
    times, samples = [0.0], [grid.m.copy()]
    done = 0
    while done < n_steps:
        n = min(sample_every, n_steps - done)
        c = _rk4(c, grid.cell, p, J, dt, h_ext, terms, p.alpha, n=n)
        done += n
        if done % sample_every == 0:
            times.append(done * dt)
            samples.append(_from_c(c))
    out = MagnetizationGrid(grid.nx, grid.ny, grid.nz, grid.cell, _from_c(c))
    return out, np.array(times), np.array(samples)


# --------------------------------------------------------------------------
# walls


def seed_neel_wall(grid, position, chirality="left", width=None, p=None):
    """Two-domain state with m_z = -1 left of ``position`` and +1 right of it.

    The core is an in-plane Neel profile along x.  ``chirality='left'`` is the
    handedness stabilised by a negative DMI constant.
    """
    eps = 1e-9 * grid.cell[0]  # nx*cell carries float rounding
    if not eps < position < grid.length - eps:
        raise ValueError(f"wall position {position:.3e} m outside strip (0, {grid.length:.3e})")
    if chirality not in ("left", "right"):
        raise ValueError("chirality must be 'left' or 'right'")
    if width is None:
        width = (p or MaterialParams()).wall_width
    u = (grid.x_centers - position) / width
    m = np.zeros_like(grid.m)
    m[..., 0] = ((-1.0 if chirality == "left" else 1.0) / np.cosh(u))[:, None, None]
    m[..., 2] = np.tanh(u)[:, None, None]
    return MagnetizationGrid(grid.nx, grid.ny, grid.nz, grid.cell, m)


def _torque_c(c, cell, p):
    t = _cross(c, _field_c(c, cell, p))
    return float(np.sqrt((t * t).sum(axis=0)).max())


def max_torque(grid, p):
    """Largest per-cell |m x H_eff| in A/m."""
    return _torque_c(_to_c(grid.m), grid.cell, p)


def relax(grid, p, dt=DEFAULT_DT, alpha=ALPHA_RELAX, tol=RELAX_TORQUE_TOL,
          max_steps=RELAX_MAX_STEPS, check_every=50, return_steps=False):
    """Damp ``grid`` to equilibrium at zero current.

    Stops once the largest per-cell torque |m x H_eff| drops below ``tol*Ms``.
    """
    limit = tol * p.Ms
    _require_stable(dt, _grid_bound(grid, p))
    c = _to_c(grid.m)
    steps = 0
    torque = _torque_c(c, grid.cell, p)
    while torque >= limit:
        if steps >= max_steps:
            raise NonConvergenceError(
                f"relaxation did not converge in {max_steps} steps (torque {torque:.3e} A/m)", torque)
        c = _rk4(c, grid.cell, p, 0.0, dt, None, ALL_TERMS, alpha, n=check_every)
        steps += check_every
        torque = _torque_c(c, grid.cell, p)
    out = MagnetizationGrid(grid.nx, grid.ny, grid.nz, grid.cell, _from_c(c))
    return (out, steps) if return_steps else out


def _count_sign_changes(profile):
    s = np.sign(profile)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def wall_position(grid, up_right=None):
    """Wall centre (m from the left edge) from the strip-averaged m_z.

    With an up domain on the left the wall sits at ``(1 + <m_z>)/2 * L``;
    with the seeded orientation (down domain on the left) at
    ``(1 - <m_z>)/2 * L``.  ``up_right=None`` reads the orientation off the
    profile ends; a single-domain strip uses the first form, so uniform +z
    gives ``L`` and uniform -z gives 0.
    """
    profile = grid.mz_profile()
    changes = _count_sign_changes(profile)
    if changes > 1:
        raise AmbiguousStateError(f"{changes} sign changes in the row-averaged m_z profile")
    if up_right is None:
        up_right = changes == 1 and profile[-1] > profile[0]
    mean_mz = float(profile.mean())
    if up_right:
        return (1.0 - mean_mz) / 2.0 * grid.length
    return (1.0 + mean_mz) / 2.0 * grid.length


def zero_crossing(grid):
    """Wall centre from linear interpolation of the row-averaged m_z sign change."""
    profile = grid.mz_profile()
    x = grid.x_centers
    idx = np.nonzero(np.sign(profile[1:]) != np.sign(profile[:-1]))[0]
    if len(idx) != 1:
        raise AmbiguousStateError(f"expected one sign change, found {len(idx)}")
    i = idx[0]
    f0, f1 = profile[i], profile[i + 1]
    return float(x[i] - f0 * (x[i + 1] - x[i]) / (f1 - f0))


def fit_wall(grid):
    """Fit m_z(x) = s*tanh((x - x0)/width) to the row-averaged profile."""
    profile = grid.mz_profile()
    x = grid.x_centers
    s = 1.0 if profile[-1] > profile[0] else -1.0
    x0 = zero_crossing(grid)

    def model(xx, centre, width, amp):
        return s * amp * np.tanh((xx - centre) / width)

    popt, _ = curve_fit(model, x, profile, p0=(x0, 7e-9, 1.0))
    centre_idx = int(np.clip(np.searchsorted(x, popt[0]), 0, grid.nx - 1))
    core = grid.m[centre_idx].mean(axis=(0, 1))
    chirality = "left" if core[0] * s < 0 else "right"
    return WallState(position=float(popt[0]), width=float(abs(popt[1])), chirality=chirality)


# --------------------------------------------------------------------------
# velocity and calibration


@dataclass
class WallRun:
    """One constant-current run.  ``nucleated`` marks runs cut short by a reversed domain."""

    J: float
    velocity: float
    truncated: bool
    times: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    nucleated: bool = False


def _shift_left(c):
    # moving frame: drop the leftmost column, enter a uniform domain column on the right
    out = np.empty_like(c)
    out[:, :-1] = c[:, 1:]
    out[:, -1] = 0.0
    out[2, -1] = np.sign(c[2, -1].mean())
    return out


def _shift_right(c):
    out = np.empty_like(c)
    out[:, 1:] = c[:, :-1]
    out[:, 0] = 0.0
    out[2, 0] = np.sign(c[2, 0].mean())
    return out


def run_wall_motion(relaxed, p, J, duration=0.5e-9, dt=DEFAULT_DT, sample_every=40,
                    moving_frame=True, margin=None, check_every=4):
    """Drive a relaxed wall at current density ``J`` and fit its steady velocity.

    The wall is located every ``check_every`` steps.  With ``moving_frame``
    the magnetization is shifted by one cell whenever the wall strays more
    than a cell from where it started, and the shifts are added back to the
    recorded position.  Without it the run stops once the wall gets within
    ``margin`` of either end; such runs are flagged ``truncated`` and fitted
    on what was recorded.  A run that nucleates a second domain stops there
    and is flagged ``nucleated``.  The first ``TRANSIENT_FRACTION`` of the
    samples is discarded before the fit.
    """
    if sample_every % check_every:
        raise ValueError("sample_every must be a multiple of check_every")
    _require_stable(dt, _grid_bound(relaxed, p, J))
    if margin is None:
        margin = 3.0 * p.wall_width
    L, hx = relaxed.length, relaxed.cell[0]
    n_steps = int(round(duration / dt))
    c = _to_c(relaxed.m)
    probe = relaxed.copy()
    offset = 0.0
    times, positions = [0.0], [wall_position(relaxed)]
    centre = positions[0]
    truncated = nucleated = False
    done = 0
    while done < n_steps:
        n = min(check_every, n_steps - done)
        c = _rk4(c, relaxed.cell, p, J, dt, None, ALL_TERMS, p.alpha, n=n)
        done += n
        probe.m = _from_c(c)
        try:
            x = wall_position(probe)
        except AmbiguousStateError:
            # the current has nucleated a reversed domain; keep what was recorded
            nucleated = truncated = True
            break
        if moving_frame:
            while x - centre > hx:
                c = _shift_left(c)
                offset += hx
                x -= hx
            while centre - x > hx:
                c = _shift_right(c)
                offset -= hx
                x += hx
        if done % sample_every == 0:
            times.append(done * dt)
            positions.append(x + offset)
        if not moving_frame and (x < margin or x > L - margin):
            truncated = done < n_steps
            break
    times, positions = np.array(times), np.array(positions)
    start = int(np.floor(TRANSIENT_FRACTION * len(times)))
    if len(times) - start >= 2:
        velocity = float(np.polyfit(times[start:], positions[start:], 1)[0])
    else:
        velocity = 0.0
    return WallRun(J=float(J), velocity=velocity, truncated=truncated, times=times, positions=positions,
                   nucleated=nucleated)


def relaxed_wall(p, geometry=TABLE_I_STRIP, position=None, dt=DEFAULT_DT):
    grid = MagnetizationGrid.uniform(geometry)
    if position is None:
        position = 0.5 * grid.length
    return relax(seed_neel_wall(grid, position, "left" if p.D <= 0 else "right", p=p), p, dt=dt)


def velocity_curve(p, J_values, geometry=TABLE_I_STRIP, duration=0.5e-9, dt=DEFAULT_DT,
                   moving_frame=True):
    """Steady wall velocity for each current density in ``J_values``.

    Every run starts from the same wall relaxed at the strip centre.  Returns
    one :class:`WallRun` per entry, in input order; ``(run.J, run.velocity)``
    are the curve points.
    """
    start = relaxed_wall(p, geometry, dt=dt)
    runs = []
    for J in J_values:
        if J == 0:
            runs.append(WallRun(J=0.0, velocity=0.0, truncated=False,
                                times=np.zeros(1), positions=np.array([wall_position(start)])))
            continue
        runs.append(run_wall_motion(start, p, J, duration=duration, dt=dt, moving_frame=moving_frame))
    return runs


@dataclass(frozen=True)
class CalibrationRecord:
    """Wall mobility extracted from micromagnetic runs, consumed by the device model."""

    mu_dw: float           # m/s per A/m^2
    v_sat: float           # m/s
    cross_section: float   # m^2, current-carrying section of the heavy metal
    param_hash: str
    n_linear: int = 0
    n_plateau: int = 0

    def J_at(self, current):
        return current / self.cross_section

    def velocity(self, current):
        """Wall speed (m/s, signed) at device current ``current`` (A), capped at v_sat."""
        v = self.mu_dw * self.J_at(abs(current))
        return float(np.sign(current) * min(v, self.v_sat))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write("# domain-wall mobility calibration\n")
            for key, value in dataclasses.asdict(self).items():
                fh.write(f"{key} = {value!r}\n")

    @classmethod
    def load(cls, path):
        values = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key not in cls.__dataclass_fields__:
                    raise CalibrationError(f"unknown calibration key {key!r}")
                values[key] = value.strip("'\"") if key == "param_hash" else (
                    int(value) if key.startswith("n_") else float(value))
        return cls(**values)


def hm_cross_section(geometry=TABLE_I_STRIP, p=None, include_fm=False):
    p = p or MaterialParams()
    thickness = p.t_HM + (p.t_FM if include_fm else 0.0)
    return geometry.width * thickness


def calibrate_mobility(p, runs, geometry=TABLE_I_STRIP, linear_fraction=0.4, plateau_fraction=0.85,
                       cross_section=None):
    """Mobility, saturation speed and current mapping from a velocity sweep.

    ``runs`` is the output of :func:`velocity_curve` (or ``(J, v)`` pairs).
    The linear regime is every point whose speed is at most
    ``linear_fraction`` of the fastest run; the slope through the origin is
    the mobility.  ``v_sat`` is the mean over points within
    ``plateau_fraction`` of the fastest.  Runs that nucleated a second
    domain are left out.
    """
    runs = [r for r in runs if not (isinstance(r, WallRun) and r.nucleated)]
    pts = np.array([(r.J, r.velocity) if isinstance(r, WallRun) else tuple(r) for r in runs], dtype=float)
    J, v = np.abs(pts[:, 0]), np.abs(pts[:, 1])
    v_max = v.max()
    linear = v <= linear_fraction * v_max
    if np.count_nonzero(linear) < 3:
        raise CalibrationError(f"only {np.count_nonzero(linear)} points in the linear regime; need 3")
    mu = float(np.dot(J[linear], v[linear]) / np.dot(J[linear], J[linear]))
    plateau = v >= plateau_fraction * v_max
    v_sat = float(v[plateau].mean())
    if cross_section is None:
        cross_section = hm_cross_section(geometry, p)
    return CalibrationRecord(mu_dw=mu, v_sat=v_sat, cross_section=cross_section,
                             param_hash=p.digest(), n_linear=int(np.count_nonzero(linear)),
                             n_plateau=int(np.count_nonzero(plateau)))
