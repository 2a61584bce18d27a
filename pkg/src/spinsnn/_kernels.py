"""Compiled RK4 step for the LLG solver.

Mirrors ``micromag._llg_rhs`` loop-for-loop on a component-major array of
shape ``(3, nx, ny, nz)``.  The numpy path stays the reference; tests check
the two agree to rounding.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _pad(c, hx, hy, k):
    _, nx, ny, nz = c.shape
    P = np.empty((3, nx + 2, ny + 2, nz + 2))
    for a in range(3):
        for i in range(nx):
            for j in range(ny):
                for l in range(nz):
                    P[a, i + 1, j + 1, l + 1] = c[a, i, j, l]
        for j in range(ny):
            for l in range(nz):
                P[a, 0, j + 1, l + 1] = c[a, 0, j, l]
                P[a, nx + 1, j + 1, l + 1] = c[a, nx - 1, j, l]
        for i in range(nx):
            for l in range(nz):
                P[a, i + 1, 0, l + 1] = c[a, i, 0, l]
                P[a, i + 1, ny + 1, l + 1] = c[a, i, ny - 1, l]
    if k != 0.0:
        ax, ay = hx * k, hy * k
        for j in range(ny):
            for l in range(nz):
                P[0, 0, j + 1, l + 1] -= ax * c[2, 0, j, l]
                P[2, 0, j + 1, l + 1] += ax * c[0, 0, j, l]
                P[0, nx + 1, j + 1, l + 1] += ax * c[2, nx - 1, j, l]
                P[2, nx + 1, j + 1, l + 1] -= ax * c[0, nx - 1, j, l]
        for i in range(nx):
            for l in range(nz):
                P[1, i + 1, 0, l + 1] -= ay * c[2, i, 0, l]
                P[2, i + 1, 0, l + 1] += ay * c[1, i, 0, l]
                P[1, i + 1, ny + 1, l + 1] += ay * c[2, i, ny - 1, l]
                P[2, i + 1, ny + 1, l + 1] -= ay * c[1, i, ny - 1, l]
    for a in range(3):
        for i in range(nx + 2):
            for j in range(ny + 2):
                P[a, i, j, 0] = P[a, i, j, 1]
                P[a, i, j, nz + 1] = P[a, i, j, nz]
    return P


@njit(cache=True)
def rhs(c, hx, hy, hz, ex, k_bc, dmi, kan, hext, hs, sig, alpha, gamma):
    """dm/dt for every cell.

    ``ex`` = 2A/(mu0 Ms) (0 disables exchange), ``k_bc`` = D/2A for the ghost
    cells, ``dmi`` = 2D/(mu0 Ms) (0 disables the bulk DMI field), ``kan`` =
    2K_eff/(mu0 Ms), ``hext`` a uniform applied field, ``hs`` the spin-Hall
    field and ``sig`` the injected spin direction.
    """
    _, nx, ny, nz = c.shape
    P = _pad(c, hx, hy, k_bc)
    out = np.empty_like(c)
    pre = gamma / (1.0 + alpha * alpha)
    for i in range(nx):
        for j in range(ny):
            for l in range(nz):
                I, Jj, L = i + 1, j + 1, l + 1
                mx, my, mz = c[0, i, j, l], c[1, i, j, l], c[2, i, j, l]
                Hx, Hy, Hz = hext[0], hext[1], hext[2]
                if ex != 0.0:
                    for a in range(3):
                        m_a = c[a, i, j, l]
                        lap = (P[a, I + 1, Jj, L] + P[a, I - 1, Jj, L] - 2.0 * m_a) / (hx * hx)
                        lap += (P[a, I, Jj + 1, L] + P[a, I, Jj - 1, L] - 2.0 * m_a) / (hy * hy)
                        if nz > 1:
                            lap += (P[a, I, Jj, L + 1] + P[a, I, Jj, L - 1] - 2.0 * m_a) / (hz * hz)
                        if a == 0:
                            Hx += ex * lap
                        elif a == 1:
                            Hy += ex * lap
                        else:
                            Hz += ex * lap
                if dmi != 0.0:
                    Hx += dmi * (P[2, I + 1, Jj, L] - P[2, I - 1, Jj, L]) / (2.0 * hx)
                    Hy += dmi * (P[2, I, Jj + 1, L] - P[2, I, Jj - 1, L]) / (2.0 * hy)
                    Hz -= dmi * ((P[0, I + 1, Jj, L] - P[0, I - 1, Jj, L]) / (2.0 * hx)
                                 + (P[1, I, Jj + 1, L] - P[1, I, Jj - 1, L]) / (2.0 * hy))
                Hz += kan * mz
                # m x H
                tx = my * Hz - mz * Hy
                ty = mz * Hx - mx * Hz
                tz = mx * Hy - my * Hx
                # m x (m x H)
                ux = my * tz - mz * ty
                uy = mz * tx - mx * tz
                uz = mx * ty - my * tx
                dx = -tx - alpha * ux
                dy = -ty - alpha * uy
                dz = -tz - alpha * uz
                if hs != 0.0:
                    ms = mx * sig[0] + my * sig[1] + mz * sig[2]
                    dx += hs * (sig[0] - ms * mx + alpha * (my * sig[2] - mz * sig[1]))
                    dy += hs * (sig[1] - ms * my + alpha * (mz * sig[0] - mx * sig[2]))
                    dz += hs * (sig[2] - ms * mz + alpha * (mx * sig[1] - my * sig[0]))
                out[0, i, j, l] = pre * dx
                out[1, i, j, l] = pre * dy
                out[2, i, j, l] = pre * dz
    return out


@njit(cache=True)
def rk4_steps(c, n, dt, hx, hy, hz, ex, k_bc, dmi, kan, hext, hs, sig, alpha, gamma):
    """``n`` renormalised RK4 steps; returns the new array (input untouched)."""
    for _ in range(n):
        k1 = rhs(c, hx, hy, hz, ex, k_bc, dmi, kan, hext, hs, sig, alpha, gamma)
        k2 = rhs(c + 0.5 * dt * k1, hx, hy, hz, ex, k_bc, dmi, kan, hext, hs, sig, alpha, gamma)
        k3 = rhs(c + 0.5 * dt * k2, hx, hy, hz, ex, k_bc, dmi, kan, hext, hs, sig, alpha, gamma)
        k4 = rhs(c + dt * k3, hx, hy, hz, ex, k_bc, dmi, kan, hext, hs, sig, alpha, gamma)
        c = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _, nx, ny, nz = c.shape
        for i in range(nx):
            for j in range(ny):
                for l in range(nz):
                    s = 0.0
                    for a in range(3):
                        s += c[a, i, j, l] * c[a, i, j, l]
                    if not np.isfinite(s):
                        return c
                    r = 1.0 / np.sqrt(s)
                    for a in range(3):
                        c[a, i, j, l] *= r
    return c
