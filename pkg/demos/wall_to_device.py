"""From a relaxed Neel wall to a calibrated synapse.

Run with ``python demos/wall_to_device.py``; a short sweep takes about a minute.
"""
# %% The strip: 120 x 20 nm, 4 x 1 nm cells, Pt-like negative D
import numpy as np

from spinsnn import device as dv
from spinsnn import micromag as mm

p = mm.MaterialParams()
print(f"wall width parameter {p.wall_width * 1e9:.2f} nm, K_eff {p.K_eff:.3g} J/m^3")

# %% Relax a left-handed wall at the strip centre and look at its profile
wall = mm.relaxed_wall(p)
mz = wall.mz_profile()
print("mz along the strip:", np.array2string(mz[::3], precision=2))
print(f"wall at {mm.wall_position(wall) * 1e9:.1f} nm, residual torque {mm.max_torque(wall, p):.2e} A/m")

# %% Push it with a few current densities.  The moving frame keeps the wall
# in the window, so 0.5 ns is enough for a steady velocity.
J_values = [0.0, 0.5e11, 1e11, 2e11, 8e11, 1.6e12, 2.0e12]
runs = mm.velocity_curve(p, J_values)
for r in runs:
    print(f"J = {r.J:8.2e} A/m^2   v = {r.velocity:7.1f} m/s")

# %% Mobility from the low-current points, saturation speed from the top
rec = mm.calibrate_mobility(p, runs)
print(f"mu_dw {rec.mu_dw:.3e} (m/s)/(A/m^2), v_sat {rec.v_sat:.0f} m/s")
print(f"25 uA for 1 ns would move the wall {dv.anchor_traverse(rec) * 1e9:.0f} nm")

# %% The behavioral device takes v_sat from the record.  25 uA for 1 ns is a full traverse.
params = dv.DeviceParams.from_calibration(rec)
syn = dv.SynapseDevice(0.0, params)
energy = dv.EnergyRecord()
for I in (5e-6, 10e-6, 25e-6):
    syn.program(I, energy=energy)
    print(f"after {I * 1e6:4.0f} uA: x = {syn.x * 1e9:5.1f} nm, G = {syn.conductance() * 1e6:.3f} uS")
print(f"{energy.event_count} pulses, HM Joule {energy.hm_joule_total * 1e15:.3f} fJ, "
      f"supply {energy.supply_total * 1e15:.2f} fJ")
