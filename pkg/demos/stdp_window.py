"""Nearest-neighbour STDP on a small crossbar of domain-wall synapses."""
# %%
import numpy as np

from spinsnn import learning as ln
from spinsnn.device import DeviceArray, DeviceParams, EnergyRecord

# %% The learning window: wide potentiation, narrow depression
for dt in (-5, -2, -1, 0, 1, 5, 50, 100, 300):
    dw = float(ln.stdp_dw(dt))
    print(f"dt {dt:+4d}  dw {dw:+.5f}  I_prog {ln.current_for_dw(dw) * 1e6:+.3f} uA")

# %% A 4 x 2 crossbar with every wall at mid-span
params = DeviceParams()
devices = DeviceArray(np.full((4, 2), 0.5 * params.L_mtj), params, EnergyRecord(keep_events=True))
engine = ln.StdpEngine(devices, log=ln.EventLog(keep=True))

# pre line 0 leads post 0 and pre line 3 lags it; post 1 fires later and pairs with both
engine.record_pre_spike(0, 10)
engine.on_post_spike(0, 15)
engine.record_pre_spike(3, 16)
engine.on_post_spike(1, 40)

rec = engine.log.records()
for r in rec:
    print(f"step {r.step:3d} syn ({r.pre},{r.post}) dt {r.delta_t:+d} dw {r.delta_w:+.5f} E {r.E_supply * 1e15:.3f} fJ")
print(np.round(devices.weights, 4))

# %% Energy totals are exact sums of the per-event entries
print(f"events {devices.energy.event_count}, HM Joule {devices.energy.hm_joule_total:.6e} J")
