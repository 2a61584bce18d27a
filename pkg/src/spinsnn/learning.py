"""Spike-timing-dependent plasticity mapped onto domain-wall programming pulses.

Pairing is nearest-neighbour: a post spike pairs with the latest pre spike
on each line (potentiation), and a pre spike arriving after a post spike
pairs with that latest post spike (depression).  Equal timestamps do not
update.  Weight changes become currents through the linear device map
``I = dw * I_max`` and are applied as one pulse of ``t_pulse`` each.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import DeviceParams, pulse_energy
from .dynamics import CircuitParams
from .errors import ConfigError

NO_SPIKE = -1


@dataclass(frozen=True)
class StdpParams:
    A_plus: float = 0.01
    A_minus: float = 0.01
    tau_plus: float = 100.0
    tau_minus: float = 1.0
    window_len_pos: int = 350
    window_len_neg: int = 5

    def __post_init__(self):
        for name in ("A_plus", "A_minus", "tau_plus", "tau_minus", "window_len_pos", "window_len_neg"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.window_len_pos < self.tau_plus or self.window_len_neg < self.tau_minus:
            raise ConfigError("window lengths must be at least their time constants")


def stdp_dw(delta_t, p=StdpParams()):
    """Weight change for ``delta_t = t_post - t_pre`` (steps); elementwise on arrays."""
    dt = np.asarray(delta_t, dtype=float)
    pos = (dt > 0) & (dt <= p.window_len_pos)
    neg = (dt < 0) & (dt >= -p.window_len_neg)
    out = np.where(pos, p.A_plus * np.exp(-np.where(pos, dt, 0.0) / p.tau_plus), 0.0)
    out = np.where(neg, -p.A_minus * np.exp(np.where(neg, dt, 0.0) / p.tau_minus), out)
    return float(out) if out.ndim == 0 else out


def current_for_dw(delta_w, dev=DeviceParams()):
    """Programming current (A) that moves the weight by ``delta_w`` in one t_pulse."""
    delta_w = np.asarray(delta_w, dtype=float)
    if np.any(np.abs(delta_w) > 1.0):
        raise ValueError("|delta_w| must not exceed 1")
    out = delta_w * dev.I_max
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# circuit realisation of the learning window


def ramp_tau(cp=CircuitParams()):
    """Decay constant C_p U_T / (kappa I_t) of the subthreshold ramp current."""
    return cp.C_p * cp.U_T / (cp.kappa * cp.I_t)


def gate_voltage(t, cp=CircuitParams()):
    """PRE-line gate drive: starts at V_w and is discharged at I_t/C_p."""
    return cp.V_w - cp.I_t / cp.C_p * np.asarray(t, dtype=float)


def pre_ramp_current(t, cp=CircuitParams(), window=None):
    """Subthreshold current I_0 exp(kappa V_g / U_T) for the linearly ramped gate.

    Equals ``I_peak exp(-t / tau)`` with ``tau = C_p U_T / (kappa I_t)``.
    Zero outside ``[0, window]`` (default five time constants).
    """
    window = 5.0 * ramp_tau(cp) if window is None else window
    t = np.asarray(t, dtype=float)
    inside = (t >= 0) & (t <= window)
    out = np.where(inside, cp.I_0 * np.exp(cp.kappa * gate_voltage(np.where(inside, t, 0.0), cp) / cp.U_T), 0.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# event engine


@dataclass
class SpikeTraces:
    last_pre: np.ndarray
    last_post: np.ndarray

    @classmethod
    def empty(cls, n_pre, n_post):
        return cls(np.full(n_pre, NO_SPIKE, dtype=np.int64), np.full(n_post, NO_SPIKE, dtype=np.int64))

    def reset(self):
        self.last_pre.fill(NO_SPIKE)
        self.last_post.fill(NO_SPIKE)


@dataclass(frozen=True)
class ProgrammingEvent:
    synapse: tuple
    delta_t: int
    delta_w: float
    I_prog: float
    duration: float
    E_supply: float
    E_joule: float
    clamped: bool = False


class EventLog:
    """Collects programming events as columns; optionally keeps them for the CSV log."""

    columns = ("step", "pre", "post", "delta_t", "delta_w", "I_prog", "E_joule", "E_supply", "clamped")

    def __init__(self, keep=False):
        self.keep = keep
        self.chunks = []

    def add(self, step, pre, post, delta_t, delta_w, current, e_joule, e_supply, clamped):
        if self.keep:
            n = np.size(pre)
            self.chunks.append(np.rec.fromarrays(
                [np.full(n, step), np.broadcast_to(pre, n), np.broadcast_to(post, n), delta_t, delta_w, current,
                 e_joule, e_supply, clamped], names=self.columns))

    def records(self):
        if not self.chunks:
            return np.rec.fromarrays([np.zeros(0)] * len(self.columns), names=self.columns)
        return np.concatenate(self.chunks).view(np.recarray)


class StdpEngine:
    """Post-triggered programming of a ``(n_pre, n_post)`` device crossbar."""

    def __init__(self, devices, stdp=StdpParams(), log=None):
        self.devices = devices
        self.stdp = stdp
        n_pre, n_post = devices.x.shape
        self.traces = SpikeTraces.empty(n_pre, n_post)
        self.log = log if log is not None else EventLog()
        self.now = 0

    def apply(self, rows, cols, delta_t, dw):
        """Program ``dw`` into synapses ``(rows, cols)`` and log each pulse."""
        p = self.devices.params
        currents = current_for_dw(dw, p)
        achieved = self.devices.program((rows, cols), currents)
        e_joule, e_supply = pulse_energy(p, currents, p.t_pulse)
        clamped = np.abs(achieved - dw) > 1e-12
        self.log.add(self.now, rows, cols, delta_t, dw, currents, e_joule, e_supply, clamped)
        return achieved, currents, e_joule, e_supply, clamped

    def on_post_spike(self, post, now):
        """Potentiate every line whose latest pre spike is inside the positive window."""
        self.now = now
        self.traces.last_post[post] = now
        last = self.traces.last_pre
        delta_t = now - last
        rows = np.nonzero((last != NO_SPIKE) & (delta_t > 0) & (delta_t <= self.stdp.window_len_pos))[0]
        if rows.size == 0:
            return []
        dt_rows = delta_t[rows]
        dw = stdp_dw(dt_rows, self.stdp)
        return self._events(rows, np.full(rows.size, post), dt_rows, dw)

    def record_pre_spike(self, line, now):
        """Register a pre spike; depress synapses whose post neuron fired just before."""
        self.now = now
        self.traces.last_pre[line] = now
        last = self.traces.last_post
        delta_t = last - now
        cols = np.nonzero((last != NO_SPIKE) & (delta_t < 0) & (delta_t >= -self.stdp.window_len_neg))[0]
        if cols.size == 0:
            return []
        dt_cols = delta_t[cols]
        dw = stdp_dw(dt_cols, self.stdp)
        return self._events(np.full(cols.size, line), cols, dt_cols, dw)

    def _events(self, rows, cols, delta_t, dw):
        achieved, currents, e_joule, e_supply, clamped = self.apply(rows, cols, delta_t, dw)
        return [ProgrammingEvent((int(r), int(c)), int(d), float(w), float(i), self.devices.params.t_pulse,
                                 float(es), float(ej), bool(cl))
                for r, c, d, w, i, ej, es, cl in zip(rows, cols, delta_t, dw, currents, e_joule, e_supply, clamped)]

    # bulk forms used by the network: same rule, no per-event objects

    def post_spikes(self, posts, now):
        self.now = now
        last = self.traces.last_pre
        delta_t = now - last
        rows = np.nonzero((last != NO_SPIKE) & (delta_t > 0) & (delta_t <= self.stdp.window_len_pos))[0]
        for post in posts:
            self.traces.last_post[post] = now
            if rows.size:
                self.apply(rows, np.full(rows.size, post), delta_t[rows], stdp_dw(delta_t[rows], self.stdp))

    def pre_spikes(self, lines, now):
        self.now = now
        self.traces.last_pre[lines] = now
        last = self.traces.last_post
        delta_t = last - now
        cols = np.nonzero((last != NO_SPIKE) & (delta_t < 0) & (delta_t >= -self.stdp.window_len_neg))[0]
        if cols.size == 0 or len(lines) == 0:
            return
        rr, cc = np.meshgrid(lines, cols, indexing="ij")
        dts = np.broadcast_to(delta_t[cols], rr.shape)
        self.apply(rr.ravel(), cc.ravel(), dts.ravel(), stdp_dw(dts.ravel(), self.stdp))
