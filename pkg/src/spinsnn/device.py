"""Behavioral domain-wall synapse.

The wall position ``x`` in ``[0, L_mtj]`` sets the MTJ conductance through a
linear three-resistor model; programming pulses through the heavy metal move
the wall in proportion to the current, up to the saturation speed taken from
the micromagnetic calibration.
"""

from __future__ import annotations

from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .errors import BiasRangeError, ConfigError, ProgrammingOverdriveError, PulseMisuseError

V_READ_MAX = 0.1     # V; above this the constant-conductance model is not valid
MAX_PULSE_FACTOR = 100
DEFAULT_V_SAT = 400.0  # m/s, used when no calibration record is attached


class ExactSum:
    """Running float sum with no rounding drift.

    Every float is an integer multiple of 2**-1074, so the total is kept as
    one Python integer in those units and rounded once on read.  ``value``
    therefore equals ``math.fsum`` over the same numbers in any order.
    """

    _SHIFT = 1074
    _BLOCK = 1000  # 1000 * 2**53 < 2**63, so int64 block sums cannot overflow

    def __init__(self, total=0):
        self.total = int(total)

    def add(self, x):
        self.extend([x])

    def extend(self, values):
        v = np.asarray(values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite value in exact sum")
        mant, expo = np.frexp(v)
        mant = np.ldexp(mant, 53).astype(np.int64)
        expo = expo.astype(np.int64) - 53 + self._SHIFT
        for e in np.unique(expo):
            m = mant[expo == e]
            s = sum(int(m[i:i + self._BLOCK].sum()) for i in range(0, m.size, self._BLOCK))
            self.total += s << int(e) if e >= 0 else s >> int(-e)

    @property
    def value(self):
        return float(Fraction(self.total, 1 << self._SHIFT))


@dataclass(frozen=True)
class DeviceParams:
    """Synapse device constants.

    R_HM = 384 ohm is obtained by inverting E = I^2 R t with E = 0.24 fJ,
    I = 25 uA and t = 1 ns.  The MTJ conductances are assumptions in the
    MOhm range (R_P = 1 MOhm, R_AP = 2 MOhm).
    """

    L_mtj: float = 100e-9
    G_P: float = 1.0e-6
    G_AP: float = 0.5e-6
    G_DW: float = 0.05e-6
    R_HM: float = 384.0
    t_pulse: float = 1e-9
    I_max: float = 25e-6
    V_dd: float = 0.6
    ceiling_factor: float = 1.5
    v_sat: float = DEFAULT_V_SAT

    def __post_init__(self):
        if not self.G_P > self.G_AP > 0:
            raise ConfigError(f"need G_P > G_AP > 0, got G_P={self.G_P}, G_AP={self.G_AP}")
        if self.G_DW < 0:
            raise ConfigError("G_DW must be non-negative")
        if not 100.0 <= self.R_HM <= 1000.0:
            raise ConfigError(f"R_HM={self.R_HM} ohm outside the few-hundred-ohm range [100, 1000]")
        for name in ("L_mtj", "t_pulse", "I_max", "V_dd", "v_sat"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.ceiling_factor < 1:
            raise ConfigError("ceiling_factor must be >= 1")

    @classmethod
    def from_calibration(cls, record, **overrides):
        """Device constants with the saturation speed of a micromagnetic calibration."""
        return cls(v_sat=record.v_sat, **overrides)

    @property
    def I_ceiling(self):
        return self.ceiling_factor * self.I_max

    @property
    def drive(self):
        """Wall speed per ampere (m/s/A): I_max for t_pulse moves the wall across L_mtj."""
        return self.L_mtj / (self.I_max * self.t_pulse)

    def speed(self, current):
        """Signed wall speed for a programming current, capped at v_sat."""
        current = np.asarray(current, dtype=float)
        return np.sign(current) * np.minimum(np.abs(current) * self.drive, self.v_sat)


def anchor_traverse(record, params=DeviceParams()):
    """Distance (m) the micromagnetic calibration predicts for I_max over t_pulse."""
    return abs(record.velocity(params.I_max)) * params.t_pulse


@dataclass
class EnergyRecord:
    """Per-event programming energy with exact running totals."""

    keep_events: bool = True
    event_count: int = 0
    events: list = field(default_factory=list, repr=False)
    _joule: ExactSum = field(default_factory=ExactSum, repr=False)
    _supply: ExactSum = field(default_factory=ExactSum, repr=False)

    def add(self, current, duration, e_joule, e_supply):
        if e_joule < 0 or e_supply < 0:
            raise ValueError("energies are non-negative")
        self.event_count += 1
        self._joule.add(e_joule)
        self._supply.add(e_supply)
        if self.keep_events:
            self.events.append((float(current), float(duration), float(e_joule), float(e_supply)))

    def add_many(self, currents, duration, e_joule, e_supply):
        e_joule = np.asarray(e_joule, dtype=float)
        e_supply = np.asarray(e_supply, dtype=float)
        self.event_count += e_joule.size
        self._joule.extend(e_joule)
        self._supply.extend(e_supply)
        if self.keep_events:
            self.events.extend(zip(np.asarray(currents, dtype=float).tolist(), [float(duration)] * e_joule.size,
                                   e_joule.tolist(), e_supply.tolist()))

    @property
    def hm_joule_total(self):
        return self._joule.value

    @property
    def supply_total(self):
        return self._supply.value

    def state(self):
        return {"event_count": self.event_count, "joule": self._joule.total, "supply": self._supply.total}

    @classmethod
    def from_state(cls, state, keep_events=False):
        rec = cls(keep_events=keep_events, event_count=int(state["event_count"]))
        rec._joule = ExactSum(state["joule"])
        rec._supply = ExactSum(state["supply"])
        return rec


def _check_pulse(params, current, t):
    if t <= 0:
        raise PulseMisuseError(f"pulse duration must be positive, got {t}")
    if t > MAX_PULSE_FACTOR * params.t_pulse:
        raise PulseMisuseError(f"pulse of {t:.3e} s exceeds {MAX_PULSE_FACTOR} x t_pulse")
    peak = float(np.max(np.abs(current))) if np.size(current) else 0.0
    if peak > params.I_ceiling:
        raise ProgrammingOverdriveError(f"|I|={peak:.3e} A above the ceiling {params.I_ceiling:.3e} A")


def pulse_energy(params, current, t):
    """(Joule heating in the heavy metal, supply energy) for one pulse."""
    current = np.asarray(current, dtype=float)
    return current**2 * params.R_HM * t, params.V_dd * np.abs(current) * t


@dataclass
class SynapseDevice:
    x: float
    params: DeviceParams = field(default_factory=DeviceParams)

    def __post_init__(self):
        if not 0.0 <= self.x <= self.params.L_mtj:
            raise ValueError(f"wall position {self.x} outside [0, {self.params.L_mtj}]")

    def conductance(self):
        p = self.params
        f = self.x / p.L_mtj
        return p.G_P * f + p.G_AP * (1.0 - f) + p.G_DW

    def weight(self):
        return self.x / self.params.L_mtj

    def read_current(self, V_read):
        if V_read < 0 or V_read > V_READ_MAX:
            raise BiasRangeError(f"read bias {V_read} V outside [0, {V_READ_MAX}] V")
        return self.conductance() * V_read

    def program(self, I_prog, t=None, energy=None):
        """Apply one pulse; returns the (E_joule, E_supply) entry that was booked."""
        p = self.params
        t = p.t_pulse if t is None else t
        _check_pulse(p, I_prog, t)
        self.x = min(max(self.x + float(p.speed(I_prog)) * t, 0.0), p.L_mtj)
        e_joule, e_supply = (float(e) for e in pulse_energy(p, I_prog, t))
        if energy is not None:
            energy.add(I_prog, t, e_joule, e_supply)
        return e_joule, e_supply


def conductance_of(x, params=DeviceParams()):
    """Vectorised conductance for wall positions ``x``."""
    f = np.asarray(x, dtype=float) / params.L_mtj
    return params.G_P * f + params.G_AP * (1.0 - f) + params.G_DW


class DeviceArray:
    """A crossbar of devices sharing one parameter block, stored as a wall-position array."""

    def __init__(self, x, params=DeviceParams(), energy=None):
        self.params = params
        self.x = np.array(x, dtype=float)
        if self.x.size and (self.x.min() < 0 or self.x.max() > params.L_mtj):
            raise ValueError("wall positions outside [0, L_mtj]")
        self.energy = energy if energy is not None else EnergyRecord(keep_events=False)

    @classmethod
    def from_weights(cls, w, params=DeviceParams(), energy=None):
        return cls(np.asarray(w, dtype=float) * params.L_mtj, params, energy)

    @property
    def weights(self):
        return self.x / self.params.L_mtj

    def conductance(self):
        return conductance_of(self.x, self.params)

    def program(self, index, currents, t=None):
        """Pulse the devices at ``index`` (any numpy index) with ``currents``.

        Returns the achieved change in weight for each pulsed device.
        """
        p = self.params
        t = p.t_pulse if t is None else t
        currents = np.asarray(currents, dtype=float)
        _check_pulse(p, currents, t)
        before = self.x[index]
        after = np.clip(before + p.speed(currents) * t, 0.0, p.L_mtj)
        self.x[index] = after
        e_joule, e_supply = pulse_energy(p, currents, t)
        self.energy.add_many(np.broadcast_to(currents, np.shape(after)), t,
                             np.broadcast_to(e_joule, np.shape(after)), np.broadcast_to(e_supply, np.shape(after)))
        return (after - before) / p.L_mtj
