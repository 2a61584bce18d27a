"""Neuron and synapse dynamics in two tiers.

Behavioral tier: time in simulation steps, dimensionless membrane variable.
Circuit tier: the translinear subthreshold ODEs in amperes and seconds.  Both
use exponential Euler, which is exact for the linear leak.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

U_T_300K = 25.85e-3


@dataclass(frozen=True)
class NeuronParams:
    tau_mem: float = 10.0
    R_mem: float = 1.0
    V_thres: float = 1.0
    V_reset: float = 0.0
    t_refrac: int = 2
    a_inc: float = 0.01
    tau_a: float = 100.0

    def __post_init__(self):
        if self.tau_mem <= 0 or self.tau_a <= 0:
            raise ConfigError("time constants must be positive")
        if self.t_refrac < 0 or self.a_inc < 0:
            raise ConfigError("t_refrac and a_inc must be non-negative")
        if not self.V_thres > self.V_reset:
            raise ConfigError("V_thres must exceed V_reset")


@dataclass
class NeuronState:
    """Membrane variable, adaptation and refractory timer; scalars or arrays."""

    v: np.ndarray | float = 0.0
    a: np.ndarray | float = 0.0
    refrac_remaining: np.ndarray | int = 0

    @classmethod
    def zeros(cls, n, p=NeuronParams()):
        return cls(np.full(n, p.V_reset, dtype=float), np.zeros(n), np.zeros(n, dtype=np.int64))


@dataclass
class SynapticCurrentState:
    i_post: np.ndarray | float = 0.0
    tau_post: float = 1.0


def synapse_step(s, spike_weight_sum):
    """i <- i exp(-1/tau) + input; delta inputs land at once, then decay."""
    return SynapticCurrentState(s.i_post * np.exp(-1.0 / s.tau_post) + spike_weight_sum, s.tau_post)


def lif_step(n, p, i_total):
    """One step of tau dv/dt = -v (1 + a) + R i, with threshold, reset and refractory.

    Works elementwise on arrays.  Returns ``(new_state, spiked)``.
    """
    v = np.asarray(n.v, dtype=float)
    a = np.asarray(n.a, dtype=float)
    refrac = np.asarray(n.refrac_remaining)
    leak = 1.0 + a
    decay = np.exp(-leak / p.tau_mem)
    v_new = v * decay + p.R_mem * np.asarray(i_total, dtype=float) * (1.0 - decay) / leak
    in_refrac = refrac > 0
    v_new = np.where(in_refrac, p.V_reset, v_new)
    spiked = ~in_refrac & (v_new >= p.V_thres)
    v_new = np.where(spiked, p.V_reset, v_new)
    refrac_new = np.where(in_refrac, refrac - 1, np.where(spiked, p.t_refrac, 0))
    a_new = a * np.exp(-1.0 / p.tau_a) + np.where(spiked, p.a_inc, 0.0)
    state = NeuronState(v_new, a_new, refrac_new)
    if np.ndim(n.v) == 0:
        state = NeuronState(float(v_new), float(a_new), int(refrac_new))
        return state, bool(spiked)
    return state, spiked


def lif_first_spike_time(p, I):
    """Closed-form threshold-crossing time (steps) for constant input, a = 0."""
    drive = p.R_mem * I
    if drive <= p.V_thres:
        return np.inf
    return p.tau_mem * np.log(drive / (drive - p.V_thres))


# --------------------------------------------------------------------------
# circuit tier


@dataclass(frozen=True)
class CircuitParams:
    """Subthreshold bias set.  Capacitances C_p, C_syn, C_mem in farads; currents in amperes."""

    U_T: float = U_T_300K
    kappa: float = 0.7
    C_p: float = 1e-12
    C_syn: float = 1e-12
    C_mem: float = 1e-12
    I_t: float = 10e-9
    I_th: float = 10e-9
    I_w: float = 100e-9
    I_0: float = 1e-15
    V_w: float = 0.5
    V_dd: float = 0.6
    I_mem_thres: float = 10e-9
    I_a_inc: float = 0.1e-9
    tau_a: float = 100e-6
    timestep: float = 1e-6
    t_refrac: int = 2

    def __post_init__(self):
        for name in ("U_T", "kappa", "C_p", "C_syn", "C_mem", "I_t", "I_th", "I_0", "timestep", "tau_a"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.I_w < 10 * self.I_t:
            raise ConfigError(f"linear-regime guard violated: I_w={self.I_w:.3e} < 10 I_t={10 * self.I_t:.3e}")

    def tau(self, C):
        """Translinear time constant C U_T / (kappa I_t)."""
        return C * self.U_T / (self.kappa * self.I_t)

    @property
    def tau_syn(self):
        return self.tau(self.C_syn)

    @property
    def tau_mem(self):
        return self.tau(self.C_mem)


def bias_for_tau(tau, C, U_T=U_T_300K, kappa=0.7):
    """Tail current that gives time constant ``tau`` with capacitance ``C``."""
    return C * U_T / (kappa * tau)


def dpi_step(I_syn, cp, spike_gated_I_w, dt=None):
    """Differential-pair integrator: tau dI/dt + I = I_w I_th / I_t while gated, decay otherwise."""
    dt = cp.timestep if dt is None else dt
    target = np.asarray(spike_gated_I_w, dtype=float) * cp.I_th / cp.I_t
    decay = np.exp(-dt / cp.tau_syn)
    return target + (np.asarray(I_syn, dtype=float) - target) * decay


@dataclass
class CircuitNeuronState:
    I_mem: np.ndarray | float = 0.0
    I_a: np.ndarray | float = 0.0
    refrac_remaining: np.ndarray | int = 0


def neuron_circuit_step(state, cp, I_in, dt=None):
    """tau dI_mem/dt + I_mem (1 + I_a/I_t) = I_in I_th / I_t, with threshold and reset.

    Spike generation and reset are instantaneous.  ``I_a`` jumps by
    ``I_a_inc`` per spike and decays with ``tau_a``.
    """
    dt = cp.timestep if dt is None else dt
    I_mem = np.asarray(state.I_mem, dtype=float)
    I_a = np.asarray(state.I_a, dtype=float)
    refrac = np.asarray(state.refrac_remaining)
    leak = 1.0 + I_a / cp.I_t
    decay = np.exp(-dt * leak / cp.tau_mem)
    drive = np.asarray(I_in, dtype=float) * cp.I_th / cp.I_t
    new = I_mem * decay + drive * (1.0 - decay) / leak
    in_refrac = refrac > 0
    new = np.where(in_refrac, 0.0, new)
    spiked = ~in_refrac & (new >= cp.I_mem_thres)
    new = np.where(spiked, 0.0, new)
    refrac_new = np.where(in_refrac, refrac - 1, np.where(spiked, cp.t_refrac, 0))
    I_a_new = I_a * np.exp(-dt / cp.tau_a) + np.where(spiked, cp.I_a_inc, 0.0)
    out = CircuitNeuronState(new, I_a_new, refrac_new)
    if np.ndim(state.I_mem) == 0:
        return CircuitNeuronState(float(new), float(I_a_new), int(refrac_new)), bool(spiked)
    return out, spiked


def matched_circuit(p, cp=CircuitParams(), I_unit=10e-9):
    """Circuit biases equivalent to behavioral parameters ``p``.

    One membrane unit maps to ``I_unit`` amperes, ``a`` maps to ``I_a/I_t``
    and one step maps to ``cp.timestep`` seconds.  Requires V_reset = 0 (the
    circuit resets to zero current).  Returns the circuit parameters and the
    factor that converts a behavioral input ``i`` into ``I_in``.
    """
    if p.V_reset != 0.0:
        raise ConfigError("the circuit tier resets to zero; use V_reset = 0")
    C_mem = p.tau_mem * cp.timestep * cp.kappa * cp.I_t / cp.U_T
    out = replace(cp, C_mem=C_mem, I_mem_thres=p.V_thres * I_unit, I_a_inc=p.a_inc * cp.I_t,
                  tau_a=p.tau_a * cp.timestep, t_refrac=p.t_refrac)
    gain = p.R_mem * I_unit * cp.I_t / cp.I_th
    return out, gain
