"""Run configuration: INI-style sections of ``key = value`` lines.

Reference (every key is optional; omitted keys take the defaults below)::

    [micromag]      MaterialParams fields (Ms, A_ex, Ku, D, alpha, theta_SH, t_FM, t_HM)
                    plus j_values (comma list, A/m^2), duration (s), dt (s)
    [device]        DeviceParams fields (L_mtj, G_P, G_AP, G_DW, R_HM, t_pulse, I_max,
                    V_dd, ceiling_factor, v_sat)
    [dynamics.exc]  NeuronParams fields for the excitatory layer
    [dynamics.inh]  NeuronParams fields for the inhibitory layer
    [learning]      StdpParams fields (A_plus, A_minus, tau_plus, tau_minus,
                    window_len_pos, window_len_neg)
    [network]       SimConfig fields (n_exc, p_max, steps_per_image, epochs, seed, ...)
    [data]          mnist_dir

Unknown sections and keys are errors.  The config hash is the sha256 of the
canonical JSON form, so any change of value changes it.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..device import DeviceParams
from ..errors import ConfigError
from ..learning import StdpParams
from ..micromag import MaterialParams
from ..dynamics import NeuronParams
from ..network import EXC_DEFAULT, INH_DEFAULT, Network, SimConfig

SWEEP_J = (0.0, 0.5e11, 1e11, 2e11, 4e11, 8e11, 1.2e12, 1.6e12, 2.0e12, 2.2e12)


@dataclass(frozen=True)
class SweepConfig:
    j_values: tuple = SWEEP_J
    duration: float = 0.5e-9
    dt: float = 25e-15

    def __post_init__(self):
        if self.duration <= 0 or self.dt <= 0:
            raise ConfigError("duration and dt must be positive")
        if len(self.j_values) == 0:
            raise ConfigError("j_values must not be empty")


@dataclass(frozen=True)
class DataConfig:
    mnist_dir: str = "data/mnist"


@dataclass(frozen=True)
class RunConfig:
    material: MaterialParams = field(default_factory=MaterialParams)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    device: DeviceParams = field(default_factory=DeviceParams)
    exc: NeuronParams = EXC_DEFAULT
    inh: NeuronParams = INH_DEFAULT
    stdp: StdpParams = field(default_factory=StdpParams)
    network: SimConfig = field(default_factory=SimConfig)
    data: DataConfig = field(default_factory=DataConfig)

    def with_seed(self, seed):
        return dataclasses.replace(self, network=dataclasses.replace(self.network, seed=int(seed)))

    def to_dict(self):
        return {name: _section_values(self, name) for name in SECTIONS}

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


# section name -> (RunConfig attribute, micromag splits its keys over two objects)
SECTIONS = {
    "micromag": ("material", "sweep"),
    "device": ("device",),
    "dynamics.exc": ("exc",),
    "dynamics.inh": ("inh",),
    "learning": ("stdp",),
    "network": ("network",),
    "data": ("data",),
}


def _section_values(cfg, section):
    out = {}
    for attr in SECTIONS[section]:
        obj = getattr(cfg, attr)
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def _convert(raw, default, key):
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            return tuple(float(x) for x in raw.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc
    return raw.strip()


def from_mapping(sections):
    """Build a RunConfig from ``{section: {key: text}}``."""
    cfg = RunConfig()
    updates = {}
    for section, items in sections.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        remaining = dict(items)
        for attr in SECTIONS[section]:
            obj = updates.get(attr, getattr(cfg, attr))
            names = {f.name for f in dataclasses.fields(obj)}
            changes = {k: _convert(remaining.pop(k), getattr(obj, k), f"{section}.{k}")
                       for k in list(remaining) if k in names}
            updates[attr] = dataclasses.replace(obj, **changes)
        if remaining:
            raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(remaining))}")
    return dataclasses.replace(cfg, **updates)


def loads(text):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case-sensitive (Ms, A_ex, ...)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return from_mapping({s: dict(parser[s]) for s in parser.sections()})


def load(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def _fmt(v):
    if isinstance(v, (list, tuple)):
        return ", ".join(repr(float(x)) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def dumps(cfg):
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        lines += [f"{k} = {_fmt(v)}" for k, v in _section_values(cfg, section).items()]
        lines.append("")
    return "\n".join(lines)


def build_network(cfg, keep_events=False):
    """Fresh network for a RunConfig."""
    return Network(cfg.network, exc=cfg.exc, inh=cfg.inh, stdp=cfg.stdp, device=cfg.device, keep_events=keep_events)
