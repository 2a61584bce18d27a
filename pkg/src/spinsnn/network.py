"""Two-layer spiking network with lateral inhibition trained by device-level STDP.

784 Poisson inputs feed ``n_exc`` excitatory neurons through a crossbar of
domain-wall synapses.  Each excitatory neuron triggers its own inhibitory
partner, which inhibits every other excitatory neuron.  Membranes, synaptic
currents and spike traces reset between images; the adaptation variable
carries over and acts as homeostasis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .device import DeviceArray, DeviceParams, EnergyRecord
from .dynamics import NeuronParams, NeuronState, lif_step
from .errors import ConfigError
from .learning import EventLog, StdpEngine, StdpParams

N_CLASSES = 10
NONE = -1

# spawn keys for the per-image random streams
STREAM_INIT, STREAM_TRAIN, STREAM_ASSIGN, STREAM_TEST = 0, 1, 2, 3


@dataclass(frozen=True)
class SimConfig:
    n_input: int = 784
    n_exc: int = 100
    p_max: float = 0.06375
    steps_per_image: int = 350
    epochs: int = 1
    seed: int = 0
    tau_post_exc: float = 1.0
    tau_post_inh: float = 2.0
    w_inh: float = 100.0
    w_trigger: float = 20.0
    w_norm: float = 0.1
    n_train: int = 5000
    n_assign: int = 5000
    n_test: int = 1000

    def __post_init__(self):
        if not 0 < self.p_max <= 1:
            raise ConfigError(f"p_max must lie in (0, 1], got {self.p_max}")
        if self.steps_per_image < 1 or self.n_exc < 1 or self.n_input < 1:
            raise ConfigError("steps_per_image, n_exc and n_input must be >= 1")
        if self.tau_post_exc <= 0 or self.tau_post_inh <= 0:
            raise ConfigError("synaptic time constants must be positive")
        if not 0 <= self.w_norm <= 1:
            raise ConfigError(f"w_norm must lie in [0, 1], got {self.w_norm}")
        if self.w_inh < 0 or self.w_trigger < 0:
            raise ConfigError("w_inh and w_trigger must be non-negative")
        if min(self.n_train, self.n_assign, self.n_test, self.epochs) < 0:
            raise ConfigError("dataset sizes and epochs must be non-negative")


# tuned on 2000-image runs; tau_a spans a few hundred images so adaptation acts as homeostasis
EXC_DEFAULT = NeuronParams(tau_mem=10.0, R_mem=1.0, V_thres=1.0, V_reset=0.0, t_refrac=2, a_inc=0.01,
                           tau_a=1e5)
INH_DEFAULT = NeuronParams(tau_mem=10.0, R_mem=1.0, V_thres=1.0, V_reset=0.0, t_refrac=2, a_inc=0.0, tau_a=100.0)


def image_rng(seed, stream, index):
    """Independent PCG64 stream for one image (or for initialisation)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, index))))


def poisson_encode(image, cfg, rng, steps=None):
    """Boolean spikes ``(steps, 784)``; pixel v fires with probability (v/255) p_max per step."""
    steps = cfg.steps_per_image if steps is None else steps
    rate = np.asarray(image, dtype=float).reshape(-1) / 255.0 * cfg.p_max
    return rng.random((steps, rate.size)) < rate


@dataclass
class NetworkTopology:
    n_input: int
    n_exc: int
    devices: DeviceArray
    inh_mask: np.ndarray = field(repr=False)

    @property
    def n_inh(self):
        return self.n_exc

    @property
    def n_plastic(self):
        return self.devices.x.size

    @property
    def n_trigger_links(self):
        return self.n_exc

    @property
    def n_inhibitory_links(self):
        return int(self.inh_mask.sum())


@dataclass
class ClassAssignment:
    labels: np.ndarray
    histogram: np.ndarray

    @property
    def silent(self):
        return bool(np.all(self.labels == NONE))


class Network:
    """Network state plus the per-step update."""

    def __init__(self, cfg=SimConfig(), exc=EXC_DEFAULT, inh=INH_DEFAULT, stdp=StdpParams(),
                 device=DeviceParams(), keep_events=False):
        self.cfg, self.exc_p, self.inh_p, self.stdp = cfg, exc, inh, stdp
        init = image_rng(cfg.seed, STREAM_INIT, 0)
        x = init.random((cfg.n_input, cfg.n_exc)) * device.L_mtj
        energy = EnergyRecord(keep_events=False)
        devices = DeviceArray(x, device, energy)
        self.topology = NetworkTopology(cfg.n_input, cfg.n_exc, devices, ~np.eye(cfg.n_exc, dtype=bool))
        self.engine = StdpEngine(devices, stdp, EventLog(keep=keep_events))
        self.exc = NeuronState.zeros(cfg.n_exc, exc)
        self.inh = NeuronState.zeros(cfg.n_exc, inh)
        self.i_exc = np.zeros(cfg.n_exc)
        self.i_trig = np.zeros(cfg.n_exc)
        self.i_inh = np.zeros(cfg.n_exc)
        self.clock = 0
        self.images_trained = 0
        self._decay_exc = np.exp(-1.0 / cfg.tau_post_exc)
        self._decay_inh = np.exp(-1.0 / cfg.tau_post_inh)
        self.tracer = None

    @property
    def devices(self):
        return self.topology.devices

    @property
    def weights(self):
        return self.devices.weights

    @property
    def energy(self):
        return self.devices.energy

    def reset_image_state(self):
        """Clear membranes, currents, refractory timers and spike traces; keep adaptation."""
        self.exc = NeuronState(np.full(self.cfg.n_exc, self.exc_p.V_reset), self.exc.a,
                               np.zeros(self.cfg.n_exc, dtype=np.int64))
        self.inh = NeuronState(np.full(self.cfg.n_exc, self.inh_p.V_reset), self.inh.a,
                               np.zeros(self.cfg.n_exc, dtype=np.int64))
        self.i_exc[:] = 0.0
        self.i_trig[:] = 0.0
        self.i_inh[:] = 0.0
        self.engine.traces.reset()

    def step(self, input_spikes, learning_enabled=True, inhibition=True):
        """Advance one timestep; returns (exc spikes, inh spikes) as boolean arrays."""
        cfg = self.cfg
        lines = np.flatnonzero(input_spikes)
        drive = self.devices.x[lines].sum(axis=0) / self.devices.params.L_mtj if lines.size else 0.0
        self.i_exc = self.i_exc * self._decay_exc + drive
        # inhibitory current was produced by last step's inh spikes
        self.exc, exc_spk = lif_step(self.exc, self.exc_p, self.i_exc - self.i_inh)
        self.i_trig = self.i_trig * self._decay_exc + cfg.w_trigger * exc_spk
        self.inh, inh_spk = lif_step(self.inh, self.inh_p, self.i_trig)
        w_inh = cfg.w_inh if inhibition else 0.0
        n_inh = inh_spk.sum()
        self.i_inh = self.i_inh * self._decay_inh + w_inh * (n_inh - inh_spk)
        if learning_enabled:
            posts = np.flatnonzero(exc_spk)
            if posts.size:
                self.engine.post_spikes(posts, self.clock)
            if lines.size:
                self.engine.pre_spikes(lines, self.clock)
        if self.tracer is not None:
            self.tracer(self, exc_spk)
        self.clock += 1
        return exc_spk, inh_spk

    def normalize(self, columns):
        """Rescale the weight columns of ``columns`` to mean ``w_norm`` with programming pulses.

        Keeps the total afferent weight of a neuron fixed so that STDP
        potentiation redistributes weight instead of only adding it.
        """
        if self.cfg.w_norm == 0 or len(columns) == 0:
            return
        w = self.devices.weights[:, columns]
        mean = w.mean(axis=0)
        scale = np.where(mean > 0, self.cfg.w_norm / np.where(mean > 0, mean, 1.0), 1.0)
        dw = w * (scale - 1.0)
        rows, cols = np.nonzero(dw)
        if rows.size == 0:
            return
        self.engine.apply(rows, np.asarray(columns)[cols], np.zeros(rows.size, dtype=np.int64), dw[rows, cols])

    def present(self, image, rng, learning_enabled, inhibition=True):
        """Show one image for ``steps_per_image`` steps; returns per-neuron exc spike counts."""
        self.reset_image_state()
        spikes = poisson_encode(image, self.cfg, rng)
        counts = np.zeros(self.cfg.n_exc, dtype=np.int64)
        for row in spikes:
            exc_spk, _ = self.step(row, learning_enabled, inhibition)
            counts += exc_spk
        if learning_enabled:
            self.normalize(np.flatnonzero(counts))
        return counts


def build_network(cfg=SimConfig(), **kwargs):
    return Network(cfg, **kwargs)


@dataclass
class EpochStats:
    epoch: int
    images: int
    exc_spikes: int
    programming_events: int
    hm_joule: float
    supply: float
    weight_drift: float


def train(net, images, cfg=None, progress=None, stop_after=None):
    """Present ``images`` with STDP on; resumable from ``net.images_trained``.

    Image ``k`` of epoch ``e`` always draws from stream ``(TRAIN, e*len + k)``,
    so a run split at any image boundary reproduces the uninterrupted run.
    ``stop_after`` caps the number of images shown in this call.
    """
    cfg = cfg or net.cfg
    n = len(images)
    total = cfg.epochs * n
    stats = []
    start = net.images_trained
    end = total if stop_after is None else min(total, start + stop_after)
    w0 = net.weights.copy()
    spikes = 0
    events0 = net.energy.event_count
    j0, s0 = net.energy.hm_joule_total, net.energy.supply_total
    for k in range(start, end):
        counts = net.present(images[k % n], image_rng(cfg.seed, STREAM_TRAIN, k), learning_enabled=True)
        spikes += int(counts.sum())
        net.images_trained = k + 1
        if progress is not None:
            progress(k + 1, total)
        if (k + 1) % n == 0 or k + 1 == end:
            stats.append(EpochStats(epoch=k // n, images=(k % n) + 1, exc_spikes=spikes,
                                    programming_events=net.energy.event_count - events0,
                                    hm_joule=net.energy.hm_joule_total - j0, supply=net.energy.supply_total - s0,
                                    weight_drift=float(np.abs(net.weights - w0).mean())))
            w0 = net.weights.copy()
            spikes, events0 = 0, net.energy.event_count
            j0, s0 = net.energy.hm_joule_total, net.energy.supply_total
    return net, stats


def response_counts(net, images, stream, inhibition=True):
    """Spike counts ``(n_images, n_exc)`` with learning frozen."""
    out = np.zeros((len(images), net.cfg.n_exc), dtype=np.int64)
    for k, image in enumerate(images):
        out[k] = net.present(image, image_rng(net.cfg.seed, stream, k), learning_enabled=False,
                             inhibition=inhibition)
    return out


def assignment_from_counts(counts, labels):
    hist = np.zeros((counts.shape[1], N_CLASSES), dtype=np.int64)
    for c in range(N_CLASSES):
        hist[:, c] = counts[np.asarray(labels) == c].sum(axis=0)
    assigned = np.where(hist.sum(axis=1) > 0, np.argmax(hist, axis=1), NONE)
    return ClassAssignment(assigned, hist)


def assign_classes(net, images, labels):
    """Label each neuron by its strongest-responding class (ties -> lowest label)."""
    return assignment_from_counts(response_counts(net, images, STREAM_ASSIGN), labels)


@dataclass
class Evaluation:
    accuracy: float
    confusion: np.ndarray
    predictions: np.ndarray
    chance_level: bool = False


def predict_from_counts(counts, assignment):
    votes = np.zeros((counts.shape[0], N_CLASSES), dtype=np.int64)
    for c in range(N_CLASSES):
        votes[:, c] = counts[:, assignment.labels == c].sum(axis=1)
    return np.where(votes.sum(axis=1) > 0, np.argmax(votes, axis=1), NONE)


def evaluate_counts(counts, assignment, labels):
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty test set")
    pred = predict_from_counts(counts, assignment)
    confusion = np.zeros((N_CLASSES, N_CLASSES + 1), dtype=np.int64)  # last column: no prediction
    np.add.at(confusion, (labels, np.where(pred == NONE, N_CLASSES, pred)), 1)
    return Evaluation(float(np.mean(pred == labels)), confusion, pred, chance_level=assignment.silent)


def evaluate(net, assignment, images, labels):
    """Accuracy and confusion matrix with learning frozen."""
    if len(images) == 0:
        raise ValueError("empty test set")
    return evaluate_counts(response_counts(net, images, STREAM_TEST), assignment, labels)


def receptive_field_score(weights, shape=(28, 28)):
    """Mean lag-1 spatial autocorrelation of the per-neuron weight maps."""
    maps = np.asarray(weights).T.reshape(-1, *shape)
    maps = maps - maps.mean(axis=(1, 2), keepdims=True)
    var = (maps**2).mean(axis=(1, 2))
    right = (maps[:, :, 1:] * maps[:, :, :-1]).mean(axis=(1, 2))
    down = (maps[:, 1:, :] * maps[:, :-1, :]).mean(axis=(1, 2))
    r = 0.5 * (right + down) / np.where(var > 0, var, np.inf)
    return float(r.mean())


def receptive_field_baseline(n_input, n_exc, samples=30, seed=0):
    """Mean and standard deviation of the score over untrained Uniform(0, 1) weight sets."""
    rng = np.random.default_rng(seed)
    scores = [receptive_field_score(rng.random((n_input, n_exc))) for _ in range(samples)]
    return float(np.mean(scores)), float(np.std(scores, ddof=1))
