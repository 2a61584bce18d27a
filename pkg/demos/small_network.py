"""Train a 20-neuron lateral-inhibition network on a few hundred digits.

Uses the MNIST IDX files under data/mnist (or SPINSNN_MNIST); falls back
to a synthetic four-bar task when they are absent.  Takes a couple of minutes.
"""
# %%
import os
from pathlib import Path

import numpy as np

from spinsnn import network as nw
from spinsnn.io import idx, pgm

root = Path(os.environ.get("SPINSNN_MNIST", "data/mnist"))
if (root / idx.TRAIN_IMAGES).exists():
    x, y = idx.load_mnist(root, "train")
    xt, yt = idx.load_mnist(root, "test")
    train, assign, test = (x[:300], y[:300]), (x[300:800], y[300:800]), (xt[:200], yt[:200])
else:
    print("MNIST not found, using bars")
    labels = np.arange(600) % 4
    imgs = np.zeros((600, 28, 28), dtype=np.uint8)
    for k, c in enumerate(labels):
        imgs[k, c * 7:c * 7 + 4, :] = 255
    train, assign, test = (imgs[:200], labels[:200]), (imgs[200:400], labels[200:400]), (imgs[400:], labels[400:])

# %% Build and train
cfg = nw.SimConfig(n_exc=20, seed=1)
net = nw.build_network(cfg)
print(f"{net.topology.n_plastic} plastic synapses, receptive-field score {nw.receptive_field_score(net.weights):+.3f}")
net, stats = nw.train(net, train[0])
s = stats[-1]
print(f"{s.exc_spikes} exc spikes, {s.programming_events} programming events, "
      f"{s.supply * 1e9:.3f} nJ from the supply")
print(f"receptive-field score after training {nw.receptive_field_score(net.weights):+.3f}")

# %% Label the neurons, then classify held-out images by vote
assignment = nw.assign_classes(net, *assign)
print("neuron labels:", assignment.labels)
ev = nw.evaluate(net, assignment, *test)
print(f"accuracy {ev.accuracy:.3f}")

# %% Weight maps as PGM files
paths = pgm.emit_weight_maps(net.weights, Path("demo_maps"))
print(f"wrote {len(paths)} maps to demo_maps/")
