# %% [markdown]
# # A global minimizer for saturated-linear units on binary data
#
# With inputs in {-1, +1}^d, the encoder 10*I pushes every unit into a flat
# tail and the decoder I copies the saturated value back. Reconstruction is
# perfect and the penalty is 0, so nothing can do better.

# %%
import numpy as np

from satae import analysis, model, nonlin, train
from satae.data import Dataset
from satae.model import ModelParams
from satae.train import TrainConfig

d = 8
x = np.random.default_rng(0).choice([-1.0, 1.0], (200, d))
f = nonlin.satlin(1.0)
p = ModelParams(10 * np.eye(d), np.zeros(d), np.eye(d), np.zeros(d))

print(model.loss(p, f, 1.0, x))
print("saturated fraction", analysis.saturation_fraction(p, f, x))

# %%
# the gradient is exactly zero there, so SGD does not move
q, _ = train.train(f, Dataset(x), d, TrainConfig(alpha_schedule=[(1.0, 5)], tied=False), params=p)
print("max change after 5 epochs:", max(np.abs(a - b).max() for a, b in zip(q.arrays(), p.arrays())))
