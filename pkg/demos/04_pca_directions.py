# %% [markdown]
# # Linear auto-encoders find the principal subspace
#
# A linear auto-encoder with 3 hidden units trained on anisotropic Gaussian
# data ends up spanning the top-3 principal directions.

# %%
import numpy as np

from satae import analysis, nonlin, train
from satae.data import Dataset
from satae.train import TrainConfig

rng = np.random.default_rng(0)
q, _ = np.linalg.qr(rng.normal(size=(10, 10)))
var = 4.0 * 0.5 ** np.arange(10)
ds = Dataset((np.random.default_rng(1).normal(size=(2000, 10)) * np.sqrt(var)) @ q.T)

# %%
# constant-rate SGD plateaus at its noise floor; lowering the rate in
# warm-started phases removes it
p = None
oracle = analysis.projector_basis(analysis.pca_projector(ds, 3), 3)
for lr, epochs in ((0.005, 30), (0.001, 20), (0.0002, 20)):
    p, _ = train.train(nonlin.linear(), ds, 3, TrainConfig(lr=lr, alpha_schedule=[(0.0, epochs)]), params=p)
    angles = analysis.principal_angles(p.dec_weight, oracle)
    print(f"lr={lr:<7} largest principal angle {angles.max():.2e} rad")
