# %% [markdown]
# # Sparse filters on binary digits
#
# Train a 100-unit shrink auto-encoder on binarized MNIST digits and export
# its decoder columns as a tiled image.
#
# Usage: python demos/05_digit_filters.py path/to/train-images-idx3-ubyte [n]

# %%
import sys
from pathlib import Path

from satae import analysis, data, nonlin, train
from satae.train import TrainConfig

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
path = sys.argv[1]
n = int(sys.argv[2]) if len(sys.argv) > 2 else 5000

ds = data.load_idx(path)
ds = data.Dataset(ds.samples[:n], image_shape=ds.image_shape)
# per-dimension scaling blows up rarely-lit border pixels; use one scalar
ds = data.normalize(data.binarize(ds), "global")

# %%
f = nonlin.shrink(1.0)
cfg = TrainConfig(lr=1e-3, alpha_schedule=train.make_schedule(1.0, 0.1, 1))
p, log = train.train(f, ds, 100, cfg, on_epoch=lambda _, r: print(
    f"alpha={r.alpha:.1f} recon={r.recon_mean:.2f} sat_frac={r.sat_frac:.3f}"))
print("final saturation fraction", analysis.saturation_fraction(p, f, ds))

# %%
analysis.tile_filters(p, 28, 28).write(out / "digit_filters.pgm")
