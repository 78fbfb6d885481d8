# %% [markdown]
# # Energy landscape on a 2-D toy manifold
#
# Train a 10-unit shrink auto-encoder on points from a half circle, with and
# without the saturation penalty, and write the reconstruction energy over
# the square as PGM images (black = low energy).

# %%
from pathlib import Path

import numpy as np

from satae import analysis, data, nonlin, train
from satae.train import TrainConfig

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

raw = data.gen_toy("arc", 500, seed=0)
ds = data.normalize(raw)
f = nonlin.shrink(1.0)

# %%
# init_scale 1 so units start outside the dead zone [-1, 1]
sched = train.make_schedule(0.3, 0.1, 30)
reg, log = train.train(f, ds, 10, TrainConfig(alpha_schedule=sched, init_scale=1.0))
base, _ = train.train(f, ds, 10, TrainConfig(alpha_schedule=[(0.0, 120)], init_scale=1.0))

for alpha in sorted(set(log.column("alpha"))):
    rows = log.column("alpha") == alpha
    print(f"alpha={alpha:.1f}  recon={log.column('recon_mean')[rows][-1]:.4f}  "
          f"sat_frac={log.column('sat_frac')[rows][-1]:.3f}")

# %%
# grids in normalized coordinates covering the raw [-1, 1]^2 box
lo = (np.array([-1.0, -1.0]) - ds.mean) / ds.std
hi = (np.array([1.0, 1.0]) - ds.mean) / ds.std
bounds = (lo[0], hi[0], lo[1], hi[1])
for name, p in (("regularized", reg), ("unregularized", base)):
    g = analysis.energy_grid(p, f, bounds, 128)
    g.write_pgm(out / f"energy_{name}.pgm", log_scale=True)
    on = (data.gen_toy("arc", 500, seed=1).samples - ds.mean) / ds.std
    off = (data.uniform_box(500, seed=2).samples - ds.mean) / ds.std
    print(f"{name:14s} contrast ratio {analysis.contrast_ratio(p, f, on, off):.2f}")
