# %% [markdown]
# # Complementary functions
#
# Every activation with a flat region gets a penalty that measures the
# distance of a pre-activation to that region. For the piecewise-linear
# activations the distance has a closed form. For anything else it can be
# estimated from |f'| by averaging its variation over many scales.

# %%
import numpy as np

from satae import nonlin
from satae.cli import comp_table

z = np.linspace(-3, 3, 13)
for f in (nonlin.shrink(1.0), nonlin.relu(), nonlin.satlin(1.0)):
    print(f"{f.kind:18s} S = {nonlin.saturation_set(f).intervals}")
    print("   f  ", np.round(nonlin.eval(f, z), 2))
    print("   f_c", np.round(nonlin.eval_comp(f, z), 2))

# %% [markdown]
# Shrink and relu penalties are just |f(z)|, so the penalty is an L1
# penalty on the code.

# %%
f = nonlin.shrink(1.0)
assert np.array_equal(nonlin.eval_comp(f, z), np.abs(nonlin.eval(f, z)))

# %% [markdown]
# The numeric construction applied to satlin reproduces the flat tails
# exactly. Inside the knees it is concave, not the straight tent of the
# closed form.

# %%
zz, exact = comp_table("satlin", 1.0, -2.0, 2.0, 0.25)
_, numeric = comp_table("satlin", 1.0, -2.0, 2.0, 0.25, numeric=True)
print(" z      exact  numeric")
for a, b, c in zip(zz, exact, numeric):
    print(f"{a:5.2f}  {b:6.3f}  {c:6.3f}")

# %% [markdown]
# For x^3 the derivative vanishes only at 0, yet the multi-scale average
# keeps the penalty positive there: an isolated zero of f' is not a plateau.

# %%
zz, fc = comp_table("cubic", 1.0, -1.0, 1.0, 0.25)
print("cubic f_c:", np.round(fc, 3))
