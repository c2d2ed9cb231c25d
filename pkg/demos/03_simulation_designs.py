"""The built-in data generating processes and what makes each one hard.

Writes a plot-ready CSV of latent probability curves along x1 showing the
qualitative difference between the strong design (non-monotone curves, a
signature of strong label interdependencies) and the weak design (all
curves monotone).
"""

import numpy as np

from ccn.io import write_matrix_csv
from ccn.model import n_free_params
from ccn.numkit import spawn_rng
from ccn.simgen import BUILTIN_DESIGNS, builtin_design, generate, \
    latent_probability_curves

print(f"{'design':>12s} {'labels':>6s} {'params':>6s} {'realization':>13s} "
      f"{'transform':>15s}")
for name in BUILTIN_DESIGNS:
    d = builtin_design(name)
    k = n_free_params(d.n_labels, d.n_features)
    print(f"{name:>12s} {d.n_labels:>6d} {k:>6d} {d.realization:>13s} "
          f"{d.post_transform:>15s}")

print("\nlabel frequencies over 20000 draws:")
for name in ("strong", "weak", "sequential"):
    d = builtin_design(name)
    ds, _ = generate(d, spawn_rng(0), n=20_000)
    freq = np.round(ds.Y.mean(axis=0), 3)
    print(f"{name:>12s} {freq}")

grid = np.linspace(-5.0, 5.0, 101)
curves = []
for name in ("strong", "weak"):
    P = latent_probability_curves(builtin_design(name), grid)
    curves.append(P)
table = np.column_stack([grid] + curves)
header = (["x1"]
          + [f"strong_p{l + 1}" for l in range(curves[0].shape[1])]
          + [f"weak_p{l + 1}" for l in range(curves[1].shape[1])])
write_matrix_csv("latent_probability_curves.csv", header, table)
print("\nwrote latent_probability_curves.csv "
      "(plot p columns against x1 to see the monotonicity contrast)")

for name, P in zip(("strong", "weak"), curves):
    mono = [bool(np.all(np.diff(P[:, l]) >= -1e-12)
                 or np.all(np.diff(P[:, l]) <= 1e-12))
            for l in range(P.shape[1])]
    print(f"{name}: per-label monotone along x1 -> {mono}")
