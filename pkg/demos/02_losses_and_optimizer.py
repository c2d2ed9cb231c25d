"""The loss toolbox and the quasi-Newton engine underneath every fit.

First the per-label losses and the effect of the aggregation exponent q;
then the BFGS engine on a classic curved valley, and on the network loss
itself where the analytic gradient (backward recursion through the chain)
is checked against finite differences.
"""

import numpy as np

from ccn.model import (
    LossSpec,
    ModelParams,
    gradient,
    loss,
    pack_params,
    per_label_loss,
    unpack_params,
)
from ccn.optimizer import minimize

print("per-label losses at p for a positive label (y = 1):")
specs = {
    "bce": LossSpec(kind="bce"),
    "focal xi=2": LossSpec(kind="focal", xi_plus=2.0, xi_minus=2.0),
    "asymmetric 1/3": LossSpec(kind="asymmetric", xi_plus=1.0, xi_minus=3.0),
}
grid = [0.1, 0.3, 0.5, 0.7, 0.9]
print(f"{'loss':>16s} " + " ".join(f"p={p:<5.1f}" for p in grid))
for name, spec in specs.items():
    row = " ".join(f"{per_label_loss(spec, 1, p):7.3f}" for p in grid)
    print(f"{name:>16s} {row}")

# larger q emphasizes the worst-predicted label of each observation
rng = np.random.default_rng(0)
params = ModelParams(rng.normal(size=3), rng.normal(size=(3, 2)),
                     np.tril(rng.normal(size=(3, 3)), -1))
X = rng.normal(size=(50, 2))
Y = (rng.random((50, 3)) < 0.5).astype(float)
print("\naggregated loss as q grows (fixed parameters):")
for q in (1.0, 2.0, 5.0, 16.0, 64.0):
    spec = LossSpec(kind="bce", q=q, lam=0.0)
    print(f"  q={q:<5g} loss={loss(params, X, Y, spec, 'sigmoid'):.4f}")

# the optimizer on the Rosenbrock valley
def rosenbrock(x):
    f = (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    g = np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2),
                  200 * (x[1] - x[0] ** 2)])
    return f, g

res = minimize(rosenbrock, np.array([-1.2, 1.0]))
print(f"\nRosenbrock: {res.status} after {res.iterations} iterations, "
      f"x = {np.round(res.x, 6)}")

# the analytic chain gradient against central finite differences
spec = LossSpec(kind="bce", q=1.5, lam=0.01)
db, dW, dC = gradient(params, X, Y, spec, "sigmoid")
analytic = pack_params(ModelParams(db, dW, np.tril(dC, -1)))
x0 = pack_params(params)
numeric = np.zeros_like(x0)
for i in range(x0.size):
    xp, xm = x0.copy(), x0.copy()
    xp[i] += 1e-6
    xm[i] -= 1e-6
    numeric[i] = (loss(unpack_params(xp, 3, 2), X, Y, spec, "sigmoid")
                  - loss(unpack_params(xm, 3, 2), X, Y, spec, "sigmoid")) / 2e-6
print(f"gradient vs finite differences, max abs gap: "
      f"{np.abs(analytic - numeric).max():.2e}")
