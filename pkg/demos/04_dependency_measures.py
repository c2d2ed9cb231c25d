"""Four ways to ask "do these labels depend on each other?"

Label density and the correlation-based measures look only at Y; the
conditional score asks the sharper question: given the features, do the
other labels still help predict each label out of sample?  The contrast
between the probabilistic and sequential realizations of the same
parameters makes the distinction concrete: probabilistic draws are
conditionally independent given the features by construction, sequential
draws are not.
"""

from ccn.dependency import dependency_report
from ccn.numkit import spawn_rng
from ccn.simgen import SimDesign, builtin_design, generate

base = builtin_design("strong")
variants = {
    "strong / probabilistic": base,
    "strong / sequential": SimDesign("strong-seq", base.params, base.sigma,
                                     realization="sequential"),
    "weak / probabilistic": builtin_design("weak"),
}

print(f"{'dataset':>24s} {'density':>8s} {'label dep':>10s} "
      f"{'uncond':>7s} {'conditional':>12s}")
for name, design in variants.items():
    ds, _ = generate(design, spawn_rng(5), n=400)
    rep = dependency_report(ds, metric="hamming", seed=1)
    dep = "n/a" if rep.label_dependency is None \
        else f"{rep.label_dependency:.3f}"
    print(f"{name:>24s} {rep.label_density:8.3f} {dep:>10s} "
          f"{rep.unconditional_dependency:7.3f} "
          f"{rep.conditional_dependency:+12.4f}")

print(
    "\nreading: the unconditional measure flags pairwise correlation in all"
    "\nthree datasets, but only the sequential realization carries label"
    "\ninformation that survives conditioning on the features, and only"
    "\nthere does the conditional score move far from zero."
)
