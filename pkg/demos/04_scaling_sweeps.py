"""How the tuned parameters move as the ensemble grows.

Runs the two canned scaling suites at desk scale with a reduced trial
count, prints the tuned shrinkage weight and taper length for each
ensemble size, and fits the power laws the suites are built around:
the weight decays like 1/n, and the taper length grows, following its
family's exponent on the heavy-tailed reference model.

The same suites are available from the command line:

    covloc sweep hybrid-scaling --scale ci --trials 50 --out out/hybrid
    covloc sweep schur-scaling  --scale ci --trials 50 --out out/schur

Run with ``python demos/04_scaling_sweeps.py`` (about a minute).
"""
from covloc import KernelFamily, ModelLabel, experiment_suite

TRIALS = 50
SIZES = (10, 20, 40, 80, 160)

print("tuned shrinkage weight vs ensemble size (desk scale,"
      f" {TRIALS} trials)")
hybrid = experiment_suite(
    "hybrid-scaling", scale="ci", trials=TRIALS, ensemble_sizes=SIZES,
    threads=4,
)
print(f"{'model':24s} {'weights over n = ' + str(list(SIZES)):44s}"
      f" {'1/n fit c':>9s} {'r^2':>6s}")
for label, fit in hybrid.fits.items():
    optima = [float(o) for o in hybrid.sweeps[label].optimal_parameter]
    cells = " ".join(f"{o:5.2f}" for o in optima)
    print(f"{label.value:24s} {cells:44s} {fit.coefficient:9.3f}"
          f" {fit.r_squared:6.3f}")

print()
print("tuned taper length vs ensemble size")
schur = experiment_suite(
    "schur-scaling", scale="ci", trials=TRIALS, ensemble_sizes=SIZES,
    threads=4,
)
print(f"{'model/taper':34s} {'lengths over n':34s} {'fit form':>9s}"
      f" {'r^2':>6s}")
for (label, kernel), fit in schur.fits.items():
    optima = [c.optimal_parameter for c in schur.curves[(label, kernel)]]
    cells = " ".join(f"{o:5.1f}" for o in optima)
    name = f"{label.value}/{kernel.value}"
    print(f"{name:34s} {cells:34s} {fit.exponent_form.value:>9s}"
          f" {fit.r_squared:6.3f}")

print()
reference = ModelLabel.SINGLE_SCALE_LAPLACIAN
print("The taper-family exponents are read off the heavy-tailed reference")
print("model, the one whose tuned lengths reach the asymptotic regime on")
print("a 50-point ring:")
for kernel in (KernelFamily.LAPLACIAN, KernelFamily.GAUSSIAN):
    fit = schur.fits[(reference, kernel)]
    print(f"  {kernel.value:9s} taper: {fit.exponent_form.value:8s}"
          f" c = {fit.coefficient:.3f}, r^2 = {fit.r_squared:.3f}")
