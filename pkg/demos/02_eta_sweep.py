"""AO norm of perturbed-minus-original Haar families against eta, on a log-log fit.

The slope should sit near 1/2.  The mesh has to resolve eta l(Q) for the
smallest eta and the smallest cube, otherwise the small-eta perturbations
round away and the fit steepens; the last run shows that on purpose.
"""
from haarstab.lab.scenarios import UnderflowError, sweep_eta

etas = [2.0 ** -m for m in range(8, 2, -1)]

runs = [
    ("translation", 1, 8, (-1.0, 2.0), -6),
    ("adversarial-1d", 1, 8, (-1.0, 2.0), -6),
    ("mollified-box", 1, 8, (-1.0, 2.0), -6),
    ("shear", 2, 10, (-0.5, 1.5), -2),
    ("diagonal", 2, 6, (-1.0, 2.0), -3),   # too coarse
]
for scenario, d, J, window, nmin in runs:
    try:
        r = sweep_eta(scenario, etas, d, J, nmin, window=window)
    except UnderflowError as exc:
        print(scenario, "underflow:", exc)
        continue
    norms = " ".join(f"{a:.3f}" for a in r.ao_norms)
    print(f"{scenario:15s} d={d} J={J:2d}  slope {r.fit.slope:.3f}  C_meas {r.c_meas:.2f}  [{norms}]")
