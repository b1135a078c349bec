"""Analyze with one perturbed Haar family, synthesize with another."""
from haarstab.lab.experiments import ExperimentConfig, execute

r = execute(ExperimentConfig("corollary3-reconstruct", dim=2, resolution=8, n_min=-3, trials=5))
for row in r.rows:
    print(f"eta={row['eta']:.4f} delta={row['delta']:.3f} "
          f"analysis ratio={row['analysis_ratio']:.3f} rel_error={row['rel_error']:.3f} "
          f"(bound {row['error_bound']:.3f})")
print("passed:", r.passed)
