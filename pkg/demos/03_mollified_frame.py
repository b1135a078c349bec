"""Mollified Haar functions: support, where they still equal h, and the AO norm."""
import json

from haarstab.gridfn import Mesh, MollifierSpec
from haarstab.lab.experiments import mollified_frame_report

mesh = Mesh.default(1, 8)
for kernel in ("box", "bump"):
    for eta in (1 / 16, 1 / 8):
        psi = MollifierSpec.box() if kernel == "box" else MollifierSpec.bump()
        r = mollified_frame_report(1, eta, psi, mesh, points=500)
        keep = {k: r[k] for k in ("members", "skipped", "outside_cells", "equality_radius",
                                  "ao_norm", "self_similarity")}
        print(kernel, eta, json.dumps(keep))
# equality_radius is in units of eta l(Q); the kernel reaches exactly that far
