"""Haar functions on a grid, their Gram matrix, and what a small shift does."""
import numpy as np

from haarstab.affine import AffinePerturbation
from haarstab.dyadic import DyadicCube, HaarIndex, enumerate_window
from haarstab.frames import FamilySpec, bessel_bound, gram_matrix, haar_family
from haarstab.gridfn import Mesh, from_haar, l2_norm, perturb

mesh = Mesh.default(1, 8)   # cells of side 1/256 on [-1, 2)
ix = HaarIndex(DyadicCube(-2, (1,)), 1)   # lives on [1/4, 1/2)
h = from_haar(ix, mesh)
print("support cells", h.start, h.data.shape, "norm", l2_norm(h))

# the window family is orthonormal
fam = haar_family(enumerate_window(1, 0, -5), mesh)
g = gram_matrix(fam).toarray()
print(len(fam), "members, max |G - I| =", np.abs(g - np.eye(len(fam))).max())

# shift by eta l(Q): jumps of 2, 4, 2 each sweep a strip of width eta/4,
# so ||h - h~||^2 = (4 + 16 + 4) eta / 4
for eta in (1 / 64, 1 / 16, 1 / 4):
    p = AffinePerturbation(np.eye(1), [eta], eta)
    diff = h - perturb(h, ix.cube, p)
    print(f"eta={eta:<8} ||h - h~|| = {l2_norm(diff):.4f}   sqrt(6 eta) = {np.sqrt(6 * eta):.4f}")

# shifting every member at once: the AO norm of the differences
# (sqrt of the top Gram eigenvalue) also grows like eta^(1/2)
for eta in (1 / 64, 1 / 16):
    perts = {c: AffinePerturbation(np.eye(1), [eta], eta) for c in {i.cube for i in fam.labels}}
    diffs = fam - FamilySpec([perturb(m, i.cube, perts[i.cube]) for m, i in zip(fam.members, fam.labels)])
    print(f"eta={eta}: AO norm {bessel_bound(diffs)[1]:.4f}")
