"""Haar systems under small affine perturbations, on uniform grids."""
from .affine import AffinePerturbation, FactorizationError, inf_norm, lu_factor, telescope
from .dyadic import DomainError, DyadicCube, HaarIndex, enumerate_window, haar_eval
from .frames import (FamilySpec, GramSummary, NumericalError, bessel_bound, gram_matrix,
                     gram_summary, haar_family, schur_diagnostic)
from .gridfn import (AlignmentError, GridFunction, Mesh, MollifierSpec, ResolutionError,
                     WindowOverflowError, from_haar, mollify, perturb)

__version__ = "0.1.0"
