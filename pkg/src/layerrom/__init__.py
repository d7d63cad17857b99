"""Low-term parameter-to-solution maps for layered diffusion problems.

The diffusion coefficient is constant in each of N mirror-symmetric vertical
layers.  The solution map over the coefficient vector splits into a handful
of parameter-independent fields with explicit scalar weights plus a small
parameter-dependent slow system, built from a subdomain-interface splitting
and an SVD truncation of the interface coupling.
"""

__version__ = "0.1.0"

from . import analytic, decomposition, fem, mesh, rom, slowfast
from .decomposition import Decomposition, HarmonicExtension, InterfaceCoupling
from .errors import InvalidInputError, NumericalError
from .fem import (LayerStiffness, LoadVector, assemble_layer_stiffness,
                  assemble_load, energy_inner, energy_norm, solve_full,
                  solve_patch_dirichlet)
from .mesh import (DofPartition, LayeredDomain, LayerProfile, Mesh,
                   build_template_layer, classify_dofs, load_profile,
                   read_mesh, reflect_and_tile, write_mesh)
from .rom import (ErrorReport, NWidthBound, ReducedModel, RomSolution,
                  TwoLayerMap, build_rom, evaluate, nwidth_bound,
                  relative_error, sweep, two_layer_exact)
from .slowfast import (InterfaceSvd, SlowFastBasis, build_slow_fast_basis,
                       choose_ranks, compute_svd, interface_svds,
                       rayleigh_interaction, solve_fast)
