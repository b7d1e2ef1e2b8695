"""Last passage percolation, nonintersecting walks and Airy line ensemble numerics."""
from ._accel import BACKEND, HAVE_NUMBA, backend
from .environments import (EnvKind, LineField, PointField, WeightGrid, coupled_grids_batch,
                           line_field_from_points, sample_coupled_grids, sample_line_field,
                           sample_point_field, sample_weight_grid, sample_weight_grids)
from .errors import (AirylabError, ArgumentError, ConfigError, DomainError, InvariantError,
                     NumericError, RangeError, SizeError)
from .kernels import (KernelQuery, QuadConfig, airy_function, airy_kernel, airy_kernel_matrix,
                      conjugated_kernel, prelimit_kernel, scale_divergence, stationary_kernel)
from .lpp import (PassageProfile, passage_planar, passage_profile_bruteforce,
                  passage_profile_continuous, passage_profile_rsk)
from .scaling import ModelTag, ScalingParams, arctic_curve, rescale_ensemble, scaling_params
from .stats import (EmpiricalLaw, FredholmConfig, counting_intensity_check, empirical_compare,
                    tracy_widom_cdf, tv_distance)
from .walks import (WalkEnsemble, ZigzagGraph, ni_rejection_batch, sample_ni_geometric,
                    sample_ni_rejection, shear_to_bernoulli, unshear_to_geometric)

__version__ = "0.1.0"
