"""rigidlab: numerical verification of geometric rigidity on variable
domains — cube-lattice thickening, per-cube rotation fitting, curvature
functionals, and elastic energy linearization experiments."""

from . import kernels
from .geometry import (Curve, NormPhi, PlanarRegion, blob_curve, circle_curve,
                       curves_from_json, ellipse_curve, euclidean_norm,
                       l1_norm, linf_norm)
from .lattice import Box, CubeLattice, CubicSet, connected_components, cubes_meeting
from .mesh import SurfaceMesh, icosphere, read_off, read_stl_binary, torus_mesh
from .rigidity import (ChainRigidityResult, DeformationField, RigidityReport,
                       best_rotation, chain_rigidity, cube_rigidity,
                       dirichlet_pin, dist_SO, poincare_fit,
                       verify_variable_domain_rigidity)
from .surface import (anisotropic_perimeter, curvature_integral,
                      curve_lower_bound_check, gauss_bonnet_defect,
                      mean_curvature_integral, slicing_check, surface_energy)
from .thickening import (ThickeningParams, ThickeningReport,
                         classify_boundary_cubes, classify_line,
                         local_thicken_2d, thicken, thicken_graph)
from .energies import (W1, W2, EnergyDensity, F_delta_eval, F_zero_eval,
                       G_delta_eval, G_zero_eval, LimitDisplacement,
                       QuadraticForm, Schedule, lower_bound_gap,
                       schedule_check, taylor_residual)
from .instances import (ExampleInstance, gen_ball, gen_graph_film,
                        gen_sharp_stripes, gen_spiky_set, gen_thin_tunnel)

__version__ = "0.1.0"
