"""Higher-order weighted reduced Bergman kernels and kernel functions on
planar domains, with closed-form oracles and exhaustion experiments."""

__version__ = "0.1.0"

from .errors import DkernError  # noqa: E402
from .domains import (Annulus, Constant, Disc, DiscPower, RadialPower, Sampled, SampledRegion,  # noqa: E402
                      check_admissibility, make_domain, make_weight)
from .quadrature import area_quadrature, integrate_area, integrate_path, path_build  # noqa: E402
from .basis import build_orthonormal_basis, generate_basis, gram_matrix, orthonormalize  # noqa: E402
from .kernel import (build_evaluator, diagonal_jets, higher_order_kernel, kernel_function_M,  # noqa: E402
                     M_mixed_partial, M_partials, reduced_kernel, reproduce_check, zero_set_probe)
from .ramadanov import (ExhaustionSpec, GrowingAnnuli, GrowingDiscs, WeightRamp, deviation_sup,  # noqa: E402
                        run_exhaustion)

__all__ = [
    "DkernError", "Disc", "Annulus", "SampledRegion", "Constant", "RadialPower", "DiscPower", "Sampled",
    "make_domain", "make_weight", "check_admissibility", "area_quadrature", "integrate_area", "integrate_path",
    "path_build", "generate_basis", "gram_matrix", "orthonormalize", "build_orthonormal_basis",
    "build_evaluator", "reduced_kernel", "diagonal_jets", "zero_set_probe", "higher_order_kernel",
    "kernel_function_M", "M_partials", "M_mixed_partial", "reproduce_check", "ExhaustionSpec", "GrowingDiscs",
    "GrowingAnnuli", "WeightRamp", "deviation_sup", "run_exhaustion",
]
