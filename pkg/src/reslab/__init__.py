"""Resonance laboratory for half-line semiclassical Schrodinger operators."""

from .errors import (BadCutoffError, BoundaryZeroError, CompletenessError,
                     ConfigError, DomainError, HypothesisError,
                     IsolationError, NearResonanceError, RefinementError,
                     ReslabError, ResolutionError, StiffnessError, StripError,
                     WindingError)
from .models import (FrequencyWindow, PotentialModel, WeightFunction,
                     builtin_model, eval_coefficients, make_weight,
                     model_from_config, model_from_json, model_to_config,
                     model_to_json, validate_decay)
from .numerics import Grid
from .free_resolvent import (m_kernel, r0_kernel_halfline, r0_kernel_line,
                             r0_norm_fit, reflection_identity_residual,
                             verify_m_decay, weighted_r0_norm)
from .continuation import (JostSolution, MatchingDeterminant, RegularSolution,
                           integrate_jost, regular_solution, residue_order,
                           resolvent_apply, wronskian, wronskian_batch,
                           wronskian_value)
from .search import (Resonance, blaschke_lower_bound, find_zeros,
                     jensen_zero_bound, refine_zero, scan_resonances,
                     winding_count, wronskian_handle)
from .quasimodes import (EigenPair, Quasimode, QuasimodeFamily,
                         build_quasimode, dirichlet_eigensolve,
                         independence_check)
from .resolvent_norm import (AprioriFit, NormScan, apriori_bound_check,
                             max_principle_check, resonance_free_bound_transfer,
                             scan_norms, weighted_resolvent_norm)
from .complex_utils import (AnalyticHandle, ContourSpec, cauchy_riemann_residual,
                            circle_contour, contour_integral, rectangle_contour,
                            seeded_function_family)

__version__ = "0.1.0"
