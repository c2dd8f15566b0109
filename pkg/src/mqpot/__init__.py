"""Exact computer algebra for modulated quivers with potentials.

Symmetric algebras with trace, dualizing pairs of bimodules, truncated
complete tensor path algebras with the skew derivative calculus,
Jacobian ideals and algebras, split and skew reduction, mutation at a
point with its involution certificate, the valued-quiver shadow, and
generalized Ginzburg dg-algebras.
"""

from .scalar import Field, PrimeField, Rationals, RationalFunctions, field_from_spec
from .algebra import AlgebraError, SymmetricAlgebra, algebra_build
from .bimodule import (Bimodule, BimoduleError, DualizingPair, TensorBimodule,
                       bimodule_iso, bimodule_morphism_space, direct_sum,
                       dualize, extension_tensor_bimodule, identify_component,
                       morphism_dual, natural_bimodule, pair_tensor,
                       sub_bimodule, summand_complement)
from .pathalg import (PathAlgebra, PathElement, PathError, PathMorphism,
                      SplitTensor, TruncatedIdeal, format_element, grad_left,
                      grad_right, identity_morphism)
from .qp import (ModulatedQP, NotSplitError, QPError, ReductionResult,
                 SkewReductionResult, casimir_of_subpair, make_two_loop_free,
                 reduce_qp, reduction_certificate, skew_derivative_ideal,
                 skew_kernel_certificate, skew_reduce,
                 verify_weak_right_equivalence)
from .mutation import (MutationError, SemiMutationResult, involution_witness,
                       mutate, normalize_at, semi_mutate)
from .valued import (ValuedError, ValuedQuiver, common_sign,
                     is_skew_symmetrizable, matrix_mutate,
                     matrix_mutate_classical, matrix_to_vq,
                     underlying_valued_quiver, vq_mutate, vq_normal_form,
                     vq_to_matrix)
from .ginzburg import GinzburgDGA, GinzburgError
