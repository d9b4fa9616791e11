"""Separable Poisson structures: Jacobi verification, Casimirs, global Darboux reduction."""
from .casimir import CasimirFunction, CasimirSet, casimir_gradient_check, casimir_set, evaluate_casimir
from .charts import (
    Affine,
    ChartFunction,
    Constant,
    Custom,
    Exponential,
    Logistic,
    Power,
    chart_forward,
    chart_inverse,
    eval_phi,
    eval_phi_prime,
)
from .darboux import DarbouxTransform, build_darboux, forward_map, inverse_map, transformed_structure_check
from .dynamics import (
    PoissonSystem,
    Trajectory,
    conservation_report,
    darboux_consistency_check,
    integrate,
    poisson_system,
    vector_field,
)
from .exact_linalg import (
    CoefficientMatrix,
    congruence_apply,
    kernel_basis,
    skew_canonical_congruence,
)
from .models import instantiate, load_model_file
from .structure import (
    DomainBox,
    MatrixField,
    SeparableStructure,
    build_separable,
    eval_structure_matrix,
    jacobi_residual_analytic,
    jacobi_residual_fd,
    verify_field,
    verify_structure,
)

__version__ = "0.1.0"
