"""hessianlab: a numerical laboratory for complex m-Hessian equations.

Gamma-cone algebra, metric-relative Hermitian eigenproblems, periodic
finite-difference complex Hessians, a continuity-method Newton solver for
the exponential-type and normalized equations, penalized m-subharmonic
envelopes, and randomized verification of the pointwise cone inequalities.
"""

from .envelope import EnvelopeReport, contact_set, msh_envelope
from .errors import ConeBreachError, InputError, LinearSolveError
from .experiments import manufactured_problem, manufactured_terms, mms_study
from .geometry import (
    MetricField,
    ScalarField,
    TorusGrid,
    analytic_complex_hessian,
    complex_hessian,
    gradient_sup,
    make_field,
    read_field,
    write_field,
)
from .hermlin import (
    Spectrum,
    eigenvalues_hermitian,
    generalized_eigenvalues,
    is_m_positive,
)
from .hessop import (
    LinearizationField,
    OperatorValue,
    apply_linearization,
    linearization,
    mixed_product,
    polarization_constant,
    sigma_m,
    sigma_of_form,
)
from .inequalities import (
    DecayReport,
    MaxPrincipleReport,
    StabilityRecord,
    check_max_principle,
    laplacian_gradient_ratio,
    lp_norm,
    stability_sweep,
    sublevel_volume_decay,
)
from .solver import (
    KrylovInfo,
    NormalizedReport,
    SolveReport,
    SolverConfig,
    krylov_solve,
    solve_exponential,
    solve_normalized,
)
from .symfunc import (
    ConeReport,
    ConeSuiteReport,
    elementary_symmetric,
    in_cone,
    reduced_symmetric,
    sample_cone,
    symmetric_gradient,
    verify_cone_inequalities,
)

__version__ = "0.1.0"
