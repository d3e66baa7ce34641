"""Certificate-checked splitting solvers for monotone inclusion problems.

Solves 0 in T(x) for maximal monotone T on R^n. The generic driver
accepts relative-error proximal steps backed by explicit certificates
(y, v, eps) and verifies the acceptance inequality online;
forward-backward, the corrected forward-backward method and the
extragradient projection method plug in as certificate oracles.
"""

from .enlargement import (
    Certificate,
    ProbeVerdict,
    check_certificate,
    combine_sum,
    scale_certificate,
    transport_cocoercive,
)
from .errors import (
    BasePointMismatch,
    CapabilityError,
    CertificateRejected,
    DimensionError,
    OracleError,
    SingularSolveError,
    SolverError,
    ValidationError,
)
from .fejer import FejerReport, p1_monitor, p2_counterexample, quasi_fejer_check
from .hpe import (
    ErrorSchedule,
    HpeConfig,
    SigmaReport,
    SolveTrace,
    StepRecord,
    check_sigma_resolvent,
    exact_prox_oracle,
    hpe_solve,
    make_error_schedule,
    step_residual,
)
from .operators import (
    Affine,
    Capability,
    GradQuadratic,
    MonotoneOp,
    NormalConeBall,
    NormalConeBox,
    Scaled,
    SubdiffL1,
    Sum,
    as_vector,
    graph_sample,
    make_operator,
    soft_threshold,
)
from .problems import (
    Problem,
    get_problem,
    make_affine_box_vi,
    make_quadratic_l1,
    make_rotation_vi,
    reference_residual,
    solve_box_vi_active_set,
)
from .splittings import (
    SplitProblem,
    default_sigma,
    fb_step,
    korpelevich_step,
    make_oracle,
    staged_step_with_errors,
    tseng_step,
)

__version__ = "0.1.0"
