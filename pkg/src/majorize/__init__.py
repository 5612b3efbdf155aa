"""Majorization, Birkhoff decompositions on set families, and m-numerical ranges."""

from .errors import (
    BudgetExceeded,
    ClassMismatch,
    CompletionImpossible,
    DomainViolation,
    EmptySequence,
    Infeasible,
    MajorizeError,
    MalformedFamily,
    NotApplicable,
    NotDoublyStochastic,
    PreconditionFailed,
)
from .sequences import SeqDescriptor, Tail, q_membership, hat_extension, partial_sum_max, partial_sum_min
from .graphs import SetFamily, check_g1, check_g2, check_g3, extreme_split, validate_stochastic
from .birkhoff import approximate_decompose, decompose_family, decompose_finite
from .schur_horn import extreme_in_Sxm, realize_diagonal, sr_membership
from .numrange import (
    OperatorModel,
    classify_exposed,
    classify_extreme_Q,
    classify_extreme_sigma,
    generating_sequence,
    lambda_e,
    range_membership,
)

__version__ = "0.1.0"
