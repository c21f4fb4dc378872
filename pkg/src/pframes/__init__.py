"""p-frames relative to bounded b-linear functionals in finite-dimensional n-normed spaces."""

__version__ = "0.1.0"

from .errors import (
    DegenerateInputError,
    DegenerateSpaceError,
    InputError,
    NotAFrameError,
    NumericError,
    PFrameError,
    PreconditionError,
    UnboundedFunctionalError,
)
from .frames import (
    FrameBounds,
    PFrameFamily,
    ProductFamily,
    ProductSpace,
    QDualFamily,
    analysis_sequence,
    canonical_dual,
    cartesian_product,
    frame_sum,
    is_p_bessel,
    is_p_frame,
    linear_combination,
    optimal_bounds,
    parseval_rescale,
    product_bounds,
    q_frame_bounds,
    reconstruct,
    scale_family,
    sum_families,
    synthesis_apply,
    synthesis_norm,
)
from .functionals import (
    BFunctional,
    dual_norm_identity_check,
    evaluate,
    functional_norm,
    functional_norm_estimate,
    make_functional,
)
from .nspace import AnchorTuple, NSpace, anchored_seminorm, gram_volume, n_norm, project_complement
from .optimizer import (
    BatchObjective,
    ExtremumResult,
    OptimizerConfig,
    PowerSum,
    SphereProblem,
    lp_operator_norm,
    sphere_extremum,
)
