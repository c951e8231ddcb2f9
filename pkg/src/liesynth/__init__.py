"""Lie-algebraic control synthesis for a coupled nucleus-electron spin pair."""
from .closure import AlgebraElement, ClosureResult, Pulse, RealizableElement, ad_orbit, closure
from .control import (
    ControlBasis,
    ControlParams,
    build_control_basis,
    components_in_basis,
    optimize_params,
)
from .errors import (
    DegenerateBasisError,
    DimensionError,
    DomainError,
    NotInSpanError,
    NumericFailure,
    SamplePointError,
    UnrealizableStageError,
    ValidationError,
    WeiNormanBreakdown,
)
from .kernels import BACKEND
from .matrix_core import (
    Ad,
    ad,
    condition_number,
    devectorize,
    gram_determinant_16,
    independent_subset,
    mat_exp,
    mat_log_unitary,
    vectorize,
)
from .spin import GeneratorSet, NamedBasis, PhysicalConstants, entanglement_degree
from .synth import PulseSchedule, PulseStage, expand_recipe, simulate, synthesize
from .wei_norman import WeiNormanProblem, WeiNormanTrace, find_coordinates

__version__ = "0.1.0"
