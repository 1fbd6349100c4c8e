"""Numerical laboratory for log-Hölder (H-log) function spaces."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AccuracyWarning,
    CoverageError,
    DomainError,
    FitError,
    HlogError,
    InvalidKernelError,
    ParameterError,
    PreconditionError,
    UnsupportedDimensionError,
    UnsupportedDomainError,
)
from .fields import (  # noqa: F401
    CutoffSpec,
    DomainSpec,
    ScalarField,
    build_cutoff,
    corpus,
    corpus_names,
    counterexample_field,
)
from .moduli import Modulus, SeminormReport, estimate_modulus, hlog_seminorm, seminorm_report  # noqa: F401
from .quadrature import QuadConfig  # noqa: F401
from .singular import SingularKernel, get_kernel, pv_convolve, validate_kernel  # noqa: F401
