"""
fockbench: a numerical workbench for row contractions on truncated Fock spaces.

Builds characteristic functions and Poisson kernels of row contractions,
the automorphisms of the unit ball acting on them through Redheffer
products, and seeded verification suites for the resulting transport laws.
"""

from .autgroup import (
    FockAutomorphism,
    JUnitary,
    UnitaryForm,
    implementing_unitary,
    junitary_form,
    make_junitary,
    phi,
    unitary_form,
)
from .config import WorkbenchSettings, get_settings, load_settings, set_settings
from .constrained import (
    ConstraintSubspace,
    explicit_subspace,
    ideal_subspace,
    symmetrizer,
    theorem62_residuals,
)
from .exceptions import (
    ConfigurationError,
    ConstraintError,
    ContractionError,
    FockBenchError,
    IntertwinerError,
    ReportError,
    SpaceMismatchError,
    StructureError,
    ValidationError,
    WellPosednessError,
)
from .fock import TruncatedFock, creation_matrix, flip_matrix, fock_dim, nu_lambda
from .models import CheckRecord, MobiusDemo, Report, ReportHeader, RunConfig
from .redheffer import BlockSystem2x2, alpha, redheffer_product
from .report import emit_report, load_report
from .rowcon import MultianalyticMatrix, RowContraction, char_function, poisson_kernel
from .suite import VerificationSuite, demo_mobius, run_suite
from .transform import (
    apply_automorphism,
    apply_inverse_automorphism,
    defect_intertwiners,
    theorem51_residuals,
)
from .words import Word, enumerate_words, index_of, word, word_at

__version__ = "0.1.0"

__all__ = [
    # Fock space
    "Word",
    "word",
    "enumerate_words",
    "index_of",
    "word_at",
    "TruncatedFock",
    "fock_dim",
    "creation_matrix",
    "flip_matrix",
    "nu_lambda",
    # Systems and operators
    "BlockSystem2x2",
    "redheffer_product",
    "alpha",
    "RowContraction",
    "MultianalyticMatrix",
    "char_function",
    "poisson_kernel",
    # Ball automorphisms
    "JUnitary",
    "UnitaryForm",
    "FockAutomorphism",
    "make_junitary",
    "unitary_form",
    "junitary_form",
    "phi",
    "implementing_unitary",
    "apply_automorphism",
    "apply_inverse_automorphism",
    "defect_intertwiners",
    "theorem51_residuals",
    # Constraints
    "ConstraintSubspace",
    "symmetrizer",
    "ideal_subspace",
    "explicit_subspace",
    "theorem62_residuals",
    # Runs and reports
    "RunConfig",
    "CheckRecord",
    "Report",
    "ReportHeader",
    "MobiusDemo",
    "VerificationSuite",
    "run_suite",
    "demo_mobius",
    "emit_report",
    "load_report",
    # Configuration
    "WorkbenchSettings",
    "get_settings",
    "set_settings",
    "load_settings",
    # Exceptions
    "FockBenchError",
    "ConfigurationError",
    "ValidationError",
    "ContractionError",
    "WellPosednessError",
    "SpaceMismatchError",
    "StructureError",
    "IntertwinerError",
    "ConstraintError",
    "ReportError",
]
