"""Classification of finite-dimensional quantum Langevin equations."""

__version__ = "0.1.0"

from .classical import ClassicalForm, classify_d1, commutation_residual, rebuild, to_classical_form  # noqa: E402
from .decompose import DecompositionResult, decompose, invariant_block_structure, subsystem_test  # noqa: E402
from .exceptions import NotClassical, NotUnitaryScheme, QleError  # noqa: E402
from .model import QleCoefficients, apply_noise_change, derive_full, restrict, validate  # noqa: E402

__all__ = [
    "ClassicalForm",
    "DecompositionResult",
    "NotClassical",
    "NotUnitaryScheme",
    "QleCoefficients",
    "QleError",
    "apply_noise_change",
    "classify_d1",
    "commutation_residual",
    "decompose",
    "derive_full",
    "invariant_block_structure",
    "rebuild",
    "restrict",
    "subsystem_test",
    "to_classical_form",
    "validate",
]
