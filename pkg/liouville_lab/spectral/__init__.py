from liouville_lab.spectral.basis import SpectralBasis, default_basis
from liouville_lab.spectral.conformal import ConformalFactor, conformal_kernel_transform
from liouville_lab.spectral.forms import (
    CopolyForm,
    copoly_apply,
    copoly_form_apply,
    green_operator_apply,
    weyl_check,
)
from liouville_lab.spectral.gjms import (
    GjmsSpectrum,
    a_n_constant,
    gjms_eigenvalues,
    gjms_spectrum,
    gjms_symbolic_coefficients,
)
from liouville_lab.spectral.kernels import (
    KernelEvaluator,
    green_kernel_eval,
    heat_kernel_eval,
    heat_lower_bound_check,
    resolvent_kernel_eval,
)
from liouville_lab.spectral.renormalization import r_g_estimate, refined_constant

__all__ = [
    "ConformalFactor",
    "CopolyForm",
    "GjmsSpectrum",
    "KernelEvaluator",
    "SpectralBasis",
    "a_n_constant",
    "conformal_kernel_transform",
    "copoly_apply",
    "copoly_form_apply",
    "default_basis",
    "gjms_eigenvalues",
    "gjms_spectrum",
    "gjms_symbolic_coefficients",
    "green_kernel_eval",
    "green_operator_apply",
    "heat_kernel_eval",
    "heat_lower_bound_check",
    "r_g_estimate",
    "refined_constant",
    "resolvent_kernel_eval",
    "weyl_check",
]
