from liouville_lab.cgf.conformal import ConformalField, conformal_field_transform
from liouville_lab.cgf.field import (
    FieldSample,
    covariance_kernel_ell,
    sample_coefficients,
    sample_field,
    white_noise_extract,
)
from liouville_lab.cgf.girsanov import girsanov_linear_closed_form, girsanov_shift_check
from liouville_lab.cgf.mollifiers import Mollifier, mollified_field

__all__ = [
    "ConformalField",
    "FieldSample",
    "Mollifier",
    "conformal_field_transform",
    "covariance_kernel_ell",
    "girsanov_linear_closed_form",
    "girsanov_shift_check",
    "mollified_field",
    "sample_coefficients",
    "sample_field",
    "white_noise_extract",
]
