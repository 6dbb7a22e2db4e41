from liouville_lab.gmc.checks import (
    campbell_check,
    cameron_martin_shift_check,
    martingale_check,
    mean_mass_check,
)
from liouville_lab.gmc.conformal import ConformalMeasure, conformal_measure_transform
from liouville_lab.gmc.measure import (
    FlavorData,
    LqgBuilder,
    LqgMeasure,
    build_lqg,
    check_gamma,
    ensemble_masses,
)
from liouville_lab.gmc.scaling import ball_scaling_stats

__all__ = [
    "ConformalMeasure",
    "FlavorData",
    "LqgBuilder",
    "LqgMeasure",
    "ball_scaling_stats",
    "build_lqg",
    "cameron_martin_shift_check",
    "campbell_check",
    "check_gamma",
    "conformal_measure_transform",
    "ensemble_masses",
    "martingale_check",
    "mean_mass_check",
]
