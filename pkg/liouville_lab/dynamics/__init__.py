from liouville_lab.dynamics.brownian import BrownianPath, simulate_bm
from liouville_lab.dynamics.functional import (
    AdditiveFunctional,
    LiouvillePath,
    additive_functional,
    revuz_check,
    time_change,
)
from liouville_lab.dynamics.operator import (
    RandomGjmsOperator,
    copoly_heat_flow,
    random_gjms_assemble,
)

__all__ = [
    "AdditiveFunctional",
    "BrownianPath",
    "LiouvillePath",
    "RandomGjmsOperator",
    "additive_functional",
    "copoly_heat_flow",
    "random_gjms_assemble",
    "revuz_check",
    "simulate_bm",
    "time_change",
]
