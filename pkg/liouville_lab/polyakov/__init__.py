from liouville_lab.polyakov.anomaly import (
    AnomalyReport,
    adjusted_anomaly,
    conformal_anomaly_check,
    plain_anomaly,
)
from liouville_lab.polyakov.partition import (
    PartitionReport,
    PolyakovParams,
    check_gate,
    partition_function,
)
from liouville_lab.polyakov.qcurvature import (
    QCurvature,
    q_curvature,
    q_transform,
    total_q_invariance_check,
)

__all__ = [
    "AnomalyReport",
    "PartitionReport",
    "PolyakovParams",
    "QCurvature",
    "adjusted_anomaly",
    "check_gate",
    "conformal_anomaly_check",
    "partition_function",
    "plain_anomaly",
    "q_curvature",
    "q_transform",
    "total_q_invariance_check",
]
