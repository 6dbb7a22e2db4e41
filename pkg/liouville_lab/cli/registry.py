# cli/registry.py
from typing import Dict, List, Type

from liouville_lab.core.exceptions import ExperimentConfigError
from liouville_lab.cli.experiments import (
    AnomalyExperiment,
    BallScalingExperiment,
    BaseExperiment,
    ConformalMeasureExperiment,
    ExperimentKind,
    FieldCovarianceExperiment,
    GmcMassExperiment,
    KernelResidualExperiment,
    LbmRevuzExperiment,
    MartingaleExperiment,
    PolyakovExperiment,
    RandomOperatorExperiment,
)


class ExperimentRegistry:
    _experiments: Dict[str, Type[BaseExperiment]] = {
        experiment.kind.value: experiment
        for experiment in (
            KernelResidualExperiment,
            FieldCovarianceExperiment,
            GmcMassExperiment,
            MartingaleExperiment,
            ConformalMeasureExperiment,
            BallScalingExperiment,
            LbmRevuzExperiment,
            RandomOperatorExperiment,
            PolyakovExperiment,
            AnomalyExperiment,
        )
    }

    @classmethod
    def get(cls, kind: str) -> Type[BaseExperiment]:
        experiment_class = cls._experiments.get(kind)
        if not experiment_class:
            raise ExperimentConfigError(f"Unknown experiment kind: {kind}")
        return experiment_class

    @classmethod
    def get_all(cls) -> List[Type[BaseExperiment]]:
        return list(cls._experiments.values())
