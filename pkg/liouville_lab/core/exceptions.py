# core/exceptions.py


class LiouvilleLabError(Exception):
    """Base exception for all liouville-lab errors"""

    pass


class InvalidParameterError(LiouvilleLabError):
    """A numeric precondition of an operation is violated"""

    pass


class UnsupportedModelError(LiouvilleLabError):
    """The model manifold has no closed form for the requested object"""

    pass


class NotAdmissibleError(LiouvilleLabError):
    """The GJMS operator is not positive on grounded functions"""

    pass


class GateViolationError(LiouvilleLabError):
    """A finiteness gate of the Polyakov–Liouville measure fails"""

    pass


class GridTruncationError(LiouvilleLabError):
    """Integration grid tails exceed the configured tolerance"""

    def __init__(self, message: str, tail_ratio: float):
        self.tail_ratio = tail_ratio
        super().__init__(message)


class ExperimentConfigError(LiouvilleLabError):
    """Errors in experiment configuration"""

    pass
