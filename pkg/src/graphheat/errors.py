"""Exception hierarchy. Every error names the offending element where possible."""


class GraphHeatError(Exception):
    """Base class for all package errors."""


class GraphSpecError(GraphHeatError):
    """Invalid metric-graph description."""


class LoopEdgeError(GraphSpecError):
    pass


class ParallelEdgeError(GraphSpecError):
    pass


class NonpositiveLengthError(GraphSpecError):
    pass


class NonpositiveConductanceError(GraphSpecError):
    pass


class NegativePotentialError(GraphSpecError):
    pass


class UnknownVertexError(GraphHeatError):
    pass


class MeshTooCoarseError(GraphHeatError):
    pass


class BrokenSpaceInputError(GraphHeatError):
    """A broken-space vector was passed where a continuous one is required."""


class TooManyModesError(GraphHeatError):
    """Requested more modes than the FEM-reliable quarter of the spectrum."""


class SolverFailureError(GraphHeatError):
    pass


class NonpositiveShiftError(GraphHeatError):
    pass


class MeshMismatchError(GraphHeatError):
    pass


class SingularVertexSystemError(GraphHeatError):
    pass


class GammaOverflowError(GraphHeatError):
    pass


class TraceDivergenceError(GraphHeatError):
    pass


class NonFiniteStateError(GraphHeatError):
    """A solution coefficient became non-finite (drift blow-up)."""


class InsufficientModesError(GraphHeatError):
    pass


class ConfigError(GraphHeatError):
    """Invalid experiment configuration (CLI layer)."""
