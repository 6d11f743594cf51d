"""Exception types shared across the package."""


class DobbyError(Exception):
    """Base class for all package errors."""


class PreconditionError(DobbyError):
    """An action was applied to a state that does not satisfy its preconditions."""


class EmptyRegistryError(DobbyError):
    """Grounding was attempted against a registry with no actions."""


class DimensionMismatchError(DobbyError):
    """Cosine similarity of vectors with different dimensions."""


class ZeroVectorError(DobbyError):
    """Cosine similarity involving an all-zero vector."""


class InvalidInputError(DobbyError):
    """Rejected input (e.g. embedding an empty string)."""


class ProviderInconsistencyError(DobbyError):
    """An embedding provider returned vectors of inconsistent dimension."""


class StalePlanError(DobbyError):
    """A plan failed revalidation against the current world state."""


class ScenarioError(DobbyError):
    """Base class for scripted-backend failures."""


class ScenarioExhaustedError(ScenarioError):
    """The scripted backend was queried after its last step."""


class TriggerMismatchError(ScenarioError):
    """A query arrived whose history does not fire the next scripted trigger."""


class BackendError(DobbyError):
    """Base class for chat/embedding backend failures."""


class AuthError(BackendError):
    """The remote API rejected the credential."""


class BackendTimeoutError(BackendError):
    """The remote API did not answer within the retry budget."""


class MalformedResponseError(BackendError):
    """The remote API answered with a body we cannot interpret."""


class DestinationsParseError(DobbyError):
    """A destinations file is malformed; carries the offending line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class SimulationError(DobbyError):
    """The simulator was asked to do something physically impossible."""
