"""Exception types raised across swarmload."""


class SwarmloadError(Exception):
    pass


class ContractViolation(SwarmloadError, ValueError):
    """A caller broke an operation's precondition."""


class FormatError(SwarmloadError, ValueError):
    """Input file does not follow the expected format."""


class NoValidReadings(SwarmloadError):
    pass


class InsufficientSamples(SwarmloadError):
    pass


class ProfileInvalid(SwarmloadError, ValueError):
    pass


class MissingInput(SwarmloadError, KeyError):
    pass


class EmptyAlignment(SwarmloadError):
    pass


class EmptyShift(SwarmloadError):
    pass


class EmptyInput(SwarmloadError, ValueError):
    pass


class ScenarioError(SwarmloadError, ValueError):
    """Scenario script failed validation."""


class FaultSpecError(SwarmloadError, ValueError):
    pass
