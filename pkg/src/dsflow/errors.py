"""Exception hierarchy shared by all modules."""


class DsflowError(Exception):
    """Base class for package errors."""


class DomainError(DsflowError, ValueError):
    """Argument outside the domain of a closed-form map."""


class SpacelikeBreached(DsflowError):
    """The profile left the spacelike class (v^2 fell below the floor)."""


class MeanConvexityLost(DsflowError):
    """Mean curvature fell below the positivity floor somewhere."""


class NotConvex(DsflowError):
    """A principal curvature is below the strict convexity floor."""


class StepUnderflow(DsflowError):
    """The stable time step collapsed below the minimum admissible value."""


class ConfigError(DsflowError, ValueError):
    """Invalid scenario configuration."""
