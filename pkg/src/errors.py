class SandpileError(Exception):
    """Base class for every error raised by the library."""


class InputError(SandpileError):
    """The caller supplied something unusable (CLI exit code 2)."""


class PolyformParseError(InputError):
    pass


class CertificateError(InputError):
    pass


class InvalidPolyformError(InputError):
    pass


class EmptyDomainError(InputError):
    pass


class DisconnectedDomainError(InputError):
    pass


class DomainShapeError(InputError):
    """The construction needs a particular domain shape (e.g. an odd square)."""


class DomainMismatchError(InputError):
    pass


class NotAnAutomorphismError(InputError):
    pass


class BoxTooSmallError(InputError):
    pass


class NonConvexDomainError(InputError):
    pass


class PolyformTopologyError(InputError):
    """Raised when a boundary has holes or pinch points."""


class NonIntegerHarmonicError(InputError):
    pass


class IndexOutOfRangeError(InputError):
    pass


class NegativeConfigurationError(InputError):
    pass


class InvariantError(SandpileError):
    """A mathematical invariant did not hold (CLI exit code 3)."""


class SingularMatrixError(InvariantError):
    pass


class IntegralityError(InvariantError):
    pass


class BasisConstructionError(InvariantError):
    pass


class DivisibilityError(InvariantError):
    pass


class NonHarmonicError(InvariantError):
    pass


class CuringError(InvariantError):
    pass


class VerificationError(SandpileError):
    """A verifier returned a negative verdict (CLI exit code 4)."""