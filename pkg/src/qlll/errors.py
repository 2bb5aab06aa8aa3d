"""Exception hierarchy shared across the package."""


class QlllError(Exception):
    """Base class for package errors."""


class InfeasibleLayout(QlllError):
    """The clause generator could not place supports under the neighborhood cap."""


class MalformedProjector(QlllError):
    """A projector body is structurally invalid (shape, dimension, support)."""


class ParseError(QlllError):
    """An instance file could not be parsed; message carries field diagnostics."""


class DimensionTooLarge(QlllError):
    """A dense backend was asked for more qubits than its configured cap."""


class ZeroProbabilityBranch(QlllError):
    """Attempted to normalize a measurement branch with probability < 1e-12."""


class ConditionViolated(QlllError):
    """The local-lemma condition k - log2(g*e*r) > 0 does not hold."""


class NotNormalized(QlllError):
    """A probability vector does not sum to 1 within tolerance."""


class InsufficientTrials(QlllError):
    """Too few run records for a statistical check."""
