"""Exception types raised across the toolkit."""


class CutkitError(Exception):
    """Base class for all toolkit errors."""


class IndexOutOfRangeError(CutkitError):
    """A gate references a qubit index outside the circuit width."""


class ArityMismatchError(CutkitError):
    """Number of qubits does not match the gate kind."""


class UnboundParameterError(CutkitError):
    """A symbolic parameter has no value."""


class ParseError(CutkitError):
    """Malformed circuit or result document."""


class UnsupportedOpError(CutkitError):
    """Operation not supported by this execution path."""


class BadPauliError(CutkitError):
    """Malformed Pauli string."""


class UncuttableGateError(CutkitError):
    """Gate kind has no local decomposition."""


class TooManyCutsError(CutkitError):
    """Cut count exceeds the enumeration cap."""


class BadRangeError(CutkitError):
    """Numeric argument outside its valid range."""


class DimMismatchError(CutkitError):
    """Array shape does not match the model configuration."""


class HeadConfigError(CutkitError):
    """Measurement head incompatible with the model configuration."""


class EmptyDatasetError(CutkitError):
    """Training requires at least one sample."""


class AssetCorruptError(CutkitError):
    """Bundled data asset failed its checksum."""


class PersistenceError(CutkitError):
    """Result file could not be written or read."""
