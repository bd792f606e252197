"""Exception types shared across the workbench."""


class FatBenchError(Exception):
    """Base class for all errors raised by this package."""


class BadLengthError(FatBenchError):
    """A length is inconsistent with the block list it describes."""


class IndexOutOfRangeError(FatBenchError):
    """A block or cluster index lies outside its table."""


class ReservedIndexError(FatBenchError):
    """Attempt to write a reserved table entry (index 0 or 1)."""


class BadChainError(FatBenchError):
    """A clusterchain is free, reserved, out of range, cyclic, or too short."""


class IllFormedError(FatBenchError):
    """A model instance violates its level's invariants."""


class NoSpaceError(FatBenchError):
    """Not enough free clusters to complete an allocation."""


class SizeMismatchError(FatBenchError):
    """A file's recorded size exceeds what its clusterchain can hold."""


class FieldOverflowError(FatBenchError):
    """A decoded field value does not fit its on-disk encoding."""


class NameInvalidError(FatBenchError):
    """A file name is not a valid 8.3 short name."""


class TruncatedImageError(FatBenchError):
    """Input bytes are shorter than the volume geometry demands."""


class BadSignatureError(FatBenchError):
    """Boot sector signature bytes 0x55 0xAA are missing."""


class NonCompliantError(FatBenchError):
    """An image fails the volume compliance predicate."""


class DepthExceededError(FatBenchError):
    """Directory recursion went deeper than the configured limit."""
