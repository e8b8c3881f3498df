"""Exception types shared across the toolkit."""


class AsemError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatchError(AsemError):
    """Operand shapes are incompatible for the requested operation."""


class ZeroNormRowError(AsemError):
    """One or more rows have an L2 norm too small to normalize."""

    def __init__(self, rows):
        self.rows = tuple(int(r) for r in rows)
        super().__init__(f"rows with near-zero L2 norm: {list(self.rows)}")


class BatchTooSmallError(AsemError):
    """Batch has too few items for the requested objective."""


class CacheMismatchError(AsemError):
    """Backward pass received a gradient that does not match the forward cache."""


class EpochOutOfRangeError(AsemError):
    """Epoch index outside the configured schedule."""


class EmptyCandidatesError(AsemError):
    """Ranking requested over an empty candidate list."""


class MissingFileError(AsemError):
    """A manifest-referenced file does not exist."""


class DanglingPairReferenceError(AsemError):
    """A pair record references a feature row that does not exist."""


class DuplicateTextPairingError(AsemError):
    """A text id appears in more than one pair record."""


class InfeasibleConstraintError(AsemError):
    """Batch plan cannot satisfy the collision-freedom constraint."""


class NonFiniteLossError(AsemError):
    """Training produced a NaN or infinite loss value."""

    def __init__(self, epoch, batch, value):
        self.epoch = int(epoch)
        self.batch = int(batch)
        self.value = float(value)
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}, batch {batch}")


class DimMismatchError(AsemError):
    """Checkpoint dimensions do not match the dataset dimensions."""


class ConfigError(AsemError):
    """Invalid or unknown configuration entry."""
