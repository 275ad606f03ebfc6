"""Exception types shared across the package."""


class KimergeError(Exception):
    """Base class for all errors raised by this package."""


class InputError(KimergeError, ValueError):
    """Invalid argument values (non-finite inputs, bad parameters)."""


class ShapeMismatch(InputError):
    """Dimension or label-span mismatch between operands."""


class DivergenceError(KimergeError, ValueError):
    """KL divergence undefined: prediction has zero mass where the target does not."""


class NormalizationError(InputError):
    """Uncertainty normalization impossible (a label subset with < 2 entries)."""


class PartitionError(InputError):
    """Label partitioning would violate subset-size constraints."""


class CoverageError(KimergeError, ValueError):
    """A training set is missing instances for a required class."""


class SplitError(InputError):
    """Dataset split would leave one side empty."""


class DatasetFormatError(KimergeError, ValueError):
    """Malformed dataset file (parse or schema problem)."""


class CheckpointFormatError(KimergeError, ValueError):
    """Model checkpoint file is corrupt or has an unsupported version."""


class TrainingDivergedError(KimergeError, RuntimeError):
    """Training produced a non-finite loss."""


class EvalError(KimergeError, ValueError):
    """Evaluation requested on empty or unusable inputs."""


class DataError(KimergeError, ValueError):
    """Gold annotations are internally inconsistent (e.g. malformed BIO)."""


class ConfigError(KimergeError, ValueError):
    """Experiment configuration is invalid or contains unknown keys."""


class StageError(KimergeError, RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
