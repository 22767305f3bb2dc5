"""
错误类型
"""


class RopeKitError(Exception):
    """
    Base class of every error raised by this project.
    """
    pass


class DimensionError(RopeKitError, ValueError):
    """
    Shape or dimension mismatch.
    """
    pass


class LengthError(DimensionError):
    """
    Sequence longer than a non-extendable position table.
    """
    pass


class ConfigurationError(RopeKitError, ValueError):
    """
    Invalid dimension, model or training setting.
    """
    pass


class NumericError(RopeKitError, ArithmeticError):
    """
    Non-finite value or zero denominator.
    """
    pass


class DataError(RopeKitError):
    """
    Corpus or input file problem.
    """
    pass


class CheckpointError(DataError):
    """
    Corrupted or incompatible checkpoint.
    """
    pass


class ComparisonError(RopeKitError):
    """
    Metrics files that cannot be compared.
    """
    pass
