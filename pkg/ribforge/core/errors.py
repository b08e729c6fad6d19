"""
Exception hierarchy; every class carries the CLI exit code of its failure class
"""
from pydantic import ValidationError


class RibforgeError(Exception):
    """Base class for all ribforge failures"""
    exit_code = 1


class ConfigError(RibforgeError):
    """Invalid configuration, arguments or preconditions"""
    exit_code = 2


class ShapeError(ConfigError, ValueError):
    """Tensor extents disagree with an operation's contract"""


class TensorError(ConfigError, ValueError):
    """Invalid tensor construction or operation argument"""


class BackwardError(RibforgeError, RuntimeError):
    """Backward pass requested on a graph that cannot be differentiated"""


class NormStateError(RibforgeError, RuntimeError):
    """Normalization layer used in eval mode before running statistics exist"""


class WeightsMismatchError(ConfigError):
    """Weight names or shapes do not match the target architecture"""


class DatasetIOError(RibforgeError, OSError):
    """Missing or malformed dataset/weight files"""
    exit_code = 3


class IntegrityError(DatasetIOError):
    """Checksum or length validation failed"""


class WeightsFormatError(IntegrityError):
    """Weight file is truncated, corrupt or of an unsupported version"""


class NonFiniteLossError(RibforgeError, ArithmeticError):
    """A training loss became NaN or infinite"""
    exit_code = 4


class FreezeViolationError(RibforgeError, RuntimeError):
    """A frozen network changed during training"""


class GradCheckError(RibforgeError):
    """Analytic and numeric gradients disagree beyond tolerance"""
    exit_code = 5


def exit_code_for(error: BaseException) -> int:
    """CLI exit code for any failure; validation errors count as config errors"""
    if isinstance(error, RibforgeError):
        return error.exit_code
    if isinstance(error, ValidationError):
        return ConfigError.exit_code
    if isinstance(error, OSError):
        return DatasetIOError.exit_code
    return 1
