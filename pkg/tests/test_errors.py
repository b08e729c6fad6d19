import pytest
from pydantic import ValidationError

from ribforge.core.errors import (
    BackwardError,
    ConfigError,
    DatasetIOError,
    GradCheckError,
    IntegrityError,
    NonFiniteLossError,
    ShapeError,
    WeightsFormatError,
    WeightsMismatchError,
    exit_code_for,
)
from ribforge.schemas.configs import PhantomConfig


def _validation_error() -> ValidationError:
    try:
        PhantomConfig(unknown=1)
    except ValidationError as e:
        return e
    raise AssertionError("expected a validation error")


@pytest.mark.parametrize("error,code", [
    (ConfigError("x"), 2),
    (ShapeError("x"), 2),
    (WeightsMismatchError("x"), 2),
    (DatasetIOError("x"), 3),
    (IntegrityError("x"), 3),
    (WeightsFormatError("x"), 3),
    (NonFiniteLossError("x"), 4),
    (GradCheckError("x"), 5),
    (BackwardError("x"), 1),
    (FileNotFoundError("x"), 3),
    (RuntimeError("x"), 1),
])
def test_exit_codes(error, code):
    assert exit_code_for(error) == code


def test_validation_errors_are_config_errors():
    assert exit_code_for(_validation_error()) == 2


def test_shape_errors_are_value_errors():
    with pytest.raises(ValueError):
        raise ShapeError("extent")
