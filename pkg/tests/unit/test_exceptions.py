from unittest import mock

import pytest

from nlperspective.exceptions import (
    ConfigParse,
    EmptyPositiveSet,
    GammaOutOfRange,
    GridRequired,
    HypothesisViolated,
    IndeterminateForm,
    NLPerspectiveError,
    UndeterminedCondition,
    UnknownConjugate,
    VerificationFailed,
    exception_handler,
)


@pytest.mark.parametrize(
    "error,code",
    [
        (VerificationFailed, 1),
        (IndeterminateForm, 1),
        (ConfigParse, 2),
        (GridRequired, 2),
        (GammaOutOfRange, 2),
        (HypothesisViolated, 3),
        (UndeterminedCondition, 3),
        (UnknownConjugate, 3),
        (EmptyPositiveSet, 3),
    ],
)
def test_exit_codes(error, code):
    exc = error("boom")
    assert isinstance(exc, NLPerspectiveError)
    assert exc.exit_code == code
    assert exc.msg == "boom"


def test_exception_handler_keeps_library_errors():
    with pytest.raises(HypothesisViolated):
        with exception_handler("job"):
            raise HypothesisViolated("cam is empty")


def test_exception_handler_maps_bad_input_to_config_errors():
    with pytest.raises(ConfigParse) as info:
        with exception_handler("job"):
            raise KeyError("phi")
    assert "job" in info.value.msg
    assert isinstance(info.value.__cause__, KeyError)


def test_exception_handler_wraps_everything_else():
    with pytest.raises(NLPerspectiveError) as info:
        with exception_handler("job"):
            raise ZeroDivisionError("nope")
    assert info.value.exit_code == 1


def test_exception_handler_logs_before_raising():
    with mock.patch("nlperspective.exceptions.logger") as logger:
        with pytest.raises(ConfigParse):
            with exception_handler("job"):
                raise ValueError("bad grid")
    logger.debug.assert_called_once_with("job: bad grid")
