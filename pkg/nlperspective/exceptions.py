from contextlib import contextmanager
from typing import Iterator

from dbt.adapters.events.logging import AdapterLogger
from dbt_common.exceptions import DbtRuntimeError

logger = AdapterLogger("nlperspective")


class NLPerspectiveError(DbtRuntimeError):
    """Base class for every error raised by the library."""

    CODE = 10001
    MESSAGE = "Perspective library error"
    exit_code = 1


class IndeterminateForm(NLPerspectiveError):
    MESSAGE = "Indeterminate extended-real form"


class ScaleNotPositive(NLPerspectiveError):
    MESSAGE = "Scale factor must be finite and strictly positive"


class DimensionMismatch(NLPerspectiveError):
    MESSAGE = "Dimension mismatch"


class ParameterOutOfRange(NLPerspectiveError):
    MESSAGE = "Parameter out of range"
    exit_code = 2


class MetadataMismatch(NLPerspectiveError):
    MESSAGE = "Metadata disagrees with the analytic family"
    exit_code = 2


class AllInfinite(NLPerspectiveError):
    MESSAGE = "Function is identically +inf on the grid"


class BasepointOutsideDomain(NLPerspectiveError):
    MESSAGE = "Basepoint is outside the domain"


class EmptyPositiveSet(NLPerspectiveError):
    MESSAGE = "The strict positivity set is empty"
    exit_code = 3


class GridRequired(NLPerspectiveError):
    MESSAGE = "An oracle grid is required for this route"
    exit_code = 2


class HypothesisViolated(NLPerspectiveError):
    MESSAGE = "Hypothesis violated"
    exit_code = 3


class UndeterminedCondition(NLPerspectiveError):
    MESSAGE = "Condition cannot be certified from metadata"
    exit_code = 3


class UnknownConjugate(NLPerspectiveError):
    MESSAGE = "Conjugate is neither analytic nor sampled"
    exit_code = 3


class GammaOutOfRange(NLPerspectiveError):
    MESSAGE = "Exponent gamma must lie in (1/p, 1]"
    exit_code = 2


class ConfigParse(NLPerspectiveError):
    MESSAGE = "Invalid job configuration"
    exit_code = 2


class VerificationFailed(NLPerspectiveError):
    MESSAGE = "Closed form and oracle disagree beyond the tolerance"


@contextmanager
def exception_handler(context: str) -> Iterator[None]:
    """Re-raise anything that is not a library error as one, keeping the cause."""
    try:
        yield
    except NLPerspectiveError as exc:
        logger.debug(f"{context}: {exc}")
        raise
    except (ValueError, TypeError, KeyError) as exc:
        logger.debug(f"{context}: {exc}")
        raise ConfigParse(f"{context}: {exc}") from exc
    except Exception as exc:
        logger.debug(f"{context}: {exc}")
        raise NLPerspectiveError(f"{context}: {exc}") from exc
