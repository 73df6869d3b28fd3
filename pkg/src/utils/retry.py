import logging

from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_none,
)

from config.settings import settings

logger = logging.getLogger(__name__)


class RefinementDriftError(RuntimeError):
    """A measured constant moved by more than the allowed factor under dt refinement."""


def refinement_retrying(attempts: int | None = None) -> Retrying:
    # Each attempt is expected to halve its base step; see calibrate_constants
    return Retrying(
        wait=wait_none(),
        stop=stop_after_attempt(attempts or settings.calibration_attempts),
        retry=retry_if_exception_type(RefinementDriftError),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    )
