import logging
from functools import wraps

logger = logging.getLogger(__name__)


def reports_errors(*handled):
    """
    Turn the ``handled`` exceptions raised by a command handler into a one-line
    ``error: ...`` reply instead of letting them escape the caller's loop.
    """
    def decorator(handler):
        @wraps(handler)
        def _wrapped(*args, **kwargs):
            try:
                return handler(*args, **kwargs)
            except handled as e:
                logger.debug(f"{handler.__name__} failed: {e!r}")
                message = str(e).splitlines()[0] if str(e) else type(e).__name__
                return f"error: {message}"
        return _wrapped
    return decorator
