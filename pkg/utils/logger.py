import logging
import os
import threading
from datetime import datetime
from pathlib import Path

# Log directory, overridable through XORCOUNT_LOG_DIR or configure_log_dir()
LOGS_DIR = Path(os.environ.get("XORCOUNT_LOG_DIR", "logs"))
LOG_PATTERN = "xorcount_*.log"
FILE_FORMAT = '%(asctime)s - %(levelname)s - %(module)s - %(funcName)s - %(message)s'

_notifications = {'error_log': [], 'warning_log': []}
_notifications_lock = threading.Lock()

logger = logging.getLogger('xorcount')
logger.setLevel(logging.DEBUG)


def _log_file():
    return LOGS_DIR / f"xorcount_{datetime.now().strftime('%Y%m%d')}.log"


def configure_log_dir(path, console_level=None):
    """Point the daily log file at ``path`` and set the console level; returns the log file or None.

    The first call also installs the console handler (INFO by default).
    """
    global LOGS_DIR
    LOGS_DIR = Path(path)
    console = [h for h in logger.handlers if type(h) is logging.StreamHandler]
    if not console:
        handler = logging.StreamHandler()
        handler.setLevel(logging.INFO)
        handler.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))
        logger.addHandler(handler)
        console = [handler]
    if console_level is not None:
        for handler in console:
            handler.setLevel(console_level)

    for handler in list(logger.handlers):
        if isinstance(handler, logging.FileHandler):
            logger.removeHandler(handler)
            handler.close()
    try:
        LOGS_DIR.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(_log_file())
    except OSError as e:
        # read-only checkouts still get console output
        logger.warning(f"Warning: cannot write logs to {LOGS_DIR}: {e}")
        return None
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(FILE_FORMAT))
    logger.addHandler(file_handler)
    return Path(file_handler.baseFilename)


configure_log_dir(LOGS_DIR)


def _record(kind, entry):
    with _notifications_lock:
        _notifications[kind].append(entry)


def log_error(error, context=None, record=True):
    """Log an error with context and keep it for the run report."""
    error_msg = f"Error: {str(error)}"
    if context:
        error_msg = f"{error_msg} | Context: {context}"
    logger.error(error_msg, exc_info=isinstance(error, BaseException))

    if record:
        _record('error_log', {
            'timestamp': datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            'error': error_msg,
            'context': context,
        })


def log_warning(message, context=None, record=True):
    """Log a warning with context and keep it for the run report."""
    warning_msg = f"Warning: {message}"
    if context:
        warning_msg = f"{warning_msg} | Context: {context}"
    logger.warning(warning_msg)

    if record:
        _record('warning_log', {
            'timestamp': datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            'message': warning_msg,
            'context': context,
        })


def log_info(message, context=None):
    """Log an info message with context."""
    info_msg = message
    if context:
        info_msg = f"{info_msg} | Context: {context}"
    logger.info(info_msg)


def log_debug(message, context=None):
    debug_msg = message
    if context:
        debug_msg = f"{debug_msg} | Context: {context}"
    logger.debug(debug_msg)


def clear_old_logs(days=7, log_dir=None):
    """Delete this tool's daily log files older than ``days``; returns how many went."""
    log_dir = LOGS_DIR if log_dir is None else Path(log_dir)
    cutoff = datetime.now().timestamp() - (days * 24 * 60 * 60)
    removed = 0
    try:
        for log_file in log_dir.glob(LOG_PATTERN):
            if log_file.stat().st_mtime < cutoff and log_file != _log_file():
                log_file.unlink()
                removed += 1
    except OSError as e:
        log_error(e, f"clearing old logs in {log_dir}")
    if removed:
        log_debug(f"removed {removed} log files older than {days} days", context=str(log_dir))
    return removed


def get_recent_errors():
    """Errors recorded since the last clear."""
    with _notifications_lock:
        return list(_notifications['error_log'])


def get_recent_warnings():
    """Warnings recorded since the last clear."""
    with _notifications_lock:
        return list(_notifications['warning_log'])


def clear_log_notifications():
    """Drop recorded errors and warnings."""
    with _notifications_lock:
        _notifications['error_log'].clear()
        _notifications['warning_log'].clear()
