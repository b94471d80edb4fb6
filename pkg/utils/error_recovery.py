from datetime import datetime
import json
import threading

from utils.logger import log_error, log_warning


class TrialFailureLog:
    """Records oracle trials that came back unknown or failed outright.

    A certificate is never issued over a trial recorded here; the log is kept
    so the run report can say which trials were lost and why.
    """

    def __init__(self, path=None):
        self.path = path
        self.error_log = []
        self._lock = threading.Lock()

    def log_error(self, error_type, details, trial_index=None, seed=None):
        """Log a failed trial with timestamp."""
        entry = {
            'timestamp': datetime.now().isoformat(),
            'type': error_type,
            'details': str(details),
            'trial_index': trial_index,
            'seed': seed,
        }
        with self._lock:
            self.error_log.append(entry)
        log_warning(f"trial {trial_index} {error_type}: {details}", context="trials", record=False)

        if self.path:
            self.save_error_log()

    def __len__(self):
        with self._lock:
            return len(self.error_log)

    def entries(self):
        with self._lock:
            return sorted(self.error_log, key=lambda e: (e['trial_index'] is None, e['trial_index'] or 0))

    def clear(self):
        with self._lock:
            self.error_log.clear()

    def save_error_log(self, path=None):
        """Save the failure log as JSON."""
        target = path or self.path
        if not target:
            return False
        try:
            with open(target, 'w') as f:
                json.dump(self.entries(), f, indent=2)
            return True
        except OSError as e:
            log_error(e, f"Failed to save trial failure log to {target}")
            return False


trial_failures = TrialFailureLog()
