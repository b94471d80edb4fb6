import time
from contextlib import contextmanager
import threading

import psutil


class PhaseTimer:
    """Wall time per named phase plus peak resident memory."""

    def __init__(self):
        self.metrics = {
            'phases': {},
            'memory_usage': [],
        }
        self._lock = threading.Lock()

    def _sample_memory(self):
        try:
            rss = psutil.Process().memory_info().rss / 1024 / 1024
        except psutil.Error:
            return
        with self._lock:
            self.metrics['memory_usage'].append(rss)

    def _add(self, phase, elapsed):
        with self._lock:
            self.metrics['phases'][phase] = self.metrics['phases'].get(phase, 0.0) + elapsed

    @contextmanager
    def track(self, phase):
        """Time the enclosed block under ``phase`` (repeated phases accumulate)."""
        start_time = time.perf_counter()
        try:
            yield
        finally:
            self._add(phase, time.perf_counter() - start_time)
            self._sample_memory()

    def get_performance_report(self):
        """Per-phase seconds, total, and peak memory in MB."""
        with self._lock:
            phases = dict(self.metrics['phases'])
            memory = list(self.metrics['memory_usage'])
        return {
            'phases_s': phases,
            'total_s': sum(phases.values()),
            'peak_memory_mb': max(memory) if memory else 0,
        }
