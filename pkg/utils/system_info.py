import os
import platform

import numpy as np
import pandas as pd
import scipy

try:
    import psutil
    HAS_PSUTIL = True
except ImportError:
    HAS_PSUTIL = False

APP_VERSION = '1.0.0'


def get_system_info():
    """Versions and host details recorded on every run report."""
    return {
        'app_version': APP_VERSION,
        'python_version': platform.python_version(),
        'numpy_version': np.__version__,
        'scipy_version': scipy.__version__,
        'pandas_version': pd.__version__,
        'system': {
            'os': platform.system(),
            'machine': platform.machine(),
            'cpu_count': os.cpu_count(),
            'rss_mb': get_memory_usage(),
            'total_memory_mb': get_total_memory(),
        }
    }


def get_memory_usage():
    """Resident memory of this process in MB, or None without psutil."""
    if not HAS_PSUTIL:
        return None
    return round(psutil.Process(os.getpid()).memory_info().rss / 1024 / 1024, 2)


def get_total_memory():
    """Physical memory of the host in MB."""
    if not HAS_PSUTIL:
        return None
    return round(psutil.virtual_memory().total / 1024 / 1024, 2)
