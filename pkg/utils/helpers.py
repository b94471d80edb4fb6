import math
from datetime import datetime

import pytz

LN2 = math.log(2)


def get_local_timezone():
    """Timestamps in reports are always UTC."""
    return pytz.timezone('UTC')


def utc_now_iso():
    return datetime.now(get_local_timezone()).isoformat(timespec='seconds')


def format_log_value(ln_value, label='value'):
    """Print a natural-log quantity as ln, log2 and (when representable) linear."""
    if ln_value is None or ln_value == -math.inf:
        return f"{label}: 0 (ln = -inf, log2 = -inf)"
    log2_value = ln_value / LN2
    text = f"{label}: ln = {ln_value:.6f}, log2 = {log2_value:.6f}"
    if -700.0 < ln_value < 700.0:
        text += f", linear = {math.exp(ln_value):.6g}"
    return text


def validate_probability(value, name='probability', open_interval=False):
    """Check that value lies in [0, 1] (or (0, 1)); returns it as float."""
    value = float(value)
    if open_interval:
        valid = 0.0 < value < 1.0
    else:
        valid = 0.0 <= value <= 1.0
    if not valid:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise ValueError(f"{name} must lie in {bounds}, got {value}")
    return value


def parse_float_list(text):
    """'0.1,0.2 0.5' -> [0.1, 0.2, 0.5]."""
    return [float(t) for t in text.replace(',', ' ').split()]


def parse_int_list(text):
    """'1-4,7' -> [1, 2, 3, 4, 7]."""
    values = []
    for part in text.replace(' ', '').split(','):
        if not part:
            continue
        if '-' in part[1:]:
            lo, hi = part.split('-', 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    return values
