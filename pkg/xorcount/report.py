import json
from dataclasses import dataclass, field

from utils.helpers import utc_now_iso
from utils.logger import get_recent_warnings
from utils.system_info import get_system_info

STATUS_OK = 'ok'
STATUS_INCONCLUSIVE = 'inconclusive'
STATUS_ERROR = 'error'


@dataclass
class RunReport:
    """Everything one CLI invocation produced; every bound points at a serialized certificate."""

    command: list
    seed: int
    config: dict
    certificates: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)
    solver_stats: dict = field(default_factory=dict)
    trial_failures: list = field(default_factory=list)
    status: str = STATUS_OK
    message: str = ''
    created_at: str = field(default_factory=utc_now_iso)

    def add_certificate(self, certificate):
        self.certificates.append(certificate)

    def mark_inconclusive(self, message):
        self.status = STATUS_INCONCLUSIVE
        self.message = message

    def to_dict(self, include_timing=True):
        d = {
            'command': list(self.command),
            'seed': self.seed,
            'config': self.config,
            'status': self.status,
            'message': self.message,
            'certificates': [c.to_dict(include_timing) for c in self.certificates],
            'solver_stats': self.solver_stats,
            'trial_failures': self.trial_failures,
        }
        if include_timing:
            d['timing'] = self.timing
            d['created_at'] = self.created_at
            d['warnings'] = [w['message'] for w in get_recent_warnings()]
            d['system'] = get_system_info()
        return d

    def to_json(self, include_timing=True):
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2, default=str)

    def write(self, path):
        with open(path, 'w') as f:
            f.write(self.to_json())
