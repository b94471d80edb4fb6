"""Membership oracle: does S intersect h^-1(0)?

Three backends answer the same question. ``ExplicitSetOracle`` scans a listed
set, ``ExhaustiveOracle`` enumerates the solution set of a small CNF (or the
tables of a contingency spec) once and then scans it, and
``ExternalSolverOracle`` writes the conjoined instance to a temp file and runs
a SAT solver through a command template such as ``"cryptominisat5 {in}"``.
Every sat answer is rechecked in-process before it is believed.
"""
import os
import shlex
import subprocess
import tempfile
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from utils.logger import log_debug, log_warning
from xorcount.dimacs import CnfFormula, VariablePool, emit
from xorcount.errors import (CapacityError, DimensionError, IntegrityError, ParameterError,
                             ProtocolError)
from xorcount.gf2hash import Assignment, ExplicitSet, apply_hash, survivor_mask

EXHAUSTIVE_MAX_VARS = 26
TABLE_ENUMERATION_LIMIT = 1 << 22
DEFAULT_CHUNK = 6
_LANE_BLOCK = 1 << 20


class Answer(str, Enum):
    SAT = 'sat'
    UNSAT = 'unsat'
    UNKNOWN = 'unknown'


@dataclass(frozen=True)
class OracleVerdict:
    answer: Answer
    witness: Assignment = None
    model: tuple = None
    stats: dict = field(default_factory=dict)

    @property
    def survived(self):
        if self.answer == Answer.UNKNOWN:
            return None
        return self.answer == Answer.SAT


@dataclass(frozen=True)
class SolverProfile:
    name: str
    sat_exit_codes: tuple = (10, 0)
    unsat_exit_codes: tuple = (20, 0)
    native_xor: bool = True


SOLVER_PROFILES = {
    'cryptominisat': SolverProfile('cryptominisat', (10, 0), (20, 0), True),
    'generic': SolverProfile('generic', (10, 0), (20, 0), False),
}


@dataclass(frozen=True)
class CountingProblem:
    """The set S behind the oracle, with hash columns on variables 1..n."""

    n: int
    explicit: ExplicitSet = None
    cnf: CnfFormula = None
    table: object = None
    encoding: object = None
    name: str = ''

    def __post_init__(self):
        if (self.explicit is None) == (self.cnf is None):
            raise ParameterError("a counting problem needs exactly one of an explicit set or a CNF")
        if self.explicit is not None and self.explicit.n != self.n:
            raise DimensionError(f"explicit set has width {self.explicit.n}, problem says {self.n}")
        if self.cnf is not None and self.cnf.num_vars < self.n:
            raise DimensionError(f"CNF has {self.cnf.num_vars} variables, fewer than n={self.n}")
        if self.table is not None and self.encoding is None:
            raise ParameterError("table problems carry their cell encoding")

    @classmethod
    def from_explicit(cls, s, name=''):
        return cls(n=s.n, explicit=s, name=name)

    @classmethod
    def from_cnf(cls, formula, n=None, name=''):
        return cls(n=formula.num_vars if n is None else n, cnf=formula, name=name)

    @property
    def variant(self):
        if self.explicit is not None:
            return 'explicit'
        return 'table' if self.table is not None else 'cnf'


def _parity_clauses(variables, rhs):
    """All 2^(s-1) clauses of XOR(variables) = rhs, in counting order."""
    s = len(variables)
    clauses = []
    for code in range(1 << s):
        if bin(code).count('1') % 2 == rhs:
            continue
        clauses.append([-v if (code >> i) & 1 else v for i, v in enumerate(variables)])
    return clauses


def xor_to_cnf(variables, rhs, chunk, fresh):
    """Clauses for XOR(variables) = rhs, chained through fresh auxiliaries.

    Every sub-XOR, carries included, has at most ``chunk`` variables (at
    least 3 once chaining starts), so each expands to at most 2^(chunk-1)
    clauses. A support of size t > chunk becomes ceil((t - 2) / (w - 2))
    sub-XORs with w = max(chunk, 3). Empty support with rhs = 1 is the
    empty clause, with rhs = 0 no clauses at all.
    """
    if chunk < 2:
        raise ParameterError(f"chunk must be at least 2, got {chunk}")
    variables = [int(v) for v in variables]
    rhs = int(rhs) & 1
    if not variables:
        return [[]] if rhs else []
    if len(variables) <= chunk:
        return _parity_clauses(variables, rhs)
    width = max(chunk, 3)
    carry = fresh.new()
    clauses = _parity_clauses(variables[:width - 1] + [carry], 0)
    rest = variables[width - 1:]
    while len(rest) > width - 1:
        nxt = fresh.new()
        clauses.extend(_parity_clauses([carry] + rest[:width - 2] + [nxt], 0))
        carry = nxt
        rest = rest[width - 2:]
    clauses.extend(_parity_clauses([carry] + rest, rhs))
    return clauses


def hash_rows(h):
    """(1-based support, rhs) per row: h(x) = 0 means <a_i, x> = b_i."""
    bits = h.row_bits()
    return [(tuple(int(j) + 1 for j in np.flatnonzero(bits[i])), int(h.b[i])) for i in range(h.m)]


def conjoin(formula, h, native_xor=True, chunk=DEFAULT_CHUNK):
    """The formula plus the m parity rows of h on variables 1..h.n."""
    if h.n > formula.num_vars:
        raise DimensionError(f"hash width {h.n} exceeds the formula's {formula.num_vars} variables")
    rows = [(support, rhs) for support, rhs in hash_rows(h) if support or rhs]
    if native_xor:
        return formula.with_additions(xors=rows)
    pool = VariablePool(formula.num_vars)
    clauses = []
    for support, rhs in rows:
        for clause in xor_to_cnf(support, rhs, chunk, pool):
            if clause:
                clauses.append(tuple(clause))
            else:
                v = pool.new()
                clauses.extend([(v,), (-v,)])
    return formula.with_additions(num_vars=pool.top, clauses=clauses)


def check_witness(problem, h, witness, model=None):
    """Recheck a sat answer against the original problem and the hash."""
    if witness is None or witness.n != problem.n or h.n != problem.n:
        return False
    if any(apply_hash(h, witness)):
        return False
    if problem.explicit is not None:
        return witness in problem.explicit
    if model is None or len(model) < problem.cnf.num_vars:
        return False
    if tuple(int(bool(v)) for v in model[:problem.n]) != witness.to_bits():
        return False
    return problem.cnf.is_satisfied(model)


def parse_solver_output(stdout):
    """Return (status, literal list) from 's ...' and 'v ...' lines."""
    status = None
    literals = []
    for raw in stdout.splitlines():
        line = raw.strip()
        if line.startswith('s '):
            if status is not None:
                raise ProtocolError(f"more than one solution line: {line!r}")
            token = line[2:].strip().upper()
            if token == 'SATISFIABLE':
                status = Answer.SAT
            elif token == 'UNSATISFIABLE':
                status = Answer.UNSAT
            elif token in ('UNKNOWN', 'INDETERMINATE', 'INDET'):
                status = Answer.UNKNOWN
            else:
                raise ProtocolError(f"unrecognized solution line: {line!r}")
        elif line.startswith('v ') or line == 'v':
            try:
                literals.extend(int(t) for t in line[1:].split())
            except ValueError:
                raise ProtocolError(f"malformed model line: {line!r}")
    return status, literals


def _model_from_literals(literals, num_vars):
    top = max([num_vars] + [abs(l) for l in literals])
    model = [False] * top
    for lit in literals:
        if lit:
            model[abs(lit) - 1] = lit > 0
    return tuple(model)


def run_external(formula, command, budget=None, profile=None, native_xor=True, chunk=DEFAULT_CHUNK):
    """Run one solver process on ``formula`` and return its rechecked verdict."""
    if '{in}' not in command:
        raise ParameterError(f"solver command must contain the '{{in}}' placeholder: {command!r}")
    profile = profile or SOLVER_PROFILES['cryptominisat']
    text = emit(formula, native_xor=native_xor, chunk=chunk)
    with tempfile.TemporaryDirectory(prefix='xorcount_') as workdir:
        path = os.path.join(workdir, 'instance.cnf')
        with open(path, 'w', newline='\n') as f:
            f.write(text)
        args = [part.replace('{in}', path) for part in shlex.split(command)]
        start = time.monotonic()
        try:
            process = subprocess.Popen(args, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        except FileNotFoundError as e:
            raise ParameterError(f"solver executable not found: {args[0]}") from e
        try:
            stdout, stderr = process.communicate(timeout=budget)
        except subprocess.TimeoutExpired:
            process.kill()
            try:
                process.communicate(timeout=2)
            except subprocess.TimeoutExpired:
                pass
            elapsed = time.monotonic() - start
            log_debug(f"solver killed after {elapsed:.2f}s", context=command)
            return OracleVerdict(Answer.UNKNOWN, stats={'solver_time_s': elapsed, 'timed_out': True})
        elapsed = time.monotonic() - start

    stats = {'solver_time_s': elapsed, 'exit_code': process.returncode}
    status, literals = parse_solver_output(stdout)
    if status is None:
        if process.returncode == 0:
            raise ProtocolError("solver exited 0 without a solution line")
        stats['diagnostics'] = (stderr or stdout)[-2000:]
        log_warning(f"solver exited with code {process.returncode} and no solution line", context=command)
        return OracleVerdict(Answer.UNKNOWN, stats=stats)
    if status == Answer.UNKNOWN:
        return OracleVerdict(Answer.UNKNOWN, stats=stats)
    expected = profile.sat_exit_codes if status == Answer.SAT else profile.unsat_exit_codes
    if process.returncode not in expected:
        raise ProtocolError(f"solver said {status.value} but exited with code {process.returncode}")
    if status == Answer.UNSAT:
        return OracleVerdict(Answer.UNSAT, stats=stats)
    if not literals:
        raise ProtocolError("satisfiable answer without a model")
    model = _model_from_literals(literals, formula.num_vars)
    if not formula.is_satisfied(model):
        raise IntegrityError("solver model does not satisfy the submitted instance")
    return OracleVerdict(Answer.SAT, model=model, stats=stats)


class OracleBackend:
    """Base class: bookkeeping around a backend-specific ``_query``."""

    name = 'base'

    def __init__(self, problem):
        self.problem = problem
        self._lock = threading.Lock()
        self._counters = {'calls': 0, 'sat': 0, 'unsat': 0, 'unknown': 0, 'solver_time_s': 0.0}

    def has_survivor(self, h, budget=None):
        if h.n != self.problem.n:
            raise DimensionError(f"hash width {h.n} does not match problem width {self.problem.n}")
        start = time.monotonic()
        verdict = self._query(h, budget)
        if verdict.answer == Answer.SAT and not check_witness(self.problem, h, verdict.witness, verdict.model):
            raise IntegrityError(f"{self.name} witness failed the recheck")
        elapsed = verdict.stats.get('solver_time_s', time.monotonic() - start)
        with self._lock:
            self._counters['calls'] += 1
            self._counters[verdict.answer.value] += 1
            self._counters['solver_time_s'] += elapsed
        return verdict

    def _query(self, h, budget):
        raise NotImplementedError

    def stats_summary(self):
        with self._lock:
            return dict(self._counters, backend=self.name)


class ExplicitSetOracle(OracleBackend):
    name = 'explicit'

    def __init__(self, problem, solutions=None):
        super().__init__(problem)
        self.solutions = problem.explicit if solutions is None else solutions

    def _query(self, h, budget):
        start = time.monotonic()
        mask = survivor_mask(h, self.solutions)
        hits = np.flatnonzero(mask)
        stats = {'solver_time_s': time.monotonic() - start}
        if not hits.size:
            return OracleVerdict(Answer.UNSAT, stats=stats)
        witness = Assignment(self.solutions.rows[hits[0]], self.solutions.n)
        model = self._model_for(witness)
        return OracleVerdict(Answer.SAT, witness=witness, model=model, stats=stats)

    def _model_for(self, witness):
        return None


class ExhaustiveOracle(ExplicitSetOracle):
    """Lists every solution once (lazily), then answers by scanning."""

    name = 'exhaustive'

    def __init__(self, problem, max_vars=EXHAUSTIVE_MAX_VARS, table_limit=TABLE_ENUMERATION_LIMIT):
        OracleBackend.__init__(self, problem)
        self.max_vars = max_vars
        self.table_limit = table_limit
        self._solutions = None
        self._models = {}
        self._build_lock = threading.Lock()

    @property
    def solutions(self):
        with self._build_lock:
            if self._solutions is None:
                self._solutions = self._enumerate()
        return self._solutions

    def _enumerate(self):
        problem = self.problem
        if problem.explicit is not None:
            return problem.explicit
        if problem.table is not None:
            from xorcount.tables import enumerate_table_assignments
            return enumerate_table_assignments(problem.table, problem.encoding, limit=self.table_limit)
        num_vars = problem.cnf.num_vars
        if num_vars > self.max_vars:
            raise CapacityError(f"exhaustive backend is capped at {self.max_vars} variables, CNF has {num_vars}",
                                estimate=1 << num_vars)
        projection = np.uint64((1 << problem.n) - 1)
        found = []
        for start in range(0, 1 << num_vars, _LANE_BLOCK):
            lanes = np.arange(start, min(1 << num_vars, start + _LANE_BLOCK), dtype=np.uint64)
            found.append(lanes[problem.cnf.satisfied_mask(lanes)] & projection)
        values = np.unique(np.concatenate(found)) if found else np.zeros(0, dtype=np.uint64)
        log_debug(f"exhaustive backend listed {values.size} projected solutions", context=problem.name)
        return ExplicitSet(values[:, None], problem.n)

    def _model_for(self, witness):
        problem = self.problem
        if problem.cnf is None:
            return None
        if problem.table is not None:
            from xorcount.tables import complete_model
            return complete_model(problem.encoding, witness.to_bits())
        return self._complete_cnf_model(witness)

    def _complete_cnf_model(self, witness):
        formula = self.problem.cnf
        base = witness.to_int()
        extra = formula.num_vars - self.problem.n
        for high in range(1 << extra):
            value = base | (high << self.problem.n)
            if formula.satisfied_mask(np.array([value], dtype=np.uint64))[0]:
                return tuple(bool((value >> i) & 1) for i in range(formula.num_vars))
        return None


class ExternalSolverOracle(OracleBackend):
    name = 'external'

    def __init__(self, problem, command, profile=None, native_xor=None, chunk=DEFAULT_CHUNK):
        super().__init__(problem)
        if problem.cnf is None:
            raise ParameterError("the external backend needs a CNF or table problem")
        if '{in}' not in command:
            raise ParameterError(f"solver command must contain the '{{in}}' placeholder: {command!r}")
        self.command = command
        self.profile = profile or SOLVER_PROFILES['cryptominisat']
        self.native_xor = self.profile.native_xor if native_xor is None else native_xor
        self.chunk = chunk

    def _query(self, h, budget):
        instance = conjoin(self.problem.cnf, h, native_xor=self.native_xor, chunk=self.chunk)
        verdict = run_external(instance, self.command, budget, self.profile, self.native_xor, self.chunk)
        if verdict.answer != Answer.SAT:
            return verdict
        witness = Assignment.from_bits(int(v) for v in verdict.model[:self.problem.n])
        return OracleVerdict(Answer.SAT, witness=witness, model=verdict.model, stats=verdict.stats)


def make_oracle(problem, solver=None, profile='cryptominisat', native_xor=None, chunk=DEFAULT_CHUNK,
                max_vars=EXHAUSTIVE_MAX_VARS):
    """Pick a backend: scan for explicit sets, a solver when configured, else enumeration."""
    if problem.explicit is not None:
        return ExplicitSetOracle(problem)
    if solver:
        if profile not in SOLVER_PROFILES:
            raise ParameterError(f"unknown solver profile {profile!r}; choose from {sorted(SOLVER_PROFILES)}")
        return ExternalSolverOracle(problem, solver, SOLVER_PROFILES[profile], native_xor, chunk)
    return ExhaustiveOracle(problem, max_vars=max_vars)


def has_survivor(problem, h, budget=None, oracle=None):
    """sat iff some x in S has h(x) = 0."""
    oracle = oracle or make_oracle(problem)
    return oracle.has_survivor(h, budget)
