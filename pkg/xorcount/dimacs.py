"""DIMACS CNF with extended parity lines.

Parity convention (see docs/xline_format.md): ``x 1 2 0`` asserts
x1 XOR x2 = 1, and a leading ``-`` on the first literal flips the right-hand
side to 0. In general every negated literal flips the right-hand side once, so
parsing folds signs into ``rhs`` and stores positive variables only.
"""
from dataclasses import dataclass

import numpy as np

from utils.logger import log_warning
from xorcount.errors import ParameterError, SpecFormatError


@dataclass(frozen=True)
class CnfFormula:
    num_vars: int
    clauses: tuple = ()
    xors: tuple = ()

    @classmethod
    def build(cls, num_vars, clauses=(), xors=()):
        """Normalize literal lists: duplicate literals dropped, parity signs folded."""
        return cls(num_vars,
                   tuple(_normalize_clause(c) for c in clauses),
                   tuple(_normalize_xor(lits, rhs) for lits, rhs in xors))

    def __post_init__(self):
        for clause in self.clauses:
            if not clause:
                raise SpecFormatError("zero-width clause")
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise SpecFormatError(f"literal {lit} outside 1..{self.num_vars}")
        for variables, rhs in self.xors:
            if rhs not in (0, 1):
                raise SpecFormatError(f"parity right-hand side must be 0 or 1, got {rhs}")
            for v in variables:
                if v < 1 or v > self.num_vars:
                    raise SpecFormatError(f"parity variable {v} outside 1..{self.num_vars}")

    def with_additions(self, num_vars=None, clauses=(), xors=()):
        return CnfFormula(self.num_vars if num_vars is None else num_vars,
                          self.clauses + tuple(clauses), self.xors + tuple(xors))

    def is_satisfied(self, model):
        """model[v - 1] is the truth value of variable v."""
        for clause in self.clauses:
            if not any(bool(model[abs(l) - 1]) == (l > 0) for l in clause):
                return False
        for variables, rhs in self.xors:
            if sum(bool(model[v - 1]) for v in variables) % 2 != rhs:
                return False
        return True

    def satisfied_mask(self, values):
        """Vectorized check over uint64 lanes where bit v - 1 holds variable v."""
        if self.num_vars > 64:
            raise ParameterError("lane evaluation supports at most 64 variables")
        values = np.asarray(values, dtype=np.uint64)
        ok = np.ones(values.shape, dtype=bool)
        for clause in self.clauses:
            sat = np.zeros(values.shape, dtype=bool)
            for lit in clause:
                bit = ((values >> np.uint64(abs(lit) - 1)) & np.uint64(1)).astype(bool)
                sat |= bit if lit > 0 else ~bit
            ok &= sat
        for variables, rhs in self.xors:
            mask = np.uint64(sum(1 << (v - 1) for v in variables))
            ok &= (np.bitwise_count(values & mask) & 1) == rhs
        return ok


def _normalize_clause(literals):
    seen = []
    for lit in literals:
        lit = int(lit)
        if lit not in seen:
            seen.append(lit)
    return tuple(seen)


def _normalize_xor(literals, rhs):
    rhs = int(rhs) & 1
    odd = []
    for lit in literals:
        lit = int(lit)
        if lit < 0:
            rhs ^= 1
        v = abs(lit)
        if v in odd:
            odd.remove(v)
        else:
            odd.append(v)
    return tuple(odd), rhs


class VariablePool:
    """Hands out fresh variable indices above the current top."""

    def __init__(self, top):
        self.top = top

    def new(self):
        self.top += 1
        return self.top


def parse(text):
    """Parse DIMACS CNF text (with optional x-lines) into a normalized CnfFormula."""
    header = None
    clauses = []
    xors = []
    pending = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('c') or line.startswith('%'):
            continue
        if line.startswith('p'):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != 'cnf':
                raise SpecFormatError(f"line {lineno}: invalid problem line {line!r}")
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise SpecFormatError(f"line {lineno}: invalid problem line {line!r}")
            if header[0] < 0 or header[1] < 0:
                raise SpecFormatError(f"line {lineno}: negative counts in {line!r}")
            continue
        if header is None:
            raise SpecFormatError(f"line {lineno}: clause before the 'p cnf' header")
        is_xor = line.startswith('x')
        if is_xor:
            if pending:
                raise SpecFormatError(f"line {lineno}: parity line inside an unterminated clause")
            line = line[1:]
        try:
            tokens = [int(t) for t in line.split()]
        except ValueError:
            raise SpecFormatError(f"line {lineno}: non-integer literal in {raw!r}")
        for lit in tokens:
            if lit != 0 and abs(lit) > header[0]:
                raise SpecFormatError(f"line {lineno}: literal {lit} outside 1..{header[0]}")
        if is_xor:
            if not tokens or tokens[-1] != 0 or 0 in tokens[:-1]:
                raise SpecFormatError(f"line {lineno}: parity line must end with a single 0")
            xors.append(_normalize_xor(tokens[:-1], 1))
            continue
        for lit in tokens:
            if lit == 0:
                if not pending:
                    raise SpecFormatError(f"line {lineno}: zero-width clause")
                clauses.append(_normalize_clause(pending))
                pending = []
            else:
                pending.append(lit)
    if header is None:
        raise SpecFormatError("missing 'p cnf' header")
    if pending:
        raise SpecFormatError("last clause is not terminated by 0")
    declared = header[1]
    found = len(clauses) + len(xors)
    if declared != found and declared != len(clauses):
        log_warning(f"header declares {declared} clauses, found {found}", context="dimacs.parse")
    return CnfFormula(header[0], tuple(clauses), tuple(xors))


def _xor_line(variables, rhs):
    literals = [str(v) for v in variables]
    if rhs == 0:
        literals[0] = f"-{literals[0]}"
    return 'x' + ' '.join(literals) + ' 0'


def lower_xors(formula, chunk=6, keep_native=False):
    """Route parity constraints through clause expansion.

    With ``keep_native`` only the empty-support constraints are lowered (an
    unsatisfiable one becomes a contradiction on a fresh variable); every other
    constraint stays a parity constraint.
    """
    from xorcount.oracle import xor_to_cnf

    pool = VariablePool(formula.num_vars)
    clauses = list(formula.clauses)
    xors = []
    for variables, rhs in formula.xors:
        if keep_native and variables:
            xors.append((variables, rhs))
            continue
        for clause in xor_to_cnf(variables, rhs, chunk, pool):
            if clause:
                clauses.append(tuple(clause))
            else:
                v = pool.new()
                clauses.extend([(v,), (-v,)])
    return CnfFormula(pool.top, tuple(clauses), tuple(xors))


def emit(formula, native_xor=True, chunk=6):
    """Canonical DIMACS text: clauses in stored order, x-lines last, LF endings."""
    if formula.xors:
        formula = lower_xors(formula, chunk=chunk, keep_native=native_xor)
    lines = [f"p cnf {formula.num_vars} {len(formula.clauses) + len(formula.xors)}"]
    lines.extend(' '.join(str(l) for l in clause) + ' 0' for clause in formula.clauses)
    lines.extend(_xor_line(variables, rhs) for variables, rhs in formula.xors)
    return '\n'.join(lines) + '\n'


def read_cnf(path):
    with open(path, 'r') as f:
        return parse(f.read())


def write_cnf(path, formula, native_xor=True, chunk=6):
    with open(path, 'w', newline='\n') as f:
        f.write(emit(formula, native_xor=native_xor, chunk=chunk))
