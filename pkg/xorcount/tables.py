"""Contingency tables as counting problems.

A spec fixes the row and column sums of an r x c table of nonnegative
integers (or 0/1 entries when ``binary``), with optional structural zeros.
``brute_force_count`` gives the exact number of tables, ``encode_to_cnf``
lowers the spec to clauses whose cell-bit projection is in bijection with the
tables, so the hashing bounds apply to it.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from utils.logger import log_debug, log_warning
from xorcount.dimacs import CnfFormula, VariablePool
from xorcount.errors import CapacityError, DimensionError, ParameterError, SpecFormatError
from xorcount.gf2hash import ExplicitSet, HashParams, pack_rows, sample_hash
from xorcount.oracle import CountingProblem

BRUTE_FORCE_MAX_CELLS = 64
BRUTE_FORCE_MAX_SPACE = 10 ** 9
PROJECTED_COUNT_MAX_BITS = 22
SUMMARY_COLUMNS = ['Dataset', 'size', 'f*', 'LB(f)', 'log2|S|', 'UB', 'trivial UB']


@dataclass(frozen=True)
class ContingencyTableSpec:
    rows: int
    cols: int
    row_marginals: tuple
    col_marginals: tuple
    binary: bool = False
    structural_zeros: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'row_marginals', tuple(int(v) for v in self.row_marginals))
        object.__setattr__(self, 'col_marginals', tuple(int(v) for v in self.col_marginals))
        object.__setattr__(self, 'structural_zeros', frozenset((int(i), int(j)) for i, j in self.structural_zeros))
        if self.rows < 0 or self.cols < 0:
            raise DimensionError(f"table shape must be nonnegative, got {self.rows}x{self.cols}")
        if len(self.row_marginals) != self.rows or len(self.col_marginals) != self.cols:
            raise DimensionError(f"marginal lengths {len(self.row_marginals)}/{len(self.col_marginals)} "
                                 f"do not match shape {self.rows}x{self.cols}")
        if any(v < 0 for v in self.row_marginals + self.col_marginals):
            raise ParameterError("marginals must be nonnegative")
        for i, j in self.structural_zeros:
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise DimensionError(f"structural zero ({i}, {j}) outside the {self.rows}x{self.cols} table")

    @property
    def total(self):
        return sum(self.row_marginals)

    def is_conserved(self):
        return sum(self.row_marginals) == sum(self.col_marginals)

    def is_binary_feasible(self):
        if not self.binary:
            return True
        return (all(r <= self.cols for r in self.row_marginals)
                and all(c <= self.rows for c in self.col_marginals))

    def cap(self, i, j):
        """Largest value cell (i, j) can take."""
        if (i, j) in self.structural_zeros:
            return 0
        cap = min(self.row_marginals[i], self.col_marginals[j])
        return min(cap, 1) if self.binary else cap


def blocked_matrix_spec(n):
    """n x n binary table with marginals {1, n-1, ..., n-1}; it has 1 + (n-1)^2 fillings."""
    if n < 2:
        raise ParameterError(f"blocked matrix needs n >= 2, got {n}")
    marginals = (1,) + (n - 1,) * (n - 1)
    return ContingencyTableSpec(n, n, marginals, marginals, binary=True)


def transpose(spec):
    return ContingencyTableSpec(spec.cols, spec.rows, spec.col_marginals, spec.row_marginals, spec.binary,
                                frozenset((j, i) for i, j in spec.structural_zeros))


def permute(spec, row_perm, col_perm):
    """Row k of the result is row ``row_perm[k]`` of ``spec``; columns likewise."""
    if sorted(row_perm) != list(range(spec.rows)) or sorted(col_perm) != list(range(spec.cols)):
        raise ParameterError("row_perm and col_perm must be permutations of the row and column indices")
    row_pos = {old: new for new, old in enumerate(row_perm)}
    col_pos = {old: new for new, old in enumerate(col_perm)}
    return ContingencyTableSpec(spec.rows, spec.cols,
                                [spec.row_marginals[k] for k in row_perm],
                                [spec.col_marginals[k] for k in col_perm],
                                spec.binary,
                                frozenset((row_pos[i], col_pos[j]) for i, j in spec.structural_zeros))


def with_structural_zero(spec, i, j):
    return ContingencyTableSpec(spec.rows, spec.cols, spec.row_marginals, spec.col_marginals, spec.binary,
                                spec.structural_zeros | {(i, j)})


def parse_table_spec(text):
    """Read the line format: 'rows r cols c', 'R: ...', 'C: ...', 'binary: 0|1', 'Z: i j' (0-based)."""
    shape = None
    row_marginals = col_marginals = None
    binary = False
    zeros = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith('rows'):
                parts = line.split()
                if len(parts) != 4 or parts[2] != 'cols':
                    raise SpecFormatError(f"line {lineno}: expected 'rows r cols c', got {raw!r}")
                shape = (int(parts[1]), int(parts[3]))
            elif line.startswith('R:'):
                row_marginals = [int(t) for t in line[2:].split()]
            elif line.startswith('C:'):
                col_marginals = [int(t) for t in line[2:].split()]
            elif line.startswith('binary:'):
                flag = line[len('binary:'):].strip()
                if flag not in ('0', '1'):
                    raise SpecFormatError(f"line {lineno}: binary must be 0 or 1, got {flag!r}")
                binary = flag == '1'
            elif line.startswith('Z:'):
                parts = line[2:].split()
                if len(parts) != 2:
                    raise SpecFormatError(f"line {lineno}: expected 'Z: i j', got {raw!r}")
                zeros.append((int(parts[0]), int(parts[1])))
            else:
                raise SpecFormatError(f"line {lineno}: unrecognized line {raw!r}")
        except ValueError as e:
            if isinstance(e, SpecFormatError):
                raise
            raise SpecFormatError(f"line {lineno}: non-integer value in {raw!r}") from e
    if shape is None or row_marginals is None or col_marginals is None:
        raise SpecFormatError("table spec needs 'rows r cols c', 'R:' and 'C:' lines")
    try:
        return ContingencyTableSpec(shape[0], shape[1], row_marginals, col_marginals, binary, frozenset(zeros))
    except (DimensionError, ParameterError) as e:
        raise SpecFormatError(str(e)) from e


def format_table_spec(spec):
    lines = [f"rows {spec.rows} cols {spec.cols}",
             "R: " + ' '.join(str(v) for v in spec.row_marginals),
             "C: " + ' '.join(str(v) for v in spec.col_marginals),
             f"binary: {int(spec.binary)}"]
    lines.extend(f"Z: {i} {j}" for i, j in sorted(spec.structural_zeros))
    return '\n'.join(lines) + '\n'


def read_table_spec(path):
    with open(path, 'r') as f:
        return parse_table_spec(f.read())


# --- exact counting -------------------------------------------------------

def _validate_for_counting(spec):
    if not spec.is_conserved():
        log_warning(f"row sum {sum(spec.row_marginals)} != column sum {sum(spec.col_marginals)}; count is 0",
                    context="tables")
        return False
    if not spec.is_binary_feasible():
        log_warning("binary table has a marginal larger than its row/column length; count is 0", context="tables")
        return False
    return True


def _row_compositions(total, bounds):
    """Vectors v with sum(v) = total and 0 <= v[j] <= bounds[j], lexicographic."""
    suffix = [0] * (len(bounds) + 1)
    for j in range(len(bounds) - 1, -1, -1):
        suffix[j] = suffix[j + 1] + bounds[j]
    if total > suffix[0]:
        return
    current = [0] * len(bounds)

    def walk(j, remaining):
        if j == len(bounds):
            if remaining == 0:
                yield tuple(current)
            return
        low = max(0, remaining - suffix[j + 1])
        for v in range(low, min(bounds[j], remaining) + 1):
            current[j] = v
            yield from walk(j + 1, remaining - v)
        current[j] = 0

    yield from walk(0, total)


def _composition_count(total, bounds):
    """Coefficient of x^total in prod_j (1 + x + ... + x^bounds[j])."""
    poly = [1]
    for b in bounds:
        nxt = [0] * min(total + 1, len(poly) + b)
        for k, coef in enumerate(poly):
            if coef:
                for v in range(0, min(b, total - k) + 1):
                    nxt[k + v] += coef
        poly = nxt
    return poly[total] if total < len(poly) else 0


def _column_classes(spec):
    """Columns sharing a structural-zero pattern are interchangeable for the recursion."""
    patterns = {}
    return [patterns.setdefault(tuple((i, j) in spec.structural_zeros for i in range(spec.rows)), len(patterns))
            for j in range(spec.cols)]


def estimate_search_space(spec):
    """Upper estimate of composition visits made by brute_force_count."""
    classes = _column_classes(spec)
    state_bound = 1
    for cls in set(classes):
        members = [spec.col_marginals[j] for j, c in enumerate(classes) if c == cls]
        state_bound *= math.comb(max(members) + len(members), len(members))
    work = 0
    prefix = 1
    for i in range(spec.rows):
        comps = _composition_count(spec.row_marginals[i], [spec.cap(i, j) for j in range(spec.cols)])
        work += comps * min(prefix, state_bound)
        prefix *= max(1, comps)
    return work


def _row_bounds(spec, i, remaining):
    return [min(spec.cap(i, j), remaining[j]) for j in range(spec.cols)]


def _tail_capacity(spec):
    """tail[i][j]: most that rows i.. can still put into column j."""
    tail = [[0] * spec.cols for _ in range(spec.rows + 1)]
    for i in range(spec.rows - 1, -1, -1):
        for j in range(spec.cols):
            tail[i][j] = tail[i + 1][j] + spec.cap(i, j)
    return tail


def brute_force_count(spec, max_cells=BRUTE_FORCE_MAX_CELLS, max_space=BRUTE_FORCE_MAX_SPACE):
    """Exact number of tables, by memoized row-by-row enumeration.

    Either guard may be disabled with None.
    """
    if not _validate_for_counting(spec):
        return 0
    if max_cells is not None and spec.rows * spec.cols > max_cells:
        raise CapacityError(f"{spec.rows}x{spec.cols} table exceeds {max_cells} cells",
                            estimate=spec.rows * spec.cols)
    if max_space is not None:
        estimate = estimate_search_space(spec)
        if estimate > max_space:
            raise CapacityError(f"search space estimate {estimate} exceeds {max_space}", estimate=estimate)

    classes = _column_classes(spec)
    tail = _tail_capacity(spec)
    memo = {}

    def count(i, remaining):
        if i == spec.rows:
            return 1 if not any(remaining) else 0
        key = (i, tuple(sorted(zip(classes, remaining))))
        if key in memo:
            return memo[key]
        total = 0
        for row in _row_compositions(spec.row_marginals[i], _row_bounds(spec, i, remaining)):
            left = tuple(r - v for r, v in zip(remaining, row))
            if all(left[j] <= tail[i + 1][j] for j in range(spec.cols)):
                total += count(i + 1, left)
        memo[key] = total
        return total

    result = count(0, spec.col_marginals)
    log_debug(f"brute force visited {len(memo)} states", context=f"{spec.rows}x{spec.cols}")
    return result


def enumerate_tables(spec):
    """Every table meeting the spec, as tuples of row tuples, in lexicographic order."""
    if not spec.is_conserved() or not spec.is_binary_feasible():
        return
    tail = _tail_capacity(spec)
    chosen = []

    def walk(i, remaining):
        if i == spec.rows:
            if not any(remaining):
                yield tuple(chosen)
            return
        for row in _row_compositions(spec.row_marginals[i], _row_bounds(spec, i, remaining)):
            left = tuple(r - v for r, v in zip(remaining, row))
            if all(left[j] <= tail[i + 1][j] for j in range(spec.cols)):
                chosen.append(row)
                yield from walk(i + 1, left)
                chosen.pop()

    yield from walk(0, spec.col_marginals)


# --- CNF encoding ---------------------------------------------------------

@dataclass(frozen=True)
class CellEncoding:
    """Where each cell's bits live; variables 1..n_cell_bits are cell bits, the rest auxiliaries."""

    spec: ContingencyTableSpec
    widths: dict
    var_map: dict
    n_cell_bits: int
    num_vars: int
    gates: tuple = ()
    num_clauses: int = 0

    def stats(self):
        return {'cell_bits': self.n_cell_bits, 'aux_vars': self.num_vars - self.n_cell_bits,
                'clauses': self.num_clauses, 'gates': len(self.gates)}


def cell_width(spec, i, j):
    if (i, j) in spec.structural_zeros:
        return 0
    return max(1, spec.cap(i, j).bit_length())


class _Circuit:
    """Tseitin gates over literals; None stands for constant false."""

    def __init__(self, top):
        self.pool = VariablePool(top)
        self.clauses = []
        self.gates = []

    def contradiction(self):
        v = self.pool.new()
        self.clauses.extend([(v,), (-v,)])

    def gate_and(self, a, b):
        if a is None or b is None:
            return None
        o = self.pool.new()
        self.clauses.extend([(-o, a), (-o, b), (o, -a, -b)])
        self.gates.append(('and', o, a, b))
        return o

    def gate_or(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        o = self.pool.new()
        self.clauses.extend([(o, -a), (o, -b), (-o, a, b)])
        self.gates.append(('or', o, a, b))
        return o

    def gate_xor(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        o = self.pool.new()
        self.clauses.extend([(-o, a, b), (-o, -a, -b), (o, -a, b), (o, a, -b)])
        self.gates.append(('xor', o, a, b))
        return o

    def full_adder(self, a, b, carry):
        partial = self.gate_xor(a, b)
        total = self.gate_xor(partial, carry)
        carry_out = self.gate_or(self.gate_and(a, b), self.gate_and(partial, carry))
        return total, carry_out

    def add(self, xs, ys):
        """Ripple-carry sum, LSB first, one bit wider than the wider input."""
        width = max(len(xs), len(ys))
        xs = list(xs) + [None] * (width - len(xs))
        ys = list(ys) + [None] * (width - len(ys))
        out = []
        carry = None
        for a, b in zip(xs, ys):
            s, carry = self.full_adder(a, b, carry)
            out.append(s)
        out.append(carry)
        return out

    def sum_tree(self, vectors):
        vectors = [list(v) for v in vectors]
        if not vectors:
            return []
        while len(vectors) > 1:
            paired = [self.add(vectors[k], vectors[k + 1]) for k in range(0, len(vectors) - 1, 2)]
            if len(vectors) % 2:
                paired.append(vectors[-1])
            vectors = paired
        return vectors[0]

    def equals_constant(self, bits, value):
        if value >> len(bits):
            self.contradiction()
            return
        for k, bit in enumerate(bits):
            want = (value >> k) & 1
            if bit is None:
                if want:
                    self.contradiction()
                    return
                continue
            self.clauses.append((bit,) if want else (-bit,))

    def at_most_constant(self, bits, value):
        """x <= value: for each 0 bit k of value, x_k = 1 forces some higher 1 bit of value to be 0 in x."""
        for k, bit in enumerate(bits):
            if bit is None or (value >> k) & 1:
                continue
            higher = []
            trivially_true = False
            for p in range(k + 1, len(bits)):
                if (value >> p) & 1:
                    if bits[p] is None:
                        trivially_true = True
                        break
                    higher.append(-bits[p])
            if not trivially_true:
                self.clauses.append(tuple([-bit] + higher))


def encode_to_cnf(spec, name=''):
    """Lower ``spec`` to clauses; returns (CountingProblem, CellEncoding)."""
    if not spec.is_conserved():
        log_warning("row and column sums differ; the encoding is unsatisfiable", context=name or "tables")
    widths = {}
    var_map = {}
    top = 0
    for i in range(spec.rows):
        for j in range(spec.cols):
            w = cell_width(spec, i, j)
            widths[(i, j)] = w
            var_map[(i, j)] = tuple(range(top + 1, top + w + 1))
            top += w
    n_cell_bits = top

    circuit = _Circuit(top)
    for (i, j), variables in var_map.items():
        if variables:
            circuit.at_most_constant(list(variables), spec.cap(i, j))
    for i in range(spec.rows):
        cells = [var_map[(i, j)] for j in range(spec.cols) if var_map[(i, j)]]
        circuit.equals_constant(circuit.sum_tree(cells), spec.row_marginals[i])
    for j in range(spec.cols):
        cells = [var_map[(i, j)] for i in range(spec.rows) if var_map[(i, j)]]
        circuit.equals_constant(circuit.sum_tree(cells), spec.col_marginals[j])

    formula = CnfFormula(circuit.pool.top, tuple(circuit.clauses))
    encoding = CellEncoding(spec, widths, var_map, n_cell_bits, circuit.pool.top, tuple(circuit.gates),
                            len(circuit.clauses))
    problem = CountingProblem(n=n_cell_bits, cnf=formula, table=spec, encoding=encoding, name=name)
    log_debug(f"encoded {spec.rows}x{spec.cols} table: {encoding.stats()}", context=name or "tables")
    return problem, encoding


def table_to_bits(encoding, table):
    bits = [0] * encoding.n_cell_bits
    for (i, j), variables in encoding.var_map.items():
        value = table[i][j]
        if value >> len(variables):
            raise DimensionError(f"cell ({i}, {j}) value {value} does not fit in {len(variables)} bits")
        for k, v in enumerate(variables):
            bits[v - 1] = (value >> k) & 1
    return bits


def bits_to_table(encoding, bits):
    spec = encoding.spec
    table = [[0] * spec.cols for _ in range(spec.rows)]
    for (i, j), variables in encoding.var_map.items():
        table[i][j] = sum(int(bits[v - 1]) << k for k, v in enumerate(variables))
    return tuple(tuple(row) for row in table)


def _evaluate_gates(encoding, values):
    """Fill auxiliary gate outputs in place; values[v] holds variable v (index 0 unused)."""
    for kind, out, a, b in encoding.gates:
        x = values[abs(a)] if a > 0 else ~values[abs(a)]
        y = values[abs(b)] if b > 0 else ~values[abs(b)]
        if kind == 'and':
            values[out] = x & y
        elif kind == 'or':
            values[out] = x | y
        else:
            values[out] = x ^ y


def complete_model(encoding, cell_bits):
    """Full model for one cell assignment; gate outputs follow from the cells."""
    values = [np.zeros(1, dtype=bool) for _ in range(encoding.num_vars + 1)]
    for v, bit in enumerate(cell_bits, start=1):
        values[v] = np.array([bool(bit)])
    _evaluate_gates(encoding, values)
    return tuple(bool(values[v][0]) for v in range(1, encoding.num_vars + 1))


def projected_model_count(problem, encoding, max_bits=PROJECTED_COUNT_MAX_BITS):
    """Models of the encoding projected onto cell bits, by evaluating every cell assignment."""
    n = encoding.n_cell_bits
    if n > max_bits:
        raise CapacityError(f"{n} cell bits exceeds the {max_bits}-bit projection limit", estimate=1 << n)
    lanes = np.arange(1 << n, dtype=np.uint64)
    values = [np.zeros(lanes.shape, dtype=bool) for _ in range(encoding.num_vars + 1)]
    for v in range(1, n + 1):
        values[v] = ((lanes >> np.uint64(v - 1)) & np.uint64(1)).astype(bool)
    _evaluate_gates(encoding, values)
    ok = np.ones(lanes.shape, dtype=bool)
    for clause in problem.cnf.clauses:
        sat = np.zeros(lanes.shape, dtype=bool)
        for lit in clause:
            sat |= values[lit] if lit > 0 else ~values[-lit]
        ok &= sat
    return int(np.count_nonzero(ok))


def enumerate_table_assignments(spec, encoding, limit=None):
    """Cell-bit images of every table, as an ExplicitSet over n_cell_bits."""
    rows = []
    for table in enumerate_tables(spec):
        rows.append(table_to_bits(encoding, table))
        if limit is not None and len(rows) > limit:
            raise CapacityError(f"more than {limit} tables to enumerate", estimate=len(rows))
    n = encoding.n_cell_bits
    if not rows:
        return ExplicitSet(np.zeros((0, max(1, -(-n // 64))), dtype=np.uint64), n)
    return ExplicitSet(pack_rows(np.asarray(rows, dtype=np.uint8)), n)


def hash_over_cells(problem, m, f, seed):
    """Sample a hash whose columns are exactly the cell bits."""
    if problem.encoding is None:
        raise ParameterError("hash_over_cells needs a table problem with its encoding")
    return sample_hash(HashParams(problem.encoding.n_cell_bits, m, f, seed))


@dataclass
class SummaryRow:
    dataset: str
    size: str
    fstar: float = None
    lower: float = None
    exact: float = None
    upper: float = None
    trivial_upper: int = None
    extra: dict = field(default_factory=dict)

    def to_record(self):
        return dict(zip(SUMMARY_COLUMNS, [self.dataset, self.size, self.fstar, self.lower, self.exact,
                                          self.upper, self.trivial_upper]))


def summary_rows_to_csv(rows, path=None):
    """Bounds summary, one row per dataset; returns the DataFrame and writes it when ``path`` is set."""
    records = [r.to_record() if isinstance(r, SummaryRow) else {k: r.get(k) for k in SUMMARY_COLUMNS}
               for r in rows]
    frame = pd.DataFrame.from_records(records, columns=SUMMARY_COLUMNS)
    if path is not None:
        frame.to_csv(path, index=False, float_format='%.4f')
    return frame
