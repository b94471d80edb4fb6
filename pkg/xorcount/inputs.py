"""Load a counting problem from a file, by extension or explicit kind."""
from pathlib import Path

from xorcount.dimacs import read_cnf
from xorcount.errors import ParameterError, SpecFormatError
from xorcount.gf2hash import ExplicitSet
from xorcount.oracle import CountingProblem
from xorcount.tables import encode_to_cnf, read_table_spec

EXTENSIONS = {
    '.cnf': 'cnf',
    '.dimacs': 'cnf',
    '.table': 'table',
    '.tbl': 'table',
    '.bits': 'explicit',
    '.set': 'explicit',
}


def parse_explicit_set(text):
    """One 0/1 string per line; an optional 'n <width>' line fixes the width (needed for empty sets)."""
    width = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('n '):
            try:
                width = int(line[2:])
            except ValueError as e:
                raise SpecFormatError(f"line {lineno}: bad width line {raw!r}") from e
            continue
        if set(line) - {'0', '1'}:
            raise SpecFormatError(f"line {lineno}: expected a 0/1 string, got {raw!r}")
        rows.append([int(ch) for ch in line])
    if width is None and not rows:
        raise SpecFormatError("empty explicit set needs an 'n <width>' line")
    width = len(rows[0]) if width is None else width
    if any(len(r) != width for r in rows):
        raise SpecFormatError(f"every element must have width {width}")
    return ExplicitSet.from_bits(rows, width)


def detect_kind(path):
    kind = EXTENSIONS.get(Path(path).suffix.lower())
    if kind is None:
        raise ParameterError(f"cannot tell the input kind of {path}; pass --kind cnf|table|explicit")
    return kind


def load_problem(path, kind=None):
    kind = kind or detect_kind(path)
    name = Path(path).stem
    if kind == 'cnf':
        return CountingProblem.from_cnf(read_cnf(path), name=name)
    if kind == 'table':
        problem, _ = encode_to_cnf(read_table_spec(path), name=name)
        return problem
    if kind == 'explicit':
        with open(path, 'r') as f:
            return CountingProblem.from_explicit(parse_explicit_set(f.read()), name=name)
    raise ParameterError(f"unknown input kind {kind!r}")
