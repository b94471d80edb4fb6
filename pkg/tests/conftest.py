import shlex
import sys
import textwrap
from pathlib import Path

import pytest

from utils.logger import clear_log_notifications, configure_log_dir
from xorcount.dimacs import CnfFormula
from xorcount.gf2hash import ExplicitSet
from xorcount.oracle import CountingProblem

DATA_DIR = Path(__file__).parent / "data"

BRUTE_FORCE_SOLVER = textwrap.dedent("""
    import sys

    def main(path):
        clauses, xors, num_vars = [], [], 0
        with open(path) as f:
            for raw in f:
                line = raw.strip()
                if not line or line.startswith('c'):
                    continue
                if line.startswith('p'):
                    num_vars = int(line.split()[2])
                    continue
                if line.startswith('x'):
                    lits = [int(t) for t in line[1:].split()][:-1]
                    rhs = 1
                    for lit in lits:
                        if lit < 0:
                            rhs ^= 1
                    xors.append(([abs(l) for l in lits], rhs))
                    continue
                clauses.append([int(t) for t in line.split()][:-1])
        for bits in range(1 << num_vars):
            def val(v):
                return (bits >> (v - 1)) & 1
            if all(any(val(abs(l)) == (l > 0) for l in c) for c in clauses) and \\
                    all(sum(val(v) for v in vs) % 2 == rhs for vs, rhs in xors):
                print('c brute force')
                print('s SATISFIABLE')
                print('v ' + ' '.join(str(v if val(v) else -v) for v in range(1, num_vars + 1)) + ' 0')
                return 10
        print('s UNSATISFIABLE')
        return 20

    sys.exit(main(sys.argv[1]))
""")

SLEEPING_SOLVER = "import time\ntime.sleep(30)\n"
CRASHING_SOLVER = "import sys\nsys.stderr.write('segmentation fault\\n')\nsys.exit(3)\n"
GARBLED_SOLVER = "print('s MAYBE')\n"
LYING_SOLVER = "import sys\nprint('s SATISFIABLE')\nprint('v 1 0')\nsys.exit(10)\n"
MODELLESS_SOLVER = "import sys\nprint('s SATISFIABLE')\nsys.exit(10)\n"


def _solver_command(tmp_path, name, source):
    script = tmp_path / f"{name}.py"
    script.write_text(source)
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(script))} {{in}}"


@pytest.fixture(scope="session", autouse=True)
def temp_log_dir(tmp_path_factory):
    """Keep test logs out of the working tree."""
    path = tmp_path_factory.mktemp("logs")
    configure_log_dir(path)
    return path


@pytest.fixture(autouse=True)
def fresh_notifications():
    clear_log_notifications()
    yield
    clear_log_notifications()


@pytest.fixture
def fake_solver(tmp_path):
    return _solver_command(tmp_path, "brute_force_solver", BRUTE_FORCE_SOLVER)


@pytest.fixture
def sleeping_solver(tmp_path):
    return _solver_command(tmp_path, "sleeping_solver", SLEEPING_SOLVER)


@pytest.fixture
def crashing_solver(tmp_path):
    return _solver_command(tmp_path, "crashing_solver", CRASHING_SOLVER)


@pytest.fixture
def garbled_solver(tmp_path):
    return _solver_command(tmp_path, "garbled_solver", GARBLED_SOLVER)


@pytest.fixture
def lying_solver(tmp_path):
    return _solver_command(tmp_path, "lying_solver", LYING_SOLVER)


@pytest.fixture
def modelless_solver(tmp_path):
    return _solver_command(tmp_path, "modelless_solver", MODELLESS_SOLVER)


@pytest.fixture
def small_cnf():
    """(x1 v x2) & (-x1 v x3) & (x1 XOR x4 = 1) over four variables."""
    return CnfFormula.build(4, [[1, 2], [-1, 3]], [([1, 4], 1)])


@pytest.fixture
def small_cnf_problem(small_cnf):
    return CountingProblem.from_cnf(small_cnf, name="small")


@pytest.fixture
def set_1024():
    return ExplicitSet.random_subset(16, 1024, seed=2024)


@pytest.fixture
def set_256():
    return ExplicitSet.random_subset(16, 256, seed=7)


@pytest.fixture
def explicit_file(tmp_path):
    """Writes an ExplicitSet in the .bits format and returns the path."""
    def write(s, name="set.bits"):
        path = tmp_path / name
        lines = [f"n {s.n}"] + [a.to_string() for a in s]
        path.write_text("\n".join(lines) + "\n")
        return path
    return write
