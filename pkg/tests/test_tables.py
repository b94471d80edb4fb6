import math
import random
from pathlib import Path

import pandas as pd
import pytest

from utils.logger import get_recent_warnings
from xorcount.bounds import best_lower_bound
from xorcount.errors import CapacityError, SpecFormatError
from xorcount.oracle import ExhaustiveOracle, check_witness, conjoin, make_oracle
from xorcount.tables import (SUMMARY_COLUMNS, ContingencyTableSpec, SummaryRow, bits_to_table,
                             blocked_matrix_spec, brute_force_count, cell_width, complete_model, encode_to_cnf,
                             enumerate_tables, format_table_spec, hash_over_cells, parse_table_spec,
                             permute, projected_model_count, read_table_spec, summary_rows_to_csv,
                             table_to_bits, transpose, with_structural_zero)

DATA_DIR = Path(__file__).parent / "data"


def random_spec(rng, max_dim=3, max_value=3):
    """Marginals of a random table, so most specs are feasible."""
    rows, cols = rng.randint(1, max_dim), rng.randint(1, max_dim)
    binary = rng.random() < 0.4
    top = 1 if binary else max_value
    table = [[rng.randint(0, top) for _ in range(cols)] for _ in range(rows)]
    zeros = {(i, j) for i in range(rows) for j in range(cols) if table[i][j] == 0 and rng.random() < 0.3}
    return ContingencyTableSpec(rows, cols, [sum(r) for r in table], [sum(c) for c in zip(*table)], binary,
                                frozenset(zeros))


@pytest.mark.parametrize("n", range(3, 11))
def test_blocked_matrix_count(n):
    assert brute_force_count(blocked_matrix_spec(n), max_cells=None) == 1 + (n - 1) ** 2


def test_synth_8_file():
    spec = read_table_spec(DATA_DIR / "synth_8.table")
    assert spec == blocked_matrix_spec(8)
    count = brute_force_count(spec)
    assert count == 50
    assert math.log2(count) == pytest.approx(5.64, abs=0.01)


def test_synth_20_without_guards():
    count = brute_force_count(blocked_matrix_spec(20), max_cells=None, max_space=None)
    assert count == 362
    assert math.log2(count) == pytest.approx(8.50, abs=0.01)


def test_cell_guard():
    with pytest.raises(CapacityError) as info:
        brute_force_count(blocked_matrix_spec(9))
    assert info.value.estimate == 81


def test_single_cell_tables():
    assert brute_force_count(ContingencyTableSpec(1, 1, [5], [5])) == 1
    assert brute_force_count(ContingencyTableSpec(1, 1, [2], [2], binary=True)) == 0


def test_nonconserved_spec_counts_zero():
    spec = ContingencyTableSpec(2, 2, [1, 2], [1, 1])
    assert brute_force_count(spec) == 0
    assert get_recent_warnings()
    problem, encoding = encode_to_cnf(spec)
    assert projected_model_count(problem, encoding) == 0


def test_all_zero_marginals_have_one_model():
    spec = ContingencyTableSpec(2, 3, [0, 0], [0, 0, 0])
    problem, encoding = encode_to_cnf(spec)
    assert brute_force_count(spec) == 1
    assert projected_model_count(problem, encoding) == 1


def test_enumerate_tables_matches_count():
    rng = random.Random(9)
    for _ in range(40):
        spec = random_spec(rng)
        tables = list(enumerate_tables(spec))
        assert len(tables) == brute_force_count(spec)
        assert len(set(tables)) == len(tables)
        for table in tables:
            assert [sum(r) for r in table] == list(spec.row_marginals)
            assert [sum(c) for c in zip(*table)] == list(spec.col_marginals)
            assert all(table[i][j] == 0 for i, j in spec.structural_zeros)


def test_encoding_fidelity_on_random_specs():
    rng = random.Random(31)
    checked = 0
    while checked < 100:
        spec = random_spec(rng)
        problem, encoding = encode_to_cnf(spec)
        if encoding.n_cell_bits > 14:
            continue
        assert projected_model_count(problem, encoding) == brute_force_count(spec)
        checked += 1


def test_cell_widths():
    spec = ContingencyTableSpec(2, 2, [5, 1], [4, 2], structural_zeros={(1, 1)})
    assert cell_width(spec, 0, 0) == 3
    assert cell_width(spec, 0, 1) == 2
    assert cell_width(spec, 1, 0) == 1
    assert cell_width(spec, 1, 1) == 0
    _, encoding = encode_to_cnf(spec)
    assert encoding.n_cell_bits == 6
    assert encoding.num_vars >= encoding.n_cell_bits


def test_table_bits_round_trip_and_models():
    spec = ContingencyTableSpec(2, 3, [3, 2], [2, 2, 1])
    problem, encoding = encode_to_cnf(spec)
    for table in enumerate_tables(spec):
        bits = table_to_bits(encoding, table)
        assert bits_to_table(encoding, bits) == table
        assert problem.cnf.is_satisfied(complete_model(encoding, bits))


def test_transpose_and_permutation_invariance():
    rng = random.Random(77)
    for _ in range(30):
        spec = random_spec(rng, max_dim=4)
        count = brute_force_count(spec)
        assert brute_force_count(transpose(spec)) == count
        row_perm = rng.sample(range(spec.rows), spec.rows)
        col_perm = rng.sample(range(spec.cols), spec.cols)
        assert brute_force_count(permute(spec, row_perm, col_perm)) == count


def test_structural_zeros_never_increase_count():
    rng = random.Random(5)
    for _ in range(30):
        spec = random_spec(rng, max_dim=4)
        i, j = rng.randrange(spec.rows), rng.randrange(spec.cols)
        assert brute_force_count(with_structural_zero(spec, i, j)) <= brute_force_count(spec)


def test_parse_and_format():
    text = "# a small one\nrows 2 cols 3\nR: 3 2\nC: 2 2 1\nbinary: 0\nZ: 1 2\n"
    spec = parse_table_spec(text)
    assert spec.structural_zeros == frozenset({(1, 2)})
    assert parse_table_spec(format_table_spec(spec)) == spec


@pytest.mark.parametrize("text", [
    "rows 2\nR: 1 1\nC: 1 1\n",
    "rows 2 cols 2\nR: 1 1\n",
    "rows 2 cols 2\nR: 1 x\nC: 1 1\n",
    "rows 2 cols 2\nR: 1 1\nC: 1 1\nbinary: yes\n",
    "rows 2 cols 2\nR: 1 1 1\nC: 1 1\n",
    "rows 2 cols 2\nR: 1 1\nC: 1 1\nZ: 5 5\n",
    "rows 2 cols 2\nR: 1 1\nC: 1 1\nmargins: 3\n",
])
def test_malformed_table_specs(text):
    with pytest.raises(SpecFormatError):
        parse_table_spec(text)


def test_hash_over_cells_on_wide_binary_table():
    rng = random.Random(12)
    table = [[rng.randint(0, 1) for _ in range(17)] for _ in range(12)]
    spec = ContingencyTableSpec(12, 17, [sum(r) for r in table], [sum(c) for c in zip(*table)], binary=True)
    problem, encoding = encode_to_cnf(spec, name="df-shaped")
    assert encoding.n_cell_bits == 204
    assert problem.n == 204
    h = hash_over_cells(problem, 20, 0.1, seed=3)
    assert h.n == 204
    combined = conjoin(problem.cnf, h)
    for support, _ in combined.xors:
        assert max(support) <= encoding.n_cell_bits


def test_table_problem_uses_table_enumeration():
    problem, encoding = encode_to_cnf(blocked_matrix_spec(5), name="synth_5")
    oracle = make_oracle(problem)
    assert isinstance(oracle, ExhaustiveOracle)
    assert len(oracle.solutions) == 17
    h = hash_over_cells(problem, 2, 0.5, seed=1)
    verdict = oracle.has_survivor(h)
    if verdict.survived:
        assert check_witness(problem, h, verdict.witness, verdict.model)


@pytest.mark.slow
def test_synth_8_lower_bound_pipeline():
    # at c=0.4, kappa=0.1 the largest reachable bound (m=7) is 5.54 < log2(50)
    problem, _ = encode_to_cnf(blocked_matrix_spec(8), name="synth_8")
    bounds = [best_lower_bound(problem, 0.3, range(4, 8), T=100, kappa=0.1, c=0.4, seed=seed).bound_log2
              for seed in range(7)]
    assert all(b is None or b <= math.log2(50) for b in bounds)
    assert sum(b is not None and b >= 4.5 for b in bounds) >= 4


def test_summary_csv(tmp_path):
    path = tmp_path / "summary.csv"
    frame = summary_rows_to_csv([SummaryRow("synth_8", "8x8", 0.4125, 5.0, 5.64, 7.1, 64)], path)
    assert list(frame.columns) == SUMMARY_COLUMNS
    loaded = pd.read_csv(path)
    assert list(loaded.columns) == SUMMARY_COLUMNS
    assert loaded.loc[0, 'Dataset'] == "synth_8"
    assert loaded.loc[0, 'trivial UB'] == 64
