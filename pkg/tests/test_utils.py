import json
import logging
import math
import os
import time

import pytest

import utils.settings_manager as settings_manager
from utils.error_recovery import TrialFailureLog
from utils.helpers import format_log_value, parse_float_list, parse_int_list, utc_now_iso, validate_probability
from utils.logger import (clear_log_notifications, clear_old_logs, configure_log_dir, get_recent_errors,
                          get_recent_warnings, log_error, log_warning, logger)
from utils.performance import PhaseTimer
from utils.system_info import APP_VERSION, get_system_info
from xorcount.bounds import best_lower_bound
from xorcount.errors import ParameterError, SpecFormatError
from xorcount.inputs import detect_kind, load_problem, parse_explicit_set
from xorcount.oracle import CountingProblem
from xorcount.report import RunReport


@pytest.fixture
def settings_file(tmp_path, monkeypatch):
    path = tmp_path / "config" / "settings.json"
    monkeypatch.setattr(settings_manager, "SETTINGS_FILE", path)
    return path


def test_defaults_when_file_missing(settings_file):
    assert settings_manager.load_settings() == settings_manager.get_default_settings()


def test_file_values_fill_over_defaults(settings_file):
    settings_file.parent.mkdir(parents=True)
    settings_file.write_text(json.dumps({'chunk': 3}))
    settings = settings_manager.load_settings()
    assert settings['chunk'] == 3
    assert settings['solver_profile'] == 'cryptominisat'


def test_unreadable_file_falls_back(settings_file):
    settings_file.parent.mkdir(parents=True)
    settings_file.write_text("{not json")
    assert settings_manager.load_settings() == settings_manager.get_default_settings()
    assert get_recent_warnings()


def test_settings_precedence(settings_file):
    settings_manager.save_settings({**settings_manager.get_default_settings(), 'solver': 'from-file {in}',
                                    'log_dir': 'file-logs', 'seed': 4})
    environ = {'XORCOUNT_SOLVER': 'from-env {in}'}
    settings = settings_manager.resolve_settings({'seed': None}, environ=environ)
    assert settings['solver'] == 'from-env {in}'
    assert settings['log_dir'] == 'file-logs'
    assert settings['seed'] == 4
    settings = settings_manager.resolve_settings({'solver': 'from-flag {in}', 'seed': 9}, environ=environ)
    assert settings['solver'] == 'from-flag {in}'
    assert settings['seed'] == 9


def test_reset_settings(settings_file):
    settings_manager.save_settings({'chunk': 2})
    defaults = settings_manager.reset_settings()
    assert defaults == settings_manager.get_default_settings()
    assert json.loads(settings_file.read_text()) == defaults


def test_save_settings_validates_and_sorts(settings_file):
    with pytest.raises(ParameterError):
        settings_manager.save_settings({'colour': 'blue'})
    with pytest.raises(ParameterError):
        settings_manager.save_settings({'chunk': 'six'})
    with pytest.raises(ParameterError):
        settings_manager.save_settings({'native_xor': 1})
    with pytest.raises(ParameterError):
        settings_manager.save_settings({'jobs': 2.5})
    assert not settings_file.exists()
    assert settings_manager.save_settings({'seed': 3, 'chunk': 4}) == settings_file
    assert list(json.loads(settings_file.read_text())) == ['chunk', 'seed']
    assert not settings_file.with_suffix('.json.tmp').exists()


def test_unknown_keys_in_file_are_dropped(settings_file):
    settings_file.parent.mkdir(parents=True)
    settings_file.write_text(json.dumps({'chunk': 5, 'theme': 'dark'}))
    settings = settings_manager.load_settings()
    assert settings['chunk'] == 5
    assert 'theme' not in settings
    assert "theme" in get_recent_warnings()[0]['message']


def test_non_object_file_falls_back(settings_file):
    settings_file.parent.mkdir(parents=True)
    settings_file.write_text("[1, 2]")
    assert settings_manager.load_settings() == settings_manager.get_default_settings()


def test_configure_log_dir_moves_the_file_handler(tmp_path, temp_log_dir):
    try:
        path = configure_log_dir(tmp_path / "run_logs")
        assert path.parent == tmp_path / "run_logs"
        assert path.name.startswith("xorcount_")
        file_handlers = [h for h in logger.handlers if isinstance(h, logging.FileHandler)]
        assert len(file_handlers) == 1
        assert sum(type(h) is logging.StreamHandler for h in logger.handlers) == 1
    finally:
        configure_log_dir(temp_log_dir)


def test_clear_old_logs_only_touches_own_files(tmp_path):
    stale = tmp_path / "xorcount_20200101.log"
    foreign = tmp_path / "other_20200101.log"
    fresh = tmp_path / "xorcount_29991231.log"
    for path in (stale, foreign, fresh):
        path.write_text("x\n")
    month_ago = time.time() - 30 * 24 * 60 * 60
    os.utime(stale, (month_ago, month_ago))
    os.utime(foreign, (month_ago, month_ago))
    assert clear_old_logs(days=7, log_dir=tmp_path) == 1
    assert not stale.exists()
    assert foreign.exists()
    assert fresh.exists()
    assert clear_old_logs(days=7, log_dir=tmp_path) == 0


def test_notifications_record_and_clear():
    log_warning("odd header", context="file.cnf")
    log_warning("not kept", record=False)
    log_error(ValueError("boom"), "parsing")
    warnings = get_recent_warnings()
    assert len(warnings) == 1
    assert warnings[0]['message'] == "Warning: odd header | Context: file.cnf"
    assert get_recent_errors()[0]['error'] == "Error: boom | Context: parsing"
    clear_log_notifications()
    assert get_recent_warnings() == []
    assert get_recent_errors() == []


def test_trial_failure_log_saves_sorted(tmp_path):
    path = tmp_path / "failures.json"
    failures = TrialFailureLog(path)
    failures.log_error('unknown', 'timeout', trial_index=3, seed=30)
    failures.log_error('unknown', 'exit code 3', trial_index=1, seed=10)
    assert len(failures) == 2
    saved = json.loads(path.read_text())
    assert [e['trial_index'] for e in saved] == [1, 3]
    assert saved[1]['details'] == 'timeout'
    failures.clear()
    assert len(failures) == 0
    assert TrialFailureLog().save_error_log() is False


def test_phase_timer_accumulates():
    timer = PhaseTimer()
    with timer.track('load'):
        time.sleep(0.01)
    with timer.track('load'):
        time.sleep(0.01)
    with pytest.raises(RuntimeError):
        with timer.track('trials'):
            raise RuntimeError("still timed")
    report = timer.get_performance_report()
    assert set(report['phases_s']) == {'load', 'trials'}
    assert report['phases_s']['load'] >= 0.02
    assert report['total_s'] == pytest.approx(sum(report['phases_s'].values()))
    assert report['peak_memory_mb'] > 0


def test_format_log_value():
    assert "log2 = 10.000000" in format_log_value(10 * math.log(2), 'q')
    assert "linear = 1024" in format_log_value(10 * math.log(2), 'q')
    assert "linear" not in format_log_value(5000.0)
    assert format_log_value(-math.inf, 'p') == "p: 0 (ln = -inf, log2 = -inf)"


def test_list_parsers():
    assert parse_int_list("1-4,7") == [1, 2, 3, 4, 7]
    assert parse_int_list("5, 9") == [5, 9]
    assert parse_float_list("0.05,0.1 0.5") == [0.05, 0.1, 0.5]


def test_validate_probability():
    assert validate_probability("0.25") == 0.25
    assert validate_probability(0.0) == 0.0
    with pytest.raises(ValueError):
        validate_probability(0.0, open_interval=True)
    with pytest.raises(ValueError):
        validate_probability(1.5)


def test_utc_timestamp():
    assert utc_now_iso().endswith("+00:00")


def test_parse_explicit_set():
    s = parse_explicit_set("# three points\nn 4\n0001\n1000 # trailing comment\n0001\n")
    assert s.n == 4
    assert len(s) == 2
    assert len(parse_explicit_set("n 6\n")) == 0


@pytest.mark.parametrize("text", ["", "01\n012\n", "01\n011\n", "n four\n01\n", "n 3\n01\n"])
def test_malformed_explicit_sets(text):
    with pytest.raises(SpecFormatError):
        parse_explicit_set(text)


def test_detect_kind():
    assert detect_kind("a/b.cnf") == 'cnf'
    assert detect_kind("synth_8.TABLE") == 'table'
    assert detect_kind("points.bits") == 'explicit'
    with pytest.raises(ParameterError):
        detect_kind("notes.txt")


def test_load_problem_by_kind(explicit_file, set_256):
    path = explicit_file(set_256)
    problem = load_problem(path)
    assert problem.n == 16
    assert problem.name == "set"
    assert sorted(problem.explicit.to_ints()) == sorted(set_256.to_ints())


def test_report_is_deterministic_without_timing(set_256):
    problem = CountingProblem.from_explicit(set_256, name="set_256")
    texts = []
    for _ in range(2):
        report = RunReport(command=["xorcount", "bound"], seed=1, config={'chunk': 6})
        report.add_certificate(best_lower_bound(problem, 0.5, [6, 7], T=20, seed=1))
        texts.append(report.to_json(include_timing=False))
    assert texts[0] == texts[1]
    loaded = json.loads(texts[0])
    assert 'timing' not in loaded
    assert loaded['certificates'][0]['kind'] == 'lower'


def test_report_with_timing_has_system_info(tmp_path):
    report = RunReport(command=["xorcount"], seed=0, config={})
    report.mark_inconclusive("2 of 5 trials returned unknown at m=3")
    path = tmp_path / "report.json"
    report.write(path)
    loaded = json.loads(path.read_text())
    assert loaded['status'] == 'inconclusive'
    assert 'numpy_version' in loaded['system']
    assert 'created_at' in loaded


def test_system_info_is_json_ready():
    info = get_system_info()
    assert info['app_version'] == APP_VERSION
    assert info['system']['cpu_count'] >= 1
    assert info['system']['rss_mb'] > 0
    json.dumps(info)
