"""
Tests for the command-line launcher: outputs, reproducibility and exit codes.

Usage:
    pytest test_launcher.py

Author: DuplexSched Project
"""

import json

import pandas as pd
import pytest

from launcher import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, dispatch
from modules.experiments import CANDIDATE_SCHEMA, GAP_VS_N_SCHEMA, SINGLE_TRIAL_SCHEMA


@pytest.fixture
def gap_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({'M': 2, 'P': 10, 'P_bar': 10, 'n_list': [4, 8], 'trials': 4}))
    return path


def run(args):
    return dispatch([str(a) for a in args])


def test_gap_vs_n_writes_outputs(tmp_path, gap_config):
    out = tmp_path / "runs" / "g1"
    assert run(['gap-vs-n', '--config', gap_config, '--seed', 7, '--out', out, '--workers', 1]) == EXIT_OK
    rows = pd.read_csv(tmp_path / "runs" / "g1.csv")
    assert list(rows.columns) == list(GAP_VS_N_SCHEMA)
    assert list(rows['n']) == [4, 8]

    manifest = json.loads((tmp_path / "runs" / "g1.manifest.json").read_text())
    assert manifest['subcommand'] == 'gap-vs-n'
    assert manifest['seed'] == 7
    assert manifest['config']['n_list'] == [4, 8]
    assert str(tmp_path / "runs" / "g1.csv") in manifest['outputs']
    assert (tmp_path / "runs" / "g1_summary.txt").read_text().startswith("Run Start:")


def test_gap_vs_n_is_byte_identical(tmp_path, gap_config):
    common = ['gap-vs-n', '--config', gap_config, '--seed', 7]
    assert run(common + ['--out', tmp_path / "a", '--workers', 1]) == EXIT_OK
    assert run(common + ['--out', tmp_path / "b", '--workers', 1]) == EXIT_OK
    assert run(common + ['--out', tmp_path / "c", '--workers', 3]) == EXIT_OK
    first = (tmp_path / "a.csv").read_bytes()
    assert first == (tmp_path / "b.csv").read_bytes()
    assert first == (tmp_path / "c.csv").read_bytes()


def test_manifest_reproduces_output(tmp_path, gap_config):
    assert run(['gap-vs-n', '--config', gap_config, '--seed', 3, '--out', tmp_path / "a",
                '--workers', 1]) == EXIT_OK
    assert run(['gap-vs-n', '--config', tmp_path / "a.manifest.json", '--out', tmp_path / "b"]) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_single_trial_prints_schedule(capsys):
    assert run(['single-trial', '--n', 16, '--m', 2, '--p', 10, '--pbar', 10, '--seed', 1]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "Uplink users T_bar" in printed
    assert "Downlink users T" in printed
    assert "Gaps:" in printed


def test_single_trial_csv(tmp_path):
    out = tmp_path / "trial"
    assert run(['single-trial', '--n', 8, '--m', 2, '--seed', 1, '--out', out]) == EXIT_OK
    rows = pd.read_csv(tmp_path / "trial.csv")
    assert list(rows.columns) == list(SINGLE_TRIAL_SCHEMA)
    assert len(rows) == 2


def test_single_trial_manifest_keeps_trial_index(tmp_path):
    assert run(['single-trial', '--n', 16, '--m', 2, '--seed', 1, '--trial', 3,
                '--out', tmp_path / "a"]) == EXIT_OK
    manifest = json.loads((tmp_path / "a.manifest.json").read_text())
    assert manifest['config']['trial'] == 3
    assert manifest['metadata']['trial'] == 3
    assert run(['single-trial', '--config', tmp_path / "a.manifest.json", '--out', tmp_path / "b"]) == EXIT_OK
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert run(['single-trial', '--n', 16, '--m', 2, '--seed', 1, '--out', tmp_path / "c"]) == EXIT_OK
    assert json.loads((tmp_path / "c.manifest.json").read_text())['metadata']['trial'] == 0


def test_run_info_header(capsys):
    assert run(['single-trial', '--n', 8, '--m', 2, '--seed', 5]) == EXIT_OK
    printed = capsys.readouterr().out
    assert "DuplexSched" in printed
    assert "n=8, M=2" in printed
    assert run(['single-trial', '--n', 8, '--m', 2, '--quiet']) == EXIT_OK
    assert "DuplexSched" not in capsys.readouterr().out


def test_single_trial_clustered(capsys):
    assert run(['single-trial', '--model', 'clustered', '--n', 8, '--m', 2, '--g', 0.5]) == EXIT_OK
    assert "Full-duplex upper bound" in capsys.readouterr().out


def test_candidate_prob(tmp_path):
    out = tmp_path / "cand"
    assert run(['candidate-prob', '--m', 3, '--epsilon-mode', 'constant', '--epsilon', 0.5,
                '--draws', 10000, '--out', out]) == EXIT_OK
    rows = pd.read_csv(tmp_path / "cand.csv")
    assert list(rows.columns) == list(CANDIDATE_SCHEMA)
    assert list(rows['link']) == ['uplink', 'downlink']


def test_clustered_sweep(tmp_path):
    out = tmp_path / "sweep"
    assert run(['clustered-sweep', '--alpha', 1, '--beta', 1, '--m-list', '1,2',
                '--snr-list', '1e2,1e3,1e4', '--out', out]) == EXIT_OK
    rows = pd.read_csv(tmp_path / "sweep.csv")
    assert len(rows) == 6
    assert 'top_decade_slope' in rows.columns


def test_sidechannel_and_extreme_value(tmp_path):
    assert run(['sidechannel-check', '--m-list', '1,2,4', '--out', tmp_path / "side"]) == EXIT_OK
    assert pd.read_csv(tmp_path / "side.csv")['within_bound'].all()
    assert run(['extreme-value', '--m', 2, '--big-n', 1000, '--ev-draws', 500,
                '--out', tmp_path / "ev"]) == EXIT_OK
    assert len(pd.read_csv(tmp_path / "ev.csv")) == 2


def test_usage_errors(capsys):
    assert run(['no-such-experiment']) == EXIT_USAGE
    assert run([]) == EXIT_USAGE
    assert run(['gap-vs-n', '--model', 'rayleigh']) == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_help_exits_cleanly():
    assert run(['--help']) == EXIT_OK


@pytest.mark.parametrize("args", [
    ['single-trial', '--m', 0],
    ['single-trial', '--n', 'many'],
    ['gap-vs-n', '--trials', 0],
    ['antenna-scaling', '--epsilon-mode', 'decaying', '--trials', 1],
    ['clustered-sweep', '--snr-list', '1e3,1e2'],
])
def test_config_errors(tmp_path, args):
    assert run(args + ['--out', tmp_path / "x", '--workers', 1]) == EXIT_CONFIG


def test_config_file_errors(tmp_path):
    assert run(['single-trial', '--config', tmp_path / "absent.json"]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(['single-trial', '--config', bad]) == EXIT_CONFIG
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({'antennas': 2}))
    assert run(['single-trial', '--config', unknown]) == EXIT_CONFIG


def test_unwritable_output_exit(tmp_path, capsys):
    blocker = tmp_path / "taken"
    blocker.write_text("not a directory")
    assert run(['sidechannel-check', '--m-list', '1,2', '--out', blocker / "sub" / "o"]) == EXIT_RUNTIME
    assert "Cannot write outputs" in capsys.readouterr().err


def test_negative_trial_is_config_error():
    assert run(['single-trial', '--trial', -1]) == EXIT_CONFIG


def test_runtime_error_exit(capsys):
    assert run(['single-trial', '--n', 16, '--m', 2, '--dpc-tol', 1e-15, '--dpc-max-iters', 1]) == EXIT_RUNTIME
    assert "ConvergenceError" in capsys.readouterr().err
