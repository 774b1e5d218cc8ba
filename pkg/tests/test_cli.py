import json

import pytest

from sqdlab.circuit import Circuit
from sqdlab.cli import COMMANDS, build_parser, main
from sqdlab.sample_set import SampleSet


@pytest.fixture
def config(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({
        'chain': {'L': 2},
        'surrogate': {'preset': 'default'},
        'method': 'LUCJ',
        'shots': [10, 100, 1000],
        'master_shots': 20000,
        'batches': 2,
        'seed': 5,
        'noise': {'p_flip': 0.02, 'mitigation': 'recover'},
    }))
    return path


def _run(config, out, *args):
    return main(['--config', str(config), '--out-dir', str(out), *args])


def test_parser():
    parser = build_parser()
    args = parser.parse_args(['--log-level', 'debug', 'scaling', '--lengths', '2', '4'])
    assert args.log_level == 'DEBUG'
    assert args.lengths == [2, 4]
    assert set(COMMANDS) == {'build-chain', 'bases', 'ucj-params', 'simulate', 'sample', 'mitigate', 'sci',
                             'convergence', 'scaling', 'spin-gap'}


def test_chain_and_bases(config, tmp_path):
    out = tmp_path / 'out'
    assert _run(config, out, 'build-chain') == 0
    assert json.loads((out / 'hamiltonian.json').read_text())['n_orb'] == 4
    assert _run(config, out, 'bases') == 0
    bases = json.loads((out / 'bases.json').read_text())
    assert set(bases) == {'HF', 'KIN', 'HFPLUS', 'mixing'}


def test_circuit_commands(config, tmp_path):
    out = tmp_path / 'out'
    assert _run(config, out, 'ucj-params', '--r-max', '2') == 0
    summary = json.loads((out / 'ucj_summary.json').read_text())
    assert len(summary['residuals']) == 2
    assert _run(config, out, 'simulate') == 0
    circuit = Circuit.from_text((out / 'circuit.txt').read_text())
    assert circuit.n_qubits == 8
    assert json.loads((out / 'census.json').read_text())['n_x'] == 6
    assert (out / 'distribution.csv').read_text().startswith('bitstring,probability\n')


def test_sample_mitigate_sci(config, tmp_path):
    out = tmp_path / 'out'
    assert _run(config, out, 'sample', '--shots', '500') == 0
    samples = SampleSet.from_csv((out / 'samples.csv').read_text())
    assert samples.total_shots == 500
    assert samples.in_sector(3, 3).all()

    assert _run(config, out, 'mitigate', '--samples', str(out / 'samples.csv'), '--add-noise') == 0
    report = json.loads((out / 'mitigation.json').read_text())
    assert report['mode'] == 'recover'
    assert report['valid_shots'] == 500
    assert sum(report['alpha_electrons']) == 500

    assert _run(config, out, 'sci', '--samples', str(out / 'mitigated.csv')) == 0
    result = json.loads((out / 'sci.json').read_text())
    assert result['energy_error'] >= -1e-9
    assert 0.0 <= result['missing_fraction'] <= 1.0
    assert (out / 'basis.txt').exists()


def test_convergence_and_spin_gap(config, tmp_path):
    out = tmp_path / 'out'
    assert _run(config, out, '--seed', '9', 'convergence') == 0
    assert (out / 'curve.csv').read_text().startswith('shots,f_expected')
    meta = json.loads((out / 'meta.json').read_text())
    assert meta['seed'] == 9
    assert meta['census']['n_x'] == 6
    assert _run(config, out, 'spin-gap') == 0
    gap = json.loads((out / 'spin_gap.json').read_text())
    assert len(gap['cu_densities']) == 2
    assert isinstance(gap['spin_gap'], float)


def test_scaling_command(config, tmp_path):
    out = tmp_path / 'out'
    assert _run(config, out, 'scaling', '--lengths', '2', '4', '--workers', '1') == 0
    lines = (out / 'scaling.csv').read_text().splitlines()
    assert lines[0] == 'L,shots_to_acc,dets_at_acc,n_two_qubit'
    assert len(lines) == 3


def test_errors_exit_with_status_one(tmp_path, capsys):
    bad = tmp_path / 'bad.json'
    bad.write_text(json.dumps({'chain': {'L': 3}}))
    assert main(['--config', str(bad), 'build-chain']) == 1
    assert 'sqdlab build-chain:' in capsys.readouterr().err

    assert main(['build-chain']) == 1
    assert 'needs --config' in capsys.readouterr().err

    assert main(['--config', str(tmp_path / 'missing.json'), 'bases']) == 1
