"""
Command-line driver. Every subcommand reads the shared experiment config and writes its
artefacts into ``--out-dir``.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .circuit import gate_census
from .constants import LOG_LEVEL, THREAD_POOL_MAX_EXECUTORS, BasisKind, Method, SampleOrigin
from .determinant import DeterminantBasis
from .experiment import (ChainContext, ExperimentConfig, ansatz_circuit, ansatz_params, cu_densities,
                         dets_at_accuracy, measurement_distribution, noise_model_for, run_convergence, run_metadata,
                         run_scaling, shots_to_accuracy, spin_gap)
from .mitigators import mitigator_for
from .orbitals import DegeneracyError, mixing_matrix
from .sample_set import SampleSet
from .sampling import electron_number_histogram, sample_distribution
from .sci import (diagonalize, excitation_profile, fci_ground_state, missing_fraction, orbital_occupations,
                  spin_correlations)
from .statevector import simulate_sector
from .ucj import cp_histogram, reconstruction_residuals

logger = logging.getLogger(__name__)


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    logger.info('wrote %s', path)
    return path


def _write_json(out_dir: Path, name: str, payload: Dict[str, Any]) -> Path:
    return _write(out_dir, name, json.dumps(payload, indent=2))


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is None:
        raise ValueError('this command needs --config')
    cfg = ExperimentConfig.from_json(Path(args.config).read_text())
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _method(cfg: ExperimentConfig) -> Method:
    # circuit commands fall back to the dense ansatz for an ideal-sampler config
    return Method.UCJ if cfg.method is Method.IDEAL_SQD else cfg.method


def build_chain(args, cfg: ExperimentConfig, out: Path):
    ctx = ChainContext(cfg)
    _write(out, 'hamiltonian.json', ctx.H.with_spec(cfg.chain).to_json())


def bases(args, cfg: ExperimentConfig, out: Path):
    ctx = ChainContext(cfg)
    payload = {}
    for kind in BasisKind:
        basis = ctx.basis(kind)
        payload[kind.value] = {'C': basis.C.tolist(), 'energies': basis.energies.tolist(), 'energy': basis.energy}
    mix = mixing_matrix(ctx.kinetic, ctx.hf)
    payload['mixing'] = {'M': mix.M.tolist(), 'perturbative': mix.is_perturbative()}
    _write_json(out, 'bases.json', payload)


def ucj_params(args, cfg: ExperimentConfig, out: Path):
    ctx = ChainContext(cfg)
    params = ansatz_params(ctx, _method(cfg), cfg.r, cfg.basis_kind, cfg.topology)
    histogram = cp_histogram(params)
    _write(out, 't2.json', ctx.t2.to_json())
    _write(out, 'ucj_params.json', params.to_json())
    _write_json(out, 'ucj_summary.json', {
        'residuals': reconstruction_residuals(ctx.t2, max(cfg.r, args.r_max)),
        'cp_histogram': {'counts': histogram.counts.tolist(), 'edges': histogram.edges.tolist(),
                         'low_fraction': histogram.low_fraction},
    })


def simulate(args, cfg: ExperimentConfig, out: Path):
    ctx = ChainContext(cfg)
    circuit = ansatz_circuit(ctx, cfg, _method(cfg))
    state = simulate_sector(circuit, ctx.spec)
    _write(out, 'circuit.txt', circuit.to_text())
    _write_json(out, 'census.json', gate_census(circuit).to_dict())
    lines = ['bitstring,probability']
    width = 2 * ctx.spec.n_orb
    for key, p in zip(state.keys().tolist(), state.probabilities().tolist()):
        if p > 0:
            lines.append(f'{key:0{width}b},{p!r}')
    _write(out, 'distribution.csv', '\n'.join(lines) + '\n')


def sample(args, cfg: ExperimentConfig, out: Path):
    ctx = ChainContext(cfg)
    keys, probs, _ = measurement_distribution(ctx, cfg)
    shots = args.shots or cfg.master_shots
    s = sample_distribution(keys, probs, shots, cfg.seed, 2 * ctx.spec.n_orb)
    _write(out, 'samples.csv', s.to_csv())


def _read_samples(path: str) -> SampleSet:
    return SampleSet.from_csv(Path(path).read_text(), SampleOrigin.EXTERNAL)


def mitigate(args, cfg: ExperimentConfig, out: Path):
    spec = cfg.chain
    s = _read_samples(args.samples)
    rng = np.random.default_rng(cfg.seed)
    if cfg.noise is not None and args.add_noise:
        s = noise_model_for(cfg.noise, spec).apply(s, rng)
        _write(out, 'noisy.csv', s.to_csv())
    alpha_hist, beta_hist = electron_number_histogram(s, spec.n_orb)
    mode = args.mitigation or (cfg.noise.mitigation if cfg.noise is not None else 'recover')
    mitigated = mitigator_for(mode, rng).mitigate(s, spec.n_up, spec.n_down)
    valid = mitigated.in_sector(spec.n_up, spec.n_down)
    _write(out, 'mitigated.csv', mitigated.to_csv())
    _write_json(out, 'mitigation.json', {
        'mode': str(getattr(mode, 'value', mode)),
        'alpha_electrons': alpha_hist.tolist(),
        'beta_electrons': beta_hist.tolist(),
        'valid_unique': int(valid.sum()),
        'valid_shots': int(mitigated.arrays()[1][valid].sum()),
    })


def sci(args, cfg: ExperimentConfig, out: Path):
    ctx = ChainContext(cfg)
    spec = ctx.spec
    s = _read_samples(args.samples)
    alpha, beta, _ = s.registers()
    keep = s.in_sector(spec.n_up, spec.n_down)
    if not keep.any():
        raise ValueError(f'no sample lies in the ({spec.n_up}, {spec.n_down}) sector')
    basis = DeterminantBasis(spec.n_orb, spec.n_up, spec.n_down, alpha[keep], beta[keep])
    H = ctx.hamiltonian(cfg.basis_kind)
    state = diagonalize(basis, H)
    g = ctx.fci(cfg.basis_kind)
    payload = {
        'n_dets': len(basis),
        'energy': state.energy,
        'e_fci': g.energy,
        'energy_error': state.energy - g.energy,
        'missing_fraction': missing_fraction(g, basis),
    }
    if cfg.basis_kind is BasisKind.HF:
        try:
            profile = excitation_profile(g, ctx.hf, basis)
            payload['excitations'] = {'n_ex': profile.n_ex.tolist(), 'total': profile.total.tolist(),
                                      'covered': profile.covered.tolist()}
        except DegeneracyError as e:
            logger.warning('no excitation profile: %s', e)
    _write(out, 'basis.txt', basis.to_text())
    _write_json(out, 'sci.json', payload)


def convergence(args, cfg: ExperimentConfig, out: Path):
    curve = run_convergence(cfg)
    to_acc = shots_to_accuracy(curve, cfg.chemical_accuracy)
    dets = dets_at_accuracy(curve, cfg.chemical_accuracy)
    logger.info('shots to accuracy: %s, determinants at accuracy: %s', to_acc, dets)
    _write(out, 'curve.csv', curve.to_csv())
    _write_json(out, 'meta.json', run_metadata(cfg, shots_to_acc=to_acc, dets_at_acc=dets,
                                               census=curve.census.to_dict() if curve.census else None))


def scaling(args, cfg: ExperimentConfig, out: Path):
    result = run_scaling(cfg, args.lengths, args.workers)
    _write(out, 'scaling.csv', result.to_csv())
    _write_json(out, 'meta.json', run_metadata(cfg, lengths=list(args.lengths), exponents=result.exponents))


def spin_gap_command(args, cfg: ExperimentConfig, out: Path):
    ctx = ChainContext(cfg)
    gap = spin_gap(ctx.H, ctx.spec)
    g = fci_ground_state(ctx.H, ctx.spec)
    occupations = orbital_occupations(g, ctx.spec)
    _write_json(out, 'spin_gap.json', {
        'L': ctx.spec.L,
        'spin_gap': gap,
        'e0': g.energy,
        'occupations': occupations.tolist(),
        'cu_densities': cu_densities(occupations).tolist(),
        'spin_correlations': spin_correlations(g).tolist(),
    })


COMMANDS = {
    'build-chain': (build_chain, 'write the chain Hamiltonian as JSON'),
    'bases': (bases, 'write the HF, kinetic and HF+ orbital bases'),
    'ucj-params': (ucj_params, 'write t2 amplitudes and the (L)UCJ parameters'),
    'simulate': (simulate, 'synthesize and simulate the ansatz circuit'),
    'sample': (sample, 'draw shots from the ideal or simulated distribution'),
    'mitigate': (mitigate, 'add readout noise and mitigate a sample file'),
    'sci': (sci, 'diagonalize the Hamiltonian in the determinants of a sample file'),
    'convergence': (convergence, 'energy error and missing fraction against shots'),
    'scaling': (scaling, 'convergence runs over chain lengths with power-law fits'),
    'spin-gap': (spin_gap_command, 'lowest spin excitation and orbital densities'),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='sqdlab', description='Sample-based diagonalization of cuprate chains.')
    parser.add_argument('--config', help='experiment config JSON')
    parser.add_argument('--seed', type=int, default=None, help='override the config seed')
    parser.add_argument('--out-dir', default='.', help='directory for output files')
    parser.add_argument('--log-level', default=LOG_LEVEL.upper(), type=str.upper, choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    sub = parser.add_subparsers(dest='command', required=True)
    parsers = {name: sub.add_parser(name, help=text) for name, (_, text) in COMMANDS.items()}
    parsers['ucj-params'].add_argument('--r-max', type=int, default=1, help='largest order for residuals')
    parsers['sample'].add_argument('--shots', type=int, default=None, help='defaults to master_shots')
    parsers['mitigate'].add_argument('--samples', required=True, help='bitstring,count CSV')
    parsers['mitigate'].add_argument('--mitigation', choices=['none', 'postselect', 'recover'], default=None)
    parsers['mitigate'].add_argument('--add-noise', action='store_true', help='apply the configured noise first')
    parsers['sci'].add_argument('--samples', required=True, help='bitstring,count CSV')
    parsers['scaling'].add_argument('--lengths', type=int, nargs='+', default=[2, 4, 6])
    parsers['scaling'].add_argument('--workers', type=int, default=THREAD_POOL_MAX_EXECUTORS)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format='%(asctime)s %(name)s %(levelname)s %(message)s')
    handler, _ = COMMANDS[args.command]
    try:
        cfg = load_config(args)
        handler(args, cfg, Path(args.out_dir))
    except (ValueError, RuntimeError, NotImplementedError, OSError) as e:
        print(f'sqdlab {args.command}: {e}', file=sys.stderr)
        return 1
    return 0
