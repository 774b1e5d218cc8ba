"""
Convergence and scaling experiments: sample determinants from an ideal or UCJ distribution and
track how the selected basis approaches the FCI ground state as the shot count grows.
"""
import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from functools import cached_property
from threading import Lock
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import Circuit, GateCensus, gate_census
from .constants import (BATCHES, CHEMICAL_ACCURACY, MASTER_SHOTS, SHOTS_EXPONENTS, THREAD_POOL_MAX_EXECUTORS,
                        BasisKind, Method, Mitigation)
from .determinant import Determinant
from .mitigators import mitigator_for
from .model import (ChainSpec, DimerModel, Hamiltonian, ParameterError, extend_to_chain, rotate_integrals,
                    surrogate_dimer, surrogate_params)
from .noise_models import BitFlipNoise, calibrate_bit_flip
from .orbitals import OrbitalBasis, T2Amplitudes, compute_t2, hfplus_basis, kinetic_basis, load_t2, solve_hf
from .sampling import expected_missing_fraction, expected_unique, sample_distribution
from .sci import GroundState, ProjectedHamiltonian, fci_ground_state
from .statevector import simulate_sector
from .topology import topology
from .ucj import UcjParams, cp_histogram, from_t_amplitudes, prune_to_topology, synthesize_circuit

logger = logging.getLogger(__name__)

DEFAULT_SHOTS = tuple(int(round(10 ** e)) for e in SHOTS_EXPONENTS)

# Reference low-amplitude CP fractions and Cu density window reported for the cuprate chains.
REFERENCE_LOW_CP_FRACTION = {Method.UCJ: 0.23, Method.LUCJ: 0.17}
CU_DENSITY_WINDOW = (1.2, 1.5)

NOT_REACHED = 'not reached'


class StageError(RuntimeError):
    """
    A pipeline stage failed; ``stage`` names it and the cause is chained.
    """

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f'{stage} stage failed: {cause}')
        self.stage = stage


@contextmanager
def _stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e
    logger.info('stage %s done', name)


@dataclass(frozen=True)
class NoiseConfig:
    """
    Readout noise for a run. Without ``p_flip`` the rate is calibrated so a shot keeps the
    correct electron numbers with probability ``correct_fraction``.
    """
    p_flip: Optional[float] = None
    mitigation: Mitigation = Mitigation.RECOVER
    correct_fraction: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'mitigation', Mitigation(self.mitigation))
        if self.p_flip is None and self.correct_fraction is None:
            raise ParameterError('noise needs p_flip or correct_fraction')


@dataclass(frozen=True)
class ExperimentConfig:
    chain: ChainSpec
    surrogate: Optional[Dict[str, Any]] = None
    integrals: Optional[str] = None
    basis_kind: BasisKind = BasisKind.HF
    method: Method = Method.IDEAL_SQD
    r: int = 1
    topology: str = 'line'
    shots: Tuple[int, ...] = DEFAULT_SHOTS
    master_shots: int = MASTER_SHOTS
    batches: int = BATCHES
    seed: int = 0
    chemical_accuracy: float = CHEMICAL_ACCURACY
    noise: Optional[NoiseConfig] = None
    t2_file: Optional[str] = None
    compute_energies: bool = True
    angle_epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'basis_kind', BasisKind(self.basis_kind))
        object.__setattr__(self, 'method', Method(self.method))
        object.__setattr__(self, 'shots', tuple(int(s) for s in self.shots))
        if self.surrogate is not None and self.integrals is not None:
            raise ParameterError('give either surrogate parameters or an integral file, not both')
        if not self.shots or any(s < 1 for s in self.shots) or any(b <= a for a, b in zip(self.shots, self.shots[1:])):
            raise ParameterError(f'shots must be positive and strictly ascending, got {self.shots}')
        if self.chemical_accuracy <= 0:
            raise ParameterError(f'chemical_accuracy must be positive, got {self.chemical_accuracy}')
        if self.r < 1 or self.batches < 1 or self.master_shots < 1:
            raise ParameterError('r, batches and master_shots must be positive')
        if self.angle_epsilon < 0:
            raise ParameterError(f'angle_epsilon must be non-negative, got {self.angle_epsilon}')

    def replace(self, **changes) -> 'ExperimentConfig':
        return replace(self, **changes)

    def with_length(self, L: int) -> 'ExperimentConfig':
        c = self.chain
        return replace(self, chain=ChainSpec(L, None, None, c.screening_factor, c.kinetic_scale,
                                             c.interplaquette_coulomb))

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d['basis_kind'] = self.basis_kind.value
        d['method'] = self.method.value
        d['shots'] = list(self.shots)
        if self.noise is not None:
            d['noise']['mitigation'] = self.noise.mitigation.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> 'ExperimentConfig':
        d = dict(d)
        try:
            d['chain'] = ChainSpec.from_dict(d['chain'])
        except (KeyError, TypeError) as e:
            raise ParameterError(f'config needs a valid "chain" object: {e}') from e
        if d.get('noise') is not None:
            d['noise'] = NoiseConfig(**d['noise'])
        try:
            return ExperimentConfig(**d)
        except TypeError as e:
            raise ParameterError(f'unknown config field: {e}') from e

    @staticmethod
    def from_json(text: str) -> 'ExperimentConfig':
        return ExperimentConfig.from_dict(json.loads(text))


def build_hamiltonian(cfg: ExperimentConfig) -> Hamiltonian:
    """Chain Hamiltonian from surrogate parameters or an integral file."""
    if cfg.integrals is not None:
        with open(cfg.integrals) as f:
            text = f.read()
        n_orb = json.loads(text).get('n_orb')
        if n_orb == 4 and cfg.chain.n_orb != 4:
            return extend_to_chain(DimerModel.from_json(text), cfg.chain)
        H = Hamiltonian.from_json(text)
        if H.n_orb != cfg.chain.n_orb:
            raise ParameterError(f'integral file has {H.n_orb} orbitals, chain needs {cfg.chain.n_orb}')
        return H.with_spec(cfg.chain)
    values = dict(cfg.surrogate or {})
    params = surrogate_params(values.pop('preset', 'default')).to_dict()
    unknown = set(values) - set(params)
    if unknown:
        raise ParameterError(f'unknown surrogate parameters: {sorted(unknown)}')
    params.update(values)
    return extend_to_chain(surrogate_dimer(params), cfg.chain)


class ChainContext:
    """
    Everything derived from one chain Hamiltonian and shared across methods and orders: the
    orbital bases, the Hamiltonian in each basis, the FCI references and the t2 amplitudes.
    """

    def __init__(self, cfg: ExperimentConfig, H: Optional[Hamiltonian] = None):
        self.cfg = cfg
        self.spec = cfg.chain
        self.H = H if H is not None else build_hamiltonian(cfg)
        self._lock = Lock()
        self._rotated: Dict[BasisKind, Hamiltonian] = {}
        self._fci: Dict[BasisKind, GroundState] = {}

    @cached_property
    def kinetic(self) -> OrbitalBasis:
        return kinetic_basis(self.H)

    @cached_property
    def hf(self) -> OrbitalBasis:
        return solve_hf(self.H, self.spec.n_up, self.spec.n_down)

    @cached_property
    def hfplus(self) -> OrbitalBasis:
        return hfplus_basis(self.H, self.hf, self.kinetic)

    def basis(self, kind: BasisKind) -> OrbitalBasis:
        kind = BasisKind(kind)
        return {BasisKind.HF: lambda: self.hf, BasisKind.KIN: lambda: self.kinetic,
                BasisKind.HFPLUS: lambda: self.hfplus}[kind]()

    def hamiltonian(self, kind: BasisKind) -> Hamiltonian:
        kind = BasisKind(kind)
        with self._lock:
            if kind not in self._rotated:
                self._rotated[kind] = rotate_integrals(self.H, self.basis(kind).C)
            return self._rotated[kind]

    def fci(self, kind: BasisKind) -> GroundState:
        kind = BasisKind(kind)
        H = self.hamiltonian(kind)
        with self._lock:
            if kind not in self._fci:
                self._fci[kind] = fci_ground_state(H, self.spec)
            return self._fci[kind]

    @cached_property
    def t2(self) -> T2Amplitudes:
        if self.cfg.t2_file:
            t2 = load_t2(self.cfg.t2_file)
            if t2.n_orb != self.spec.n_orb or t2.n_occ != self.spec.n_up:
                raise ParameterError(f't2 file covers {t2.n_occ} occupied of {t2.n_orb} orbitals, chain has '
                                     f'{self.spec.n_up} of {self.spec.n_orb}')
            return t2
        return compute_t2(self.H, self.hf)


def prepare_chain(cfg: ExperimentConfig) -> ChainContext:
    return ChainContext(cfg)


def ansatz_params(ctx: ChainContext, method: Method, r: int, basis_kind: BasisKind,
                  topology_name: str = 'line') -> UcjParams:
    """
    UCJ parameters acting in the HF orbitals with the rotation into ``basis_kind`` as the
    measurement rotation; LUCJ prunes them to ``topology_name``.
    """
    method = Method(method)
    if method is Method.IDEAL_SQD:
        raise ParameterError('the ideal sampler has no ansatz')
    final = ctx.basis(basis_kind).C.T @ ctx.hf.C
    params = from_t_amplitudes(ctx.t2, r, final)
    if method is Method.LUCJ:
        params = prune_to_topology(params, topology(topology_name, ctx.spec.n_orb))
    return params


def ansatz_circuit(ctx: ChainContext, cfg: ExperimentConfig, method: Optional[Method] = None) -> Circuit:
    params = ansatz_params(ctx, method or cfg.method, cfg.r, cfg.basis_kind, cfg.topology)
    reference = Determinant.reference(ctx.spec.n_orb, ctx.spec.n_up, ctx.spec.n_down)
    return synthesize_circuit(params, reference, cfg.angle_epsilon)


@dataclass(frozen=True, eq=False)
class ConvergenceCurve:
    shots: np.ndarray
    f_expected: np.ndarray
    unique_expected: np.ndarray
    e_err_mean: np.ndarray
    e_err_std: np.ndarray
    census: Optional[GateCensus] = None
    info: Dict[str, Any] = field(default_factory=dict)

    _COLUMNS = ('shots', 'f_expected', 'unique_expected', 'e_err_mean', 'e_err_std')

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(self._COLUMNS)
        for row in zip(*(getattr(self, c) for c in self._COLUMNS)):
            writer.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])
        return out.getvalue()

    @staticmethod
    def from_csv(text: str) -> 'ConvergenceCurve':
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError('curve file has no rows')
        columns = {c: np.array([float(r[c]) for r in rows]) for c in ConvergenceCurve._COLUMNS}
        columns['shots'] = columns['shots'].astype(np.int64)
        return ConvergenceCurve(**columns)


def measurement_distribution(ctx: ChainContext, cfg: ExperimentConfig, g: Optional[GroundState] = None):
    """
    Keys and probabilities of the distribution measured in ``cfg.basis_kind`` orbitals, plus the
    gate census for ansatz runs (None for the ideal sampler).
    """
    n = ctx.spec.n_orb
    if cfg.method is Method.IDEAL_SQD:
        g = g or ctx.fci(cfg.basis_kind)
        keys = g.basis.alpha | (g.basis.beta << n)
        return keys, g.weights(), None
    with _stage('ansatz'):
        params = ansatz_params(ctx, cfg.method, cfg.r, cfg.basis_kind, cfg.topology)
        reference = Determinant.reference(n, ctx.spec.n_up, ctx.spec.n_down)
        circuit = synthesize_circuit(params, reference, cfg.angle_epsilon)
        census = gate_census(circuit)
        low = cp_histogram(params).low_fraction
        reference_low = REFERENCE_LOW_CP_FRACTION[cfg.method]
        logger.info('%s r=%d L=%d: %d two-qubit gates, low-amplitude CP fraction %.3f',
                    cfg.method.value, cfg.r, ctx.spec.L, census.n_two_qubit, low)
        if abs(low - reference_low) > 0.1:
            logger.warning('low-amplitude CP fraction %.3f is far from the reference %.2f', low, reference_low)
    with _stage('simulate'):
        state = simulate_sector(circuit, ctx.spec)
    return state.keys(), state.probabilities(), census


def noise_model_for(noise: NoiseConfig, spec: ChainSpec) -> BitFlipNoise:
    if noise.p_flip is not None:
        return BitFlipNoise(noise.p_flip)
    return calibrate_bit_flip(noise.correct_fraction, spec.n_orb, spec.n_up, spec.n_down)


def _mitigated_distribution(ctx: ChainContext, cfg: ExperimentConfig, g: GroundState,
                            keys: np.ndarray, probs: np.ndarray, seeds) -> np.ndarray:
    """Empirical probability of every sector determinant in the master run, in g's order."""
    spec = ctx.spec
    with _stage('sample'):
        master = sample_distribution(keys, probs, cfg.master_shots, seeds[0], 2 * spec.n_orb)
    if cfg.noise is not None:
        with _stage('noise'):
            master = noise_model_for(cfg.noise, spec).apply(master, seeds[1])
        with _stage('mitigate'):
            master = mitigator_for(cfg.noise.mitigation, seeds[2]).mitigate(master, spec.n_up, spec.n_down)
    alpha, beta, counts = master.registers()
    valid = master.in_sector(spec.n_up, spec.n_down)
    distribution = np.zeros(len(g.basis))
    if master.total_shots:
        positions = g.basis.positions(alpha[valid], beta[valid])
        distribution[positions] = counts[valid] / master.total_shots
    return distribution


def _batch_errors(ctx: ChainContext, cfg: ExperimentConfig, g: GroundState, distribution: np.ndarray,
                  rng: np.random.Generator) -> np.ndarray:
    """Energy error along the shot schedule for one batch grown as a nested basis."""
    spec = ctx.spec
    H = ctx.hamiltonian(cfg.basis_kind)
    cache = ProjectedHamiltonian(H, spec.n_up, spec.n_down)
    lost = max(0.0, 1.0 - distribution.sum())
    outcomes = np.append(distribution, lost)
    outcomes /= outcomes.sum()
    drawn = np.zeros(len(g.basis), dtype=bool)
    errors = np.full(len(cfg.shots), np.nan)
    previous, energy = 0, None
    for k, shots in enumerate(cfg.shots):
        hits = rng.multinomial(shots - previous, outcomes)[:-1] > 0
        previous = shots
        new = np.flatnonzero(hits & ~drawn)
        drawn |= hits
        if new.size:
            rng.shuffle(new)
            cache.extend(g.basis.alpha[new], g.basis.beta[new])
            energy = cache.ground_state().energy
        if energy is not None:
            errors[k] = energy - g.energy
    return errors


def run_convergence(cfg: ExperimentConfig, ctx: Optional[ChainContext] = None) -> ConvergenceCurve:
    """
    Expected missing fraction, expected unique determinants and batch-averaged energy error
    along the shot schedule, all measured against the FCI state in ``cfg.basis_kind`` orbitals.
    """
    with _stage('hamiltonian'):
        ctx = ctx or prepare_chain(cfg)
    with _stage('basis'):
        ctx.hamiltonian(cfg.basis_kind)
    with _stage('fci'):
        g = ctx.fci(cfg.basis_kind)
    keys, probs, census = measurement_distribution(ctx, cfg, g)

    seeds = np.random.SeedSequence(cfg.seed).spawn(3 + cfg.batches)
    generators = [np.random.default_rng(s) for s in seeds]
    distribution = _mitigated_distribution(ctx, cfg, g, keys, probs, generators[:3])

    shots = np.array(cfg.shots, dtype=np.int64)
    weights = g.weights()
    f = np.atleast_1d(expected_missing_fraction(weights, distribution, shots))
    unique = np.atleast_1d(expected_unique(distribution, shots))
    if cfg.method is not Method.IDEAL_SQD:
        ideal = np.atleast_1d(expected_missing_fraction(weights, weights, shots))
        below = np.flatnonzero(f < ideal - 1e-12)
        if below.size:
            logger.warning('%s r=%d beats ideal sampling in expected f at %d shots', cfg.method.value, cfg.r,
                           int(shots[below[0]]))

    mean = std = np.full(shots.size, np.nan)
    if cfg.compute_energies:
        with _stage('sci'):
            errors = np.array([_batch_errors(ctx, cfg, g, distribution, rng) for rng in generators[3:]])
        with np.errstate(invalid='ignore'):
            mean, std = np.nanmean(errors, axis=0), np.nanstd(errors, axis=0)

    info = {'L': ctx.spec.L, 'method': cfg.method.value, 'r': cfg.r, 'basis_kind': cfg.basis_kind.value,
            'e_fci': g.energy}
    logger.info('convergence %s L=%d r=%d basis=%s: f=%.3e at %d shots', cfg.method.value, ctx.spec.L, cfg.r,
                cfg.basis_kind.value, f[-1], int(shots[-1]))
    return ConvergenceCurve(shots, f, unique, mean, std, census, info)


def _crossing(curve: ConvergenceCurve, threshold: float) -> Optional[Tuple[int, float]]:
    """Index k and fraction t of the first crossing below ``threshold`` between points k-1 and k."""
    e = np.asarray(curve.e_err_mean, dtype=np.float64)
    if e.size == 0:
        raise ParameterError('empty convergence curve')
    below = np.flatnonzero(e < threshold)
    if below.size == 0:
        return None
    k = int(below[0])
    if k == 0 or not np.isfinite(e[k - 1]):
        return k, 1.0
    return k, float((e[k - 1] - threshold) / (e[k - 1] - e[k]))


def shots_to_accuracy(curve: ConvergenceCurve, threshold: float = CHEMICAL_ACCURACY) -> Optional[float]:
    """Shots at the first log-linear crossing of the mean energy error below threshold, None if never."""
    crossing = _crossing(curve, threshold)
    if crossing is None:
        return None
    k, t = crossing
    if t == 1.0:
        return float(curve.shots[k])
    lo, hi = math.log10(curve.shots[k - 1]), math.log10(curve.shots[k])
    return float(10 ** (lo + t * (hi - lo)))


def dets_at_accuracy(curve: ConvergenceCurve, threshold: float = CHEMICAL_ACCURACY) -> Optional[float]:
    """Expected unique determinants at the same crossing."""
    crossing = _crossing(curve, threshold)
    if crossing is None:
        return None
    k, t = crossing
    if t == 1.0:
        return float(curve.unique_expected[k])
    u = curve.unique_expected
    return float(u[k - 1] + t * (u[k] - u[k - 1]))


def fit_power_law(points: Sequence[Tuple[float, float]]) -> float:
    """Least-squares slope of log y against log L."""
    points = list(points)
    if len(points) < 2:
        raise ParameterError(f'a power-law fit needs at least 2 points, got {len(points)}')
    L, y = (np.array(v, dtype=np.float64) for v in zip(*points))
    if (L <= 0).any() or (y <= 0).any():
        raise ParameterError('power-law fits need positive values')
    return float(np.polyfit(np.log(L), np.log(y), 1)[0])


def spin_gap(H: Hamiltonian, spec: ChainSpec) -> float:
    """E0 with one alpha electron more and one beta electron less, minus E0 of ``spec``."""
    if spec.n_up + 1 > spec.n_orb or spec.n_down < 1:
        raise ParameterError(f'no Sz + 1 sector next to ({spec.n_up}, {spec.n_down}) in {spec.n_orb} orbitals')
    ground = fci_ground_state(H, spec).energy
    excited = fci_ground_state(H, spec.with_electrons(spec.n_up + 1, spec.n_down - 1)).energy
    logger.info('spin gap L=%d: %.6f eV', spec.L, excited - ground)
    return excited - ground


def cu_densities(occupations: np.ndarray) -> np.ndarray:
    """Cu d densities of a chain's per-orbital occupations (even orbital indices)."""
    cu = np.asarray(occupations)[0::2]
    lo, hi = CU_DENSITY_WINDOW
    if (cu < lo).any() or (cu > hi).any():
        logger.warning('Cu densities %s fall outside [%.1f, %.1f]', np.round(cu, 3).tolist(), lo, hi)
    return cu


@dataclass(frozen=True)
class ScalingRow:
    L: int
    shots_to_acc: Optional[float]
    dets_at_acc: Optional[float]
    n_two_qubit: int


@dataclass(frozen=True)
class ScalingResult:
    rows: Tuple[ScalingRow, ...]
    exponents: Dict[str, Optional[float]]

    def to_csv(self) -> str:
        def cell(v):
            return NOT_REACHED if v is None else repr(v)

        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['L', 'shots_to_acc', 'dets_at_acc', 'n_two_qubit'])
        for row in self.rows:
            writer.writerow([row.L, cell(row.shots_to_acc), cell(row.dets_at_acc), row.n_two_qubit])
        return out.getvalue()

    @staticmethod
    def from_csv(text: str) -> List[ScalingRow]:
        def value(v):
            return None if v == NOT_REACHED else float(v)

        return [ScalingRow(int(r['L']), value(r['shots_to_acc']), value(r['dets_at_acc']), int(r['n_two_qubit']))
                for r in csv.DictReader(io.StringIO(text))]


def _scaling_row(cfg: ExperimentConfig) -> ScalingRow:
    ctx = prepare_chain(cfg)
    curve = run_convergence(cfg, ctx)
    census = curve.census
    if census is None:
        census = gate_census(ansatz_circuit(ctx, cfg, Method.UCJ))
    return ScalingRow(cfg.chain.L, shots_to_accuracy(curve, cfg.chemical_accuracy),
                      dets_at_accuracy(curve, cfg.chemical_accuracy), census.n_two_qubit)


def run_scaling(cfg: ExperimentConfig, lengths: Sequence[int],
                max_workers: int = THREAD_POOL_MAX_EXECUTORS) -> ScalingResult:
    """
    One convergence run per chain length, in a thread pool, with power-law exponents of the
    shots, determinants and two-qubit gates needed for chemical accuracy.
    """
    configs = [cfg.with_length(L) for L in lengths]
    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(configs)))) as pool:
        rows = tuple(pool.map(_scaling_row, configs))

    def exponent(name):
        points = [(row.L, getattr(row, name)) for row in rows]
        if len(points) < 2 or any(v is None for _, v in points):
            return None
        return fit_power_law(points)

    exponents = {name: exponent(name) for name in ('shots_to_acc', 'dets_at_acc', 'n_two_qubit')}
    logger.info('scaling exponents over L=%s: %s', list(lengths), exponents)
    return ScalingResult(rows, exponents)


def run_metadata(cfg: ExperimentConfig, **extra) -> Dict[str, Any]:
    import numba
    import scipy

    from . import __version__
    return {
        'config': cfg.to_dict(),
        'seed': cfg.seed,
        'versions': {'sqdlab': __version__, 'numpy': np.__version__, 'scipy': scipy.__version__,
                     'numba': numba.__version__},
        **extra,
    }
