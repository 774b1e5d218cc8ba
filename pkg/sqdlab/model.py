import json
import logging
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, Optional, Union

import numpy as np

from .constants import KINETIC_SCALE, SCREENING_FACTOR, SYMMETRY_TOLERANCE, UNITARY_TOLERANCE, Provenance
from .utils import is_orthogonal

logger = logging.getLogger(__name__)

# Index permutations generating the real-orbital 8-fold symmetry of (pq|rs).
_EIGHTFOLD = (
    (0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
    (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0),
)

# Dimer orbital order {d1, p1, d2, p2}; nearest-neighbour Cu-O pairs along the chain.
_DIMER_CU = (0, 2)
_DIMER_O = (1, 3)
_DIMER_BONDS = ((0, 1), (1, 2), (2, 3))


class ParameterError(ValueError):
    pass


def symmetrize_eri(V: np.ndarray) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    return sum(V.transpose(p) for p in _EIGHTFOLD) / len(_EIGHTFOLD)


def eri_asymmetry(V: np.ndarray) -> float:
    """
    Largest deviation of ``V`` from any of its 8-fold symmetric images.
    """
    V = np.asarray(V)
    if V.size == 0:
        return 0.0
    return max(float(np.max(np.abs(V - V.transpose(p)))) for p in _EIGHTFOLD[1:])


def density_density_residual(V: np.ndarray) -> float:
    """
    Norm of ``V`` after removing every (pp|qq) entry. Zero means V is purely density-density.
    """
    rest = np.array(V, dtype=np.float64, copy=True)
    n = rest.shape[0]
    p, q = np.meshgrid(np.arange(n), np.arange(n), indexing='ij')
    rest[p, p, q, q] = 0.0
    return float(np.linalg.norm(rest))


def is_density_density(V: np.ndarray, tol: float = SYMMETRY_TOLERANCE) -> bool:
    return density_density_residual(V) < tol


def _check_one_body(h: np.ndarray, n: int, name: str):
    if h.shape != (n, n):
        raise ParameterError(f'{name} must have shape ({n}, {n}), got {h.shape}')
    if not np.all(np.isfinite(h)):
        raise ParameterError(f'{name} contains non-finite entries')
    asym = float(np.max(np.abs(h - h.T), initial=0.0))
    if asym >= SYMMETRY_TOLERANCE:
        raise ParameterError(f'{name} is not symmetric (max asymmetry {asym:.3e})')


def _check_two_body(V: np.ndarray, n: int, name: str):
    if V.shape != (n, n, n, n):
        raise ParameterError(f'{name} must have shape ({n},)*4, got {V.shape}')
    if not np.all(np.isfinite(V)):
        raise ParameterError(f'{name} contains non-finite entries')
    asym = eri_asymmetry(V)
    if asym >= SYMMETRY_TOLERANCE:
        raise ParameterError(f'{name} violates 8-fold symmetry (max asymmetry {asym:.3e})')


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ChainSpec:
    """
    Shape of a two-band chain: L plaquettes of one Cu d and one O p orbital each,
    ordered d1 p1 d2 p2 ... dL pL.

    Electron counts default to 3L/2 per spin, which needs an even L.
    """
    L: int
    n_up: Optional[int] = None
    n_down: Optional[int] = None
    screening_factor: float = SCREENING_FACTOR
    kinetic_scale: float = KINETIC_SCALE
    interplaquette_coulomb: bool = True

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or isinstance(self.L, bool) or self.L < 1:
            raise ParameterError(f'L must be a positive integer, got {self.L!r}')
        if self.n_up is None or self.n_down is None:
            if self.L % 2:
                raise ParameterError(f'odd L={self.L} needs explicit n_up and n_down')
            default = 3 * self.L // 2
            object.__setattr__(self, 'n_up', default if self.n_up is None else self.n_up)
            object.__setattr__(self, 'n_down', default if self.n_down is None else self.n_down)
        for name in ('n_up', 'n_down'):
            value = getattr(self, name)
            if not 0 <= value <= self.n_orb:
                raise ParameterError(f'{name}={value} outside [0, {self.n_orb}]')
        if not 0 < self.screening_factor <= 1:
            raise ParameterError(f'screening_factor must lie in (0, 1], got {self.screening_factor}')
        if not 0 < self.kinetic_scale <= 1:
            raise ParameterError(f'kinetic_scale must lie in (0, 1], got {self.kinetic_scale}')

    @property
    def n_orb(self) -> int:
        return 2 * self.L

    def with_electrons(self, n_up: int, n_down: int) -> 'ChainSpec':
        return ChainSpec(self.L, n_up, n_down, self.screening_factor, self.kinetic_scale,
                         self.interplaquette_coulomb)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @staticmethod
    def from_dict(d: Dict[str, Any]) -> 'ChainSpec':
        return ChainSpec(**d)


@dataclass(frozen=True)
class SurrogateParams:
    """
    Extended two-band parameters in eV. ``x_offdiag`` is the Cu-O exchange amplitude
    that keeps the interaction from being purely density-density.
    """
    eps_d: float = 0.0
    eps_p: float = 0.0
    t_pd: float = 0.0
    U_d: float = 0.0
    U_p: float = 0.0
    U_pd: float = 0.0
    x_offdiag: float = 0.0

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


# Tuning recipe: holes sit on Cu, and the charge-transfer gap is Delta = eps_d - eps_p + U_d - U_p.
# The superexchange grows like t_pd^4 / Delta^2. The direct Cu-O exchange x_offdiag is ferromagnetic
# and enters at second order in t_pd, so it is kept small. Corrections to an ideal Heisenberg chain
# scale like (t_pd / Delta)^2. The default preset (Delta = 4.5 eV) puts the L=2 spin gap near 0.1 eV.
# strong_coupling (Delta = 7 eV) cuts t_pd / Delta below 0.2, so its gap ratios follow an open Heisenberg chain.
SURROGATE_PRESETS: Dict[str, SurrogateParams] = {
    'default': SurrogateParams(eps_d=0.0, eps_p=0.0, t_pd=2.0, U_d=9.0, U_p=4.5, U_pd=0.5, x_offdiag=0.05),
    'strong_coupling': SurrogateParams(eps_d=0.0, eps_p=0.0, t_pd=1.3, U_d=11.0, U_p=4.0, U_pd=0.5, x_offdiag=0.02),
}


def surrogate_params(preset: str = 'default') -> SurrogateParams:
    try:
        return SURROGATE_PRESETS[preset]
    except KeyError:
        raise ParameterError(f'unknown surrogate preset {preset!r}, expected one of {sorted(SURROGATE_PRESETS)}')


@dataclass(frozen=True, eq=False)
class DimerModel:
    h2: np.ndarray
    V2: np.ndarray
    provenance: Provenance = Provenance.FILE

    def __post_init__(self):
        object.__setattr__(self, 'h2', _frozen(self.h2))
        object.__setattr__(self, 'V2', _frozen(self.V2))
        object.__setattr__(self, 'provenance', Provenance(self.provenance))
        _check_one_body(self.h2, 4, 'h2')
        _check_two_body(self.V2, 4, 'V2')

    def to_json(self) -> str:
        return json.dumps({
            'n_orb': 4,
            'h': self.h2.tolist(),
            'V': self.V2.ravel().tolist(),
            'e_core': 0.0,
            'units': 'eV',
            'provenance': self.provenance.value,
        })

    @staticmethod
    def from_json(text: str) -> 'DimerModel':
        d = json.loads(text)
        h, V, _ = _integrals_from_dict(d)
        if h.shape != (4, 4):
            raise ParameterError(f'a dimer has 4 orbitals, file declares {h.shape[0]}')
        return DimerModel(h, V, d.get('provenance', Provenance.FILE.value))


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """
    H = sum_pq h_pq E_pq + 1/2 sum_pqrs (pq|rs) a+_p,s a+_r,t a_s,t a_q,s + e_core,
    with V[p,q,r,s] = (pq|rs) in chemist notation over real orbitals.
    """
    h: np.ndarray
    V: np.ndarray
    e_core: float = 0.0
    spec: Optional[ChainSpec] = None

    def __post_init__(self):
        object.__setattr__(self, 'h', _frozen(self.h))
        object.__setattr__(self, 'V', _frozen(self.V))
        object.__setattr__(self, 'e_core', float(self.e_core))
        n = self.h.shape[0] if self.h.ndim == 2 else -1
        _check_one_body(self.h, n, 'h')
        _check_two_body(self.V, n, 'V')
        if self.spec is not None and self.spec.n_orb != n:
            raise ParameterError(f'spec describes {self.spec.n_orb} orbitals, integrals have {n}')

    @property
    def n_orb(self) -> int:
        return self.h.shape[0]

    def max_asymmetry(self) -> float:
        return max(float(np.max(np.abs(self.h - self.h.T))), eri_asymmetry(self.V))

    def with_spec(self, spec: ChainSpec) -> 'Hamiltonian':
        return Hamiltonian(self.h, self.V, self.e_core, spec)

    def to_json(self) -> str:
        d = {
            'n_orb': self.n_orb,
            'h': self.h.tolist(),
            'V': self.V.ravel().tolist(),
            'e_core': self.e_core,
            'units': 'eV',
        }
        if self.spec is not None:
            d['spec'] = self.spec.to_dict()
        return json.dumps(d)

    @staticmethod
    def from_json(text: str) -> 'Hamiltonian':
        d = json.loads(text)
        h, V, e_core = _integrals_from_dict(d)
        spec = ChainSpec.from_dict(d['spec']) if d.get('spec') else None
        return Hamiltonian(h, V, e_core, spec)


def _integrals_from_dict(d: Dict[str, Any]):
    if d.get('units', 'eV') != 'eV':
        raise ParameterError(f"integrals must be in eV, file declares {d.get('units')!r}")
    try:
        n = int(d['n_orb'])
        h = np.asarray(d['h'], dtype=np.float64).reshape(n, n)
        V = np.asarray(d['V'], dtype=np.float64).reshape(n, n, n, n)
    except (KeyError, ValueError) as e:
        raise ParameterError(f'malformed integral file: {e}') from e
    return h, V, float(d.get('e_core', 0.0))


def surrogate_dimer(params: Union[SurrogateParams, Dict[str, float]]) -> DimerModel:
    """
    Build the dimer integrals of an extended two-band model.

    :param params: on-site energies, Cu-O hopping, on-site and nearest-neighbour repulsions and
        the Cu-O exchange amplitude, all in eV
    :returns: a DimerModel tagged as surrogate
    """
    if isinstance(params, dict):
        try:
            params = SurrogateParams(**params)
        except TypeError as e:
            raise ParameterError(f'unknown surrogate parameter: {e}') from e
    values = params.to_dict()
    bad = [k for k, v in values.items() if not np.isfinite(v)]
    if bad:
        raise ParameterError(f'non-finite surrogate parameters: {", ".join(bad)}')
    if params.x_offdiag == 0:
        logger.warning('x_offdiag = 0: the surrogate interaction is purely density-density')

    h2 = np.zeros((4, 4))
    for a in _DIMER_CU:
        h2[a, a] = params.eps_d
    for a in _DIMER_O:
        h2[a, a] = params.eps_p
    for a, b in _DIMER_BONDS:
        h2[a, b] = h2[b, a] = -params.t_pd

    V2 = np.zeros((4, 4, 4, 4))
    for a in _DIMER_CU:
        V2[a, a, a, a] = params.U_d
    for a in _DIMER_O:
        V2[a, a, a, a] = params.U_p
    for a, b in _DIMER_BONDS:
        V2[a, a, b, b] = V2[b, b, a, a] = params.U_pd
        V2[a, b, a, b] = V2[a, b, b, a] = V2[b, a, a, b] = V2[b, a, b, a] = params.x_offdiag
    return DimerModel(h2, symmetrize_eri(V2), Provenance.SURROGATE)


def extend_to_chain(dimer: DimerModel, spec: ChainSpec) -> Hamiltonian:
    """
    Superpose the dimer on every adjacent plaquette pair of the chain.

    Entries covered by several placements take the mean of the placed dimer values. Two-body
    entries whose indices touch two plaquettes are multiplied by ``spec.screening_factor``
    (or zeroed when ``spec.interplaquette_coulomb`` is off); h is scaled by ``spec.kinetic_scale``.
    """
    if spec.L < 2:
        raise ParameterError(f'a chain needs at least two plaquettes, got L={spec.L}')
    n = spec.n_orb
    h_sum, h_cnt = np.zeros((n, n)), np.zeros((n, n))
    V_sum, V_cnt = np.zeros((n,) * 4), np.zeros((n,) * 4)
    for j in range(spec.L - 1):
        idx = np.arange(2 * j, 2 * j + 4)
        h_sum[np.ix_(idx, idx)] += dimer.h2
        h_cnt[np.ix_(idx, idx)] += 1
        V_sum[np.ix_(idx, idx, idx, idx)] += dimer.V2
        V_cnt[np.ix_(idx, idx, idx, idx)] += 1

    h = np.divide(h_sum, h_cnt, out=np.zeros_like(h_sum), where=h_cnt > 0) * spec.kinetic_scale
    V = np.divide(V_sum, V_cnt, out=np.zeros_like(V_sum), where=V_cnt > 0)

    plaquette = np.arange(n) // 2
    grids = np.meshgrid(plaquette, plaquette, plaquette, plaquette, indexing='ij')
    spans = np.maximum.reduce(grids) != np.minimum.reduce(grids)
    V[spans] *= spec.screening_factor if spec.interplaquette_coulomb else 0.0

    logger.debug('extended dimer to L=%d (%d orbitals, %d interplaquette entries)', spec.L, n, int(spans.sum()))
    return Hamiltonian(h, symmetrize_eri(V), 0.0, spec)


def rotate_integrals(H: Hamiltonian, U: np.ndarray) -> Hamiltonian:
    """
    Express H in the orbitals given by the columns of U: h' = U^T h U and the matching
    four-index transform of V. The core energy is unchanged.
    """
    U = np.asarray(U)
    if np.iscomplexobj(U):
        if np.max(np.abs(U.imag), initial=0.0) > UNITARY_TOLERANCE:
            raise ParameterError('integrals are real; the rotation must be real orthogonal')
        U = U.real
    if U.shape != (H.n_orb, H.n_orb) or not is_orthogonal(U):
        raise ParameterError('rotation matrix is not unitary to 1e-10')
    h = U.T @ H.h @ U
    V = np.einsum('pqrs,pi,qj,rk,sl->ijkl', H.V, U, U, U, U, optimize=True)
    return Hamiltonian(0.5 * (h + h.T), symmetrize_eri(V), H.e_core, H.spec)
