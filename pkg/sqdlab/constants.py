import os
from enum import Enum

FCI_MAX_DIMENSION: int = int(os.getenv('SQDLAB_FCI_MAX_DIMENSION') or 1_000_000)
FULL_SIM_MAX_QUBITS: int = int(os.getenv('SQDLAB_FULL_SIM_MAX_QUBITS') or 16)

SCF_MAX_ITERATIONS: int = int(os.getenv('SQDLAB_SCF_MAX_ITERATIONS') or 500)
SCF_TOLERANCE: float = float(os.getenv('SQDLAB_SCF_TOLERANCE') or 1e-8)
SCF_MIXING: float = float(os.getenv('SQDLAB_SCF_MIXING') or 0.5)
SCF_DIIS_SPACE: int = int(os.getenv('SQDLAB_SCF_DIIS_SPACE') or 8)
SCF_DIIS_START: int = int(os.getenv('SQDLAB_SCF_DIIS_START') or 2)
SCF_LEVEL_SHIFT: float = float(os.getenv('SQDLAB_SCF_LEVEL_SHIFT') or 0.5)  # eV

DAVIDSON_TOLERANCE: float = float(os.getenv('SQDLAB_DAVIDSON_TOLERANCE') or 1e-8)
DAVIDSON_MAX_ITERATIONS: int = int(os.getenv('SQDLAB_DAVIDSON_MAX_ITERATIONS') or 200)
DAVIDSON_MAX_SUBSPACE: int = int(os.getenv('SQDLAB_DAVIDSON_MAX_SUBSPACE') or 32)
DENSE_SOLVE_DIMENSION: int = int(os.getenv('SQDLAB_DENSE_SOLVE_DIMENSION') or 64)
EXPLICIT_BASIS_MAX: int = int(os.getenv('SQDLAB_EXPLICIT_BASIS_MAX') or 4000)

SCREENING_FACTOR: float = float(os.getenv('SQDLAB_SCREENING_FACTOR') or 0.5)
KINETIC_SCALE: float = float(os.getenv('SQDLAB_KINETIC_SCALE') or 0.7)

MASTER_SHOTS: int = int(os.getenv('SQDLAB_MASTER_SHOTS') or round(10 ** 6.5))
BATCHES: int = int(os.getenv('SQDLAB_BATCHES') or 10)
CHEMICAL_ACCURACY: float = float(os.getenv('SQDLAB_CHEMICAL_ACCURACY') or 0.027)  # eV, 1 mHa
SHOTS_EXPONENTS = tuple(1.0 + 0.5 * k for k in range(10))  # 10^1 ... 10^5.5

UNITARY_TOLERANCE: float = 1e-10
SYMMETRY_TOLERANCE: float = 1e-12
DEGENERACY_TOLERANCE: float = 1e-10
GIVENS_TOLERANCE: float = 1e-14

THREAD_POOL_MAX_EXECUTORS: int = int(os.getenv('SQDLAB_THREAD_POOL_MAX_EXECUTORS') or 4)
LOG_LEVEL: str = os.getenv('SQDLAB_LOG_LEVEL') or 'WARNING'


class BasisKind(str, Enum):
    HF = 'HF'
    KIN = 'KIN'
    HFPLUS = 'HFPLUS'


class Method(str, Enum):
    IDEAL_SQD = 'IDEAL_SQD'
    UCJ = 'UCJ'
    LUCJ = 'LUCJ'


class SampleOrigin(str, Enum):
    SIMULATED = 'SIMULATED'
    NOISY = 'NOISY'
    EXTERNAL = 'EXTERNAL'


class Mitigation(str, Enum):
    NONE = 'none'
    POSTSELECT = 'postselect'
    RECOVER = 'recover'


class T2Source(str, Enum):
    MP2 = 'MP2'
    FILE = 'FILE'


class Provenance(str, Enum):
    FILE = 'file'
    SURROGATE = 'surrogate'
