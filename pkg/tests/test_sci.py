import numpy as np
import pytest

from sqdlab.determinant import Determinant, DeterminantBasis, ResourceGuardError, SectorError, SectorSpace
from sqdlab.model import ChainSpec, extend_to_chain, rotate_integrals, surrogate_dimer, surrogate_params
from sqdlab.orbitals import solve_hf
from sqdlab.sci import ProjectedHamiltonian, diagonalize, energy_error, excitation_numbers, excitation_profile
from sqdlab.sci import fci_ground_state, missing_fraction, orbital_occupations, sector_dimension
from sqdlab.sci import spin_correlations

DEFAULT = surrogate_params('default')


@pytest.fixture(scope='module')
def chain2():
    spec = ChainSpec(2)
    H = extend_to_chain(surrogate_dimer(DEFAULT), spec)
    return spec, H, fci_ground_state(H, spec)


@pytest.fixture(scope='module')
def chain4():
    spec = ChainSpec(4)
    H = extend_to_chain(surrogate_dimer(DEFAULT), spec)
    return spec, H, fci_ground_state(H, spec)


def test_full_basis_reproduces_fci(chain2):
    spec, H, g = chain2
    assert len(g.basis) == sector_dimension(4, 3, 3) == 16
    sci = diagonalize(SectorSpace(4, 3, 3).basis(), H)
    assert sci.energy == pytest.approx(g.energy, abs=1e-10)
    assert missing_fraction(g, g.basis) == pytest.approx(0.0, abs=1e-12)
    assert g.weights().sum() == pytest.approx(1.0)


def test_nested_bases_are_variational(chain4):
    spec, H, g = chain4
    rng = np.random.default_rng(17)
    full = g.basis
    for _ in range(100):
        order = rng.permutation(len(full))
        k1, k2 = sorted(rng.choice(np.arange(2, 300), size=2, replace=False))
        small = DeterminantBasis(8, 6, 6, full.alpha[order[:k1]], full.beta[order[:k1]])
        large = DeterminantBasis(8, 6, 6, full.alpha[order[:k2]], full.beta[order[:k2]])
        e_small, e_large = diagonalize(small, H).energy, diagonalize(large, H).energy
        assert e_small >= e_large - 1e-9
        assert e_large >= g.energy - 1e-9


def test_incremental_projection_matches_fresh_build(chain4):
    _, H, g = chain4
    full = g.basis
    order = np.random.default_rng(3).permutation(len(full))
    cache = ProjectedHamiltonian(H, 6, 6)
    cache.extend(full.alpha[order[:50]], full.beta[order[:50]])
    first = cache.ground_state()
    cache.extend(full.alpha[order[:150]], full.beta[order[:150]])
    incremental = cache.ground_state()

    fresh = ProjectedHamiltonian(H, 6, 6)
    fresh.extend(cache.basis.alpha, cache.basis.beta)
    assert np.allclose(cache.matrix().toarray(), fresh.matrix().toarray(), atol=1e-12)
    assert incremental.energy == pytest.approx(fresh.ground_state().energy, abs=1e-9)
    assert incremental.energy <= first.energy + 1e-9

    prefix = DeterminantBasis(8, 6, 6, cache.basis.alpha, cache.basis.beta)
    assert diagonalize(prefix, H, cache).energy == pytest.approx(incremental.energy, abs=1e-9)


def test_sector_operator_path_matches_explicit(chain4):
    _, H, g = chain4
    basis = DeterminantBasis(8, 6, 6, g.basis.alpha[:120], g.basis.beta[:120])
    explicit = diagonalize(basis, H)
    matrix_free = ProjectedHamiltonian(H, 6, 6, explicit_max=10)
    matrix_free.extend(basis.alpha, basis.beta)
    assert matrix_free.ground_state().energy == pytest.approx(explicit.energy, abs=1e-8)


def test_diagonalize_errors(chain2):
    _, H, _ = chain2
    with pytest.raises(ValueError, match=r'empty determinant basis'):
        diagonalize(DeterminantBasis(4, 3, 3), H)
    with pytest.raises(SectorError, match=r'different sectors'):
        diagonalize(SectorSpace(4, 3, 3).basis(), H, ProjectedHamiltonian(H, 2, 2))


def test_diagonalize_leaves_cache_unchanged(chain2):
    _, H, g = chain2
    cache = ProjectedHamiltonian(H, 3, 3)
    cache.extend(g.basis.alpha[:4], g.basis.beta[:4])
    before = cache.ground_state().energy
    wider = DeterminantBasis(4, 3, 3, g.basis.alpha[:10], g.basis.beta[:10])
    assert diagonalize(wider, H, cache).energy == pytest.approx(diagonalize(wider, H).energy, abs=1e-10)
    assert len(cache.basis) == 4
    assert cache.ground_state().energy == pytest.approx(before, abs=1e-12)

    # a cache holding determinants outside the basis is not used
    narrow = DeterminantBasis(4, 3, 3, g.basis.alpha[4:6], g.basis.beta[4:6])
    assert diagonalize(narrow, H, cache).energy == pytest.approx(diagonalize(narrow, H).energy, abs=1e-10)
    assert len(cache.basis) == 4


def test_energy_error_and_missing_fraction(chain2):
    _, H, g = chain2
    ref = Determinant.reference(4, 3, 3)
    single = DeterminantBasis(4, 3, 3, [ref.alpha], [ref.beta])
    assert energy_error(single, H, g) > 0
    assert energy_error(single, H, g.energy) == pytest.approx(energy_error(single, H, g))
    assert missing_fraction(g, single) == pytest.approx(1.0 - g.amplitude(ref) ** 2)
    with pytest.raises(SectorError, match=r'differs from the ground state'):
        missing_fraction(g, DeterminantBasis(4, 2, 3, [0b0011], [0b0111]))


def test_excitation_profile(chain2):
    spec, H, _ = chain2
    hf = solve_hf(H, 3, 3)
    g = fci_ground_state(rotate_integrals(H, hf.C), spec)
    assert excitation_numbers(g.basis).max() == 2
    ref = Determinant.reference(4, 3, 3)
    profile = excitation_profile(g, hf, DeterminantBasis(4, 3, 3, [ref.alpha], [ref.beta]))
    assert profile.n_ex.tolist() == [0, 1, 2]
    assert profile.total.sum() == pytest.approx(1.0)
    assert profile.covered[0] == pytest.approx(profile.total[0])
    assert profile.covered[1:].sum() == 0.0

    everything = excitation_profile(g, hf, g.basis)
    assert np.allclose(everything.covered, everything.total)


def test_occupations_and_spin_correlations(chain4):
    spec, _, g = chain4
    occ = orbital_occupations(g, spec)
    assert occ.sum() == pytest.approx(12.0)
    assert np.all((occ >= 0) & (occ <= 2))
    corr = spin_correlations(g)
    assert corr.sum() == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(corr, corr.T)
    assert np.all(np.diag(corr) >= 0)


def test_fci_guard():
    spec = ChainSpec(14)
    H = extend_to_chain(surrogate_dimer(DEFAULT), spec)
    with pytest.raises(ResourceGuardError, match=r'SQDLAB_FCI_MAX_DIMENSION'):
        fci_ground_state(H, spec)
