import numpy as np
import pytest
import scipy.linalg
import scipy.sparse

from sqdlab.davidson import ConvergenceError, davidson, dense_lowest, lowest_eigenpair


def _random_operator(n: int, rng: np.random.Generator) -> scipy.sparse.csr_matrix:
    diagonal = rng.permutation(0.5 * np.arange(n) + rng.uniform(0.0, 0.5, n))
    R = scipy.sparse.random(n, n, density=min(1.0, 10.0 / n), random_state=rng, data_rvs=rng.standard_normal)
    return (scipy.sparse.diags(diagonal) + 0.1 * (R + R.T)).tocsr()


def test_lowest_eigenpair_matches_dense_solver():
    rng = np.random.default_rng(2024)
    sizes = list(rng.integers(2, 800, size=49)) + [2000]
    for n in sizes:
        A = _random_operator(int(n), rng)
        pair = lowest_eigenpair(lambda v: A @ v, A.diagonal())
        expected = scipy.linalg.eigh(A.toarray(), eigvals_only=True, subset_by_index=[0, 0])[0]
        assert pair.value == pytest.approx(expected, abs=1e-8)
        assert abs(np.linalg.norm(pair.vector) - 1.0) < 1e-10
        assert np.linalg.norm(A @ pair.vector - pair.value * pair.vector) < 1e-6


def test_davidson_with_guess_and_restart():
    rng = np.random.default_rng(5)
    A = _random_operator(300, rng)
    expected = dense_lowest(A.toarray())
    guess = expected.vector + 0.1 * rng.standard_normal(300)
    pair = davidson(lambda v: A @ v, A.diagonal(), guess=guess, max_subspace=4)
    assert pair.value == pytest.approx(expected.value, abs=1e-8)
    assert pair.iterations >= 1


@pytest.mark.parametrize('max_subspace', [4, 8])
def test_davidson_escapes_excited_guess(max_subspace):
    rng = np.random.default_rng(17)
    A = _random_operator(400, rng)
    values, vectors = scipy.linalg.eigh(A.toarray(), subset_by_index=[0, 1])
    pair = davidson(lambda v: A @ v, A.diagonal(), guess=vectors[:, 1], max_subspace=max_subspace,
                    max_iterations=2000)
    assert pair.value == pytest.approx(values[0], abs=1e-8)
    assert abs(pair.vector @ vectors[:, 0]) == pytest.approx(1.0, abs=1e-6)


def test_davidson_diagonal_at_ritz_value():
    # the first Ritz value equals two diagonal entries exactly
    n = 60
    A = np.diag(np.concatenate([[0.0, 0.0], np.arange(1.0, n - 1)]))
    A[0, 1] = A[1, 0] = 0.1
    A[0, 2:] = A[2:, 0] = 0.01
    pair = davidson(lambda v: A @ v, np.diag(A).copy(), guess=np.eye(n)[0], max_subspace=4)
    assert np.isfinite(pair.value)
    assert pair.value == pytest.approx(np.linalg.eigvalsh(A)[0], abs=1e-8)


def test_trivial_operators():
    pair = davidson(lambda v: 3.0 * v, np.array([3.0]))
    assert pair.value == 3.0
    with pytest.raises(ValueError, match=r'empty operator'):
        davidson(lambda v: v, np.zeros(0))
    with pytest.raises(ValueError, match=r'empty operator'):
        lowest_eigenpair(lambda v: v, np.zeros(0))
    with pytest.raises(ValueError, match=r'zero norm'):
        davidson(lambda v: v, np.arange(5.0), guess=np.zeros(5))
    with pytest.raises(ValueError, match=r'max_subspace'):
        davidson(lambda v: v, np.arange(5.0), max_subspace=3)


def test_convergence_error():
    A = _random_operator(200, np.random.default_rng(1))
    with pytest.raises(ConvergenceError) as e:
        davidson(lambda v: A @ v, A.diagonal(), tol=1e-30, max_iterations=2)
    assert e.value.iterations == 2
    assert e.value.residual > 0
    assert 'after 2 iterations' in str(e.value)
