import numpy as np
import pytest
from scipy import sparse

from ternary_ch.linalg import BlockSystem, SolverError, SolverSettings, flatten_block_system, solve
from ternary_ch.mesh import DimensionError


def spd(n, seed=0):
    rng = np.random.default_rng(seed)
    B = sparse.random(n, n, density=0.2, random_state=seed) + sparse.eye(n) * n
    return (B + B.T).tocsr(), rng.standard_normal(n)


@pytest.mark.parametrize("method", ["direct", "gmres", "bicgstab"])
def test_solvers_meet_residual(method):
    A, b = spd(60)
    x = solve(A, b, SolverSettings(method, tol=1e-10))
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_zero_rhs_short_circuit():
    A, _ = spd(10)
    assert np.array_equal(solve(A, np.zeros(10)), np.zeros(10))


def test_singular_matrix_raises():
    A = sparse.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolverError):
        solve(A, np.array([1.0, 0.0]))


def test_shape_errors():
    with pytest.raises(DimensionError):
        solve(sparse.eye(3).tocsr(), np.ones(4))
    with pytest.raises(ValueError):
        solve(sparse.eye(3).tocsr(), np.ones(3), SolverSettings("cholesky"))


def test_unreachable_tolerance_reports_residual():
    A, b = spd(40)
    with pytest.raises(SolverError) as info:
        solve(A, b, SolverSettings("gmres", tol=1e-30, maxiter=2))
    assert info.value.residual > 0


def test_block_flatten_ordering_and_sums():
    a = sparse.eye(2).tocsr()
    sys_ = BlockSystem([2, 2])
    sys_.add(0, 0, a, 2.0)
    sys_.add(0, 0, a, 1.0)
    sys_.add(0, 1, a, -1.0)
    sys_.add(1, 0, a)
    sys_.rhs = [np.ones(2), 2 * np.ones(2)]
    A, b = flatten_block_system(sys_)
    assert np.array_equal(A.toarray(), [[3, 0, -1, 0], [0, 3, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]])
    assert np.array_equal(b, [1, 1, 2, 2])
    assert np.all(A.data != 0)


def test_block_shape_mismatch():
    sys_ = BlockSystem([2, 3])
    sys_.add(0, 1, sparse.eye(2).tocsr())
    with pytest.raises(DimensionError):
        flatten_block_system(sys_)
    sys_ = BlockSystem([2])
    sys_.add(1, 0, sparse.eye(2).tocsr())
    with pytest.raises(DimensionError):
        flatten_block_system(sys_)
