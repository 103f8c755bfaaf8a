import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from mixcomp import matcore
from mixcomp.utils import NotPositiveSemidefiniteError, ValidationError

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


class TestHermEig:
    def test_sorted_descending(self):
        w, v = matcore.herm_eig(np.diag([0.2, 0.5, 0.3]))
        np.testing.assert_allclose(w, [0.5, 0.3, 0.2])
        np.testing.assert_allclose(np.abs(v[:, 0]), [0, 1, 0])

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError, match=r".*not Hermitian.*"):
            matcore.herm_eig(np.array([[0, 1], [0, 0]]))

    @settings(max_examples=25, deadline=None)
    @given(seeds, st.integers(min_value=1, max_value=8))
    def test_reconstructs(self, seed, dim):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        h = x + matcore.dagger(x)
        w, v = matcore.herm_eig(h)
        assert np.all(np.diff(w) <= 0)
        np.testing.assert_allclose((v * w) @ matcore.dagger(v), h, atol=1e-10)
        np.testing.assert_allclose(matcore.dagger(v) @ v, np.eye(dim), atol=1e-10)


def test_psd_sqrt():
    p = np.array([[2, 1], [1, 2]], dtype=complex)
    root = matcore.psd_sqrt(p)
    np.testing.assert_allclose(root @ root, p, atol=1e-12)
    np.testing.assert_allclose(matcore.psd_sqrt(np.diag([1, -1e-9])), np.diag([1, 0]), atol=1e-12)
    with pytest.raises(NotPositiveSemidefiniteError, match=r".*not positive semidefinite.*"):
        matcore.psd_sqrt(np.diag([1, -0.1]))


def test_kron_all():
    x = np.array([[0, 1], [1, 0]])
    np.testing.assert_allclose(matcore.kron_all([x, np.eye(2)]), np.kron(x, np.eye(2)))
    np.testing.assert_allclose(matcore.kron_all([]), np.ones((1, 1)))


class TestPartialTrace:
    def test_product_state(self, rng):
        a = matcore.random_density_matrix(2, rng)
        b = matcore.random_density_matrix(3, rng)
        c = matcore.random_density_matrix(2, rng)
        abc = matcore.kron_all([a, b, c])
        np.testing.assert_allclose(matcore.partial_trace(abc, [2, 3, 2], [1]), b, atol=1e-12)
        np.testing.assert_allclose(
            matcore.partial_trace(abc, [2, 3, 2], [0, 2]), np.kron(a, c), atol=1e-12
        )
        np.testing.assert_allclose(matcore.partial_trace(abc, [2, 3, 2], []), [[1]], atol=1e-12)

    def test_bell_state(self):
        bell = np.zeros(4)
        bell[[0, 3]] = 1 / np.sqrt(2)
        reduced = matcore.partial_trace(np.outer(bell, bell), [2, 2], [0])
        np.testing.assert_allclose(reduced, np.eye(2) / 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            matcore.partial_trace(np.eye(4), [2, 3], [0])

    def test_composition(self, rng):
        m = matcore.random_density_matrix(24, rng)
        dims = [2, 3, 4]
        np.testing.assert_allclose(
            matcore.partial_trace(matcore.partial_trace(m, dims, [0, 1]), [2, 3], [0]),
            matcore.partial_trace(m, dims, [0]),
            atol=1e-12,
        )
        np.testing.assert_allclose(
            matcore.partial_trace(matcore.partial_trace(m, dims, [1, 2]), [3, 4], [1]),
            matcore.partial_trace(m, dims, [2]),
            atol=1e-12,
        )

    def test_preserves_trace_of_entangled_state(self, rng):
        m = matcore.random_density_matrix(12, rng)
        for keep in ([0], [1]):
            reduced = matcore.partial_trace(m, [3, 4], keep)
            assert np.trace(reduced) == pytest.approx(1, abs=1e-12)
            w, _ = matcore.herm_eig(reduced)
            assert w[-1] > -1e-12


class TestAlgebraClosure:
    def test_pauli_generates_everything(self):
        x = np.array([[0, 1], [1, 0]])
        z = np.diag([1, -1])
        algebra = matcore.algebra_closure([x, z], 2)
        assert algebra.size == 4
        assert algebra.gram_residual() < 1e-12

    def test_diagonal_generates_diagonal(self):
        algebra = matcore.algebra_closure([np.diag([1, 2, 3])], 3)
        assert algebra.size == 3
        assert algebra.residual(np.diag([5, -1, 2])) < 1e-10
        assert algebra.residual(np.ones((3, 3))) > 0.1

    def test_no_generators(self):
        algebra = matcore.algebra_closure([], 3)
        assert algebra.size == 1


class TestCommutant:
    def test_tensor_product(self, rng):
        a = matcore.random_density_matrix(2, rng)
        b = matcore.random_density_matrix(2, rng)
        generators = [np.kron(a, np.eye(2)), np.kron(b, np.eye(2))]
        commutant = matcore.commutant_basis(generators, 4)
        assert commutant.size == 4
        assert commutant.residual(np.kron(np.eye(2), np.diag([1, 3]))) < 1e-8

    def test_irreducible_pair(self, rng):
        commutant = matcore.commutant_basis([np.diag([1, 0]), np.full((2, 2), 0.5)], 2)
        assert commutant.size == 1
        assert commutant.residual(np.eye(2)) < 1e-10

    def test_double_commutant(self, rng):
        generators = [np.kron(matcore.random_density_matrix(2, rng), np.eye(2)) for _ in range(2)]
        algebra = matcore.algebra_closure(generators, 4)
        commutant = matcore.commutant_basis(generators, 4)
        hermitian = [e + matcore.dagger(e) for e in commutant.elements]
        hermitian += [1j * (e - matcore.dagger(e)) for e in commutant.elements]
        bicommutant = matcore.commutant_basis(hermitian, 4)
        assert algebra.size == bicommutant.size == 4
        assert bicommutant.contains(algebra)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValidationError):
            matcore.commutant_basis([np.array([[0, 1], [0, 0]])], 2)

    def test_matches_commutant_of_closure(self, rng):
        generators = [
            scipy.linalg.block_diag(matcore.random_density_matrix(2, rng), np.eye(1)),
            scipy.linalg.block_diag(matcore.random_density_matrix(2, rng), 0.5 * np.eye(1)),
        ]
        algebra = matcore.algebra_closure(generators, 3)
        commutant = matcore.commutant_basis(generators, 3)
        hermitian = [e + matcore.dagger(e) for e in algebra.elements]
        hermitian += [1j * (e - matcore.dagger(e)) for e in algebra.elements]
        closure_commutant = matcore.commutant_basis(hermitian, 3)
        assert commutant.size == closure_commutant.size == 2
        assert commutant.contains(closure_commutant)
        assert closure_commutant.contains(commutant)

    def test_trivial_exactly_when_closure_is_full(self):
        rng = np.random.default_rng(3)
        for case in range(50):
            kind = case % 3
            if kind == 0:
                dim = int(rng.integers(2, 5))
                generators = [matcore.random_density_matrix(dim, rng) for _ in range(2)]
            elif kind == 1:
                dim = 4
                generators = [
                    np.kron(matcore.random_density_matrix(2, rng), np.eye(2)) for _ in range(2)
                ]
            else:
                a, b = int(rng.integers(1, 3)), int(rng.integers(1, 3))
                dim = a + b
                generators = [
                    scipy.linalg.block_diag(
                        matcore.random_density_matrix(a, rng),
                        matcore.random_density_matrix(b, rng),
                    )
                    for _ in range(2)
                ]
            commutant = matcore.commutant_basis(generators, dim)
            algebra = matcore.algebra_closure(generators, dim)
            assert (commutant.size == 1) == (algebra.size == dim ** 2)
            assert (commutant.size == 1) == (kind == 0)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=6))
def test_haar_unitary(seed, dim):
    u = matcore.haar_unitary(dim, np.random.default_rng(seed))
    np.testing.assert_allclose(matcore.dagger(u) @ u, np.eye(dim), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=6))
def test_random_density_matrix(seed, dim):
    rho = matcore.random_density_matrix(dim, np.random.default_rng(seed))
    w, _ = matcore.herm_eig(rho)
    assert w[-1] > -1e-12
    assert np.sum(w) == pytest.approx(1)


def test_phase_fix():
    m = np.array([[0, 1j], [1, 0]])
    fixed = matcore.phase_fix(m)
    assert fixed[0, 1] == pytest.approx(1)
    assert fixed[1, 0] == pytest.approx(-1j)


class TestNullspace:
    def test_rounding_noise_is_zero(self):
        np.testing.assert_allclose(np.abs(matcore.nullspace(np.array([[1e-17]]))), [[1]])
        np.testing.assert_allclose(matcore.nullspace(np.zeros((2, 3))), np.eye(3))

    def test_rank_deficient(self):
        null = matcore.nullspace(np.array([[1, 1], [2, 2]]))
        assert null.shape == (2, 1)
        np.testing.assert_allclose(np.abs(null[:, 0]), [1 / np.sqrt(2)] * 2, atol=1e-12)

    def test_full_rank(self):
        assert matcore.nullspace(np.diag([1e-3, 2.0])).shape == (2, 0)
