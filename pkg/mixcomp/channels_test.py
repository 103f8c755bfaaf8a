import numpy as np
import pytest

from mixcomp import channels
from mixcomp import decomposition as kidecomp
from mixcomp import ensembles, matcore, testing_utils
from mixcomp.utils import ResourceCapError, ValidationError


def depolarizing(dim):
    return channels.QuantumChannel(
        [
            np.outer(np.eye(dim)[j], np.eye(dim)[k]) / np.sqrt(dim)
            for j in range(dim)
            for k in range(dim)
        ]
    )


def assert_density_matrix(rho, dim):
    assert rho.shape == (dim, dim)
    w, _ = matcore.herm_eig(rho)
    assert w[-1] >= -1e-8
    assert np.sum(w) == pytest.approx(1, abs=1e-9)


class TestQuantumChannel:
    def test_identity(self, rng):
        rho = matcore.random_density_matrix(3, rng)
        np.testing.assert_allclose(channels.QuantumChannel.identity(3).apply(rho), rho)

    def test_depolarizing(self, rng):
        rho = matcore.random_density_matrix(3, rng)
        np.testing.assert_allclose(depolarizing(3).apply(rho), np.eye(3) / 3, atol=1e-12)

    def test_random_channel_preserves_states(self, rng):
        channel = channels.random_channel(3, rng)
        assert channel.in_dim == channel.out_dim == 3
        assert len(channel.kraus) == 9
        for _ in range(5):
            assert_density_matrix(channel.apply(matcore.random_density_matrix(3, rng)), 3)

    def test_not_trace_preserving(self):
        with pytest.raises(ValidationError, match=r".*not trace preserving.*"):
            channels.QuantumChannel([np.eye(2) * 0.9])

    def test_invalid_kraus(self):
        with pytest.raises(ValidationError):
            channels.QuantumChannel([])
        with pytest.raises(ValidationError, match=r".*different shapes.*"):
            channels.QuantumChannel([np.eye(2), np.eye(3)])

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError, match=r".*expected.*"):
            channels.QuantumChannel.identity(2).apply(np.eye(3) / 3)

    def test_choi_round_trip(self, rng):
        channel = channels.random_channel(2, rng)
        choi = channel.choi()
        assert np.trace(choi).real == pytest.approx(2)
        restored = channels.QuantumChannel.from_choi(choi, 2, 2)
        rho = matcore.random_density_matrix(2, rng)
        np.testing.assert_allclose(restored.apply(rho), channel.apply(rho), atol=1e-10)

    def test_transpose_is_not_completely_positive(self):
        with pytest.raises(ValidationError, match=r".*not completely positive.*"):
            channels.QuantumChannel.from_map(lambda x: x.T, 2, 2)

    def test_from_map(self, rng):
        rho = matcore.random_density_matrix(2, rng)
        replace = channels.QuantumChannel.from_map(lambda x: np.trace(x) * rho, 2, 2)
        np.testing.assert_allclose(replace.apply(np.diag([1, 0])), rho, atol=1e-10)

    def test_from_dilation(self):
        cnot = np.eye(4)[[0, 1, 3, 2]]
        dephasing = channels.QuantumChannel.from_dilation(cnot, 2, 2)
        np.testing.assert_allclose(dephasing.apply(np.full((2, 2), 0.5)), np.eye(2) / 2)
        with pytest.raises(ValidationError, match=r".*not unitary.*"):
            channels.QuantumChannel.from_dilation(2 * np.eye(4), 2, 2)


class TestTensorPower:
    def test_single_site(self, rng):
        channel = channels.random_channel(2, rng)
        assert channels.tensor_power(channel, 1) is channel

    def test_identity(self, rng):
        power = channels.tensor_power(channels.QuantumChannel.identity(2), 2)
        rho = matcore.random_density_matrix(4, rng)
        np.testing.assert_allclose(power.apply(rho), rho, atol=1e-12)

    def test_factorizes(self, rng):
        channel = channels.random_channel(2, rng)
        a, b = testing_utils.random_pair(2, rng)
        np.testing.assert_allclose(
            channels.tensor_power(channel, 2).apply(np.kron(a, b)),
            np.kron(channel.apply(a), channel.apply(b)),
            atol=1e-12,
        )

    def test_matches_kraus(self, rng):
        channel = channels.random_channel(2, rng, env_dim=2)
        power = channels.tensor_power(channel, 3)
        rho = matcore.random_density_matrix(8, rng)
        direct = channels.QuantumChannel(power.kraus, atol=1e-9)
        np.testing.assert_allclose(power.apply(rho), direct.apply(rho), atol=1e-12)

    def test_unequal_dimensions(self, rng):
        channel = channels.QuantumChannel([np.eye(3, 2)])
        power = channels.tensor_power(channel, 2)
        a, b = testing_utils.random_pair(2, rng)
        np.testing.assert_allclose(
            power.apply(np.kron(a, b)),
            np.kron(channel.apply(a), channel.apply(b)),
            atol=1e-12,
        )

    def test_cap(self):
        with pytest.raises(ResourceCapError):
            channels.tensor_power(channels.QuantumChannel.identity(2), 13)


def test_compose(rng):
    first, second = channels.random_channel(2, rng), channels.random_channel(2, rng)
    composed = channels.compose(first, second)
    rho = matcore.random_density_matrix(2, rng)
    np.testing.assert_allclose(composed.apply(rho), second.apply(first.apply(rho)), atol=1e-12)
    direct = channels.QuantumChannel(composed.kraus)
    np.testing.assert_allclose(direct.apply(rho), composed.apply(rho), atol=1e-12)
    with pytest.raises(ValidationError):
        channels.compose(first, channels.QuantumChannel.identity(3))


def test_typical_projection(rng):
    v = np.eye(3)[:, [1]]
    projection = channels.TypicalProjectionChannel(v)
    assert projection.out_dim == 1
    np.testing.assert_allclose(projection.apply(np.eye(3) / 3), [[1]])
    isometry = matcore.haar_isometry(4, 2, rng)
    projection = channels.TypicalProjectionChannel(isometry)
    rho = matcore.random_density_matrix(4, rng)
    direct = channels.QuantumChannel(projection.kraus)
    np.testing.assert_allclose(direct.apply(rho), projection.apply(rho), atol=1e-12)
    assert_density_matrix(projection.apply(rho), 2)


class TestInterchange:
    def check_round_trip(self, ensemble):
        decomposition = kidecomp.ki_decompose(ensemble)
        reduced = kidecomp.strip(decomposition, ensemble)
        to_reduced = channels.strip_channel(decomposition)
        to_original = channels.dress_channel(decomposition)
        for rho, sigma in zip(ensemble.states, reduced.states):
            np.testing.assert_allclose(to_reduced.apply(rho), sigma, atol=1e-8)
            np.testing.assert_allclose(to_original.apply(sigma), rho, atol=1e-8)
            np.testing.assert_allclose(
                to_original.apply(to_reduced.apply(rho)), rho, atol=1e-8
            )

    def test_named(self, named_ensemble):
        self.check_round_trip(named_ensemble)

    @pytest.mark.parametrize("seed", range(5))
    def test_planted(self, seed):
        ensemble, _ = kidecomp.gen_planted([(2, 2), (1, 3), (1, 1)], 3, seed, ambient_dim=14)
        self.check_round_trip(ensemble)

    def test_product(self, rng):
        omega = matcore.random_density_matrix(3, rng)
        taus = [matcore.random_density_matrix(2, rng) for _ in range(3)]
        ensemble = ensembles.Ensemble.from_signals(
            [0.2, 0.3, 0.5], [np.kron(tau, omega) for tau in taus]
        )
        decomposition = kidecomp.ki_decompose(ensemble)
        assert decomposition.block_dims == [(2, 3)]
        stripped = [channels.strip_channel(decomposition).apply(rho) for rho in ensemble.states]
        # The J factor is recovered up to a fixed unitary.
        for i in range(3):
            for j in range(i):
                assert ensembles.fidelity(stripped[i], stripped[j]) == pytest.approx(
                    ensembles.fidelity(taus[i], taus[j]), abs=1e-8
                )
            assert ensembles.von_neumann_entropy(stripped[i]) == pytest.approx(
                ensembles.von_neumann_entropy(taus[i]), abs=1e-8
            )

    def test_single_state(self, single_state):
        dress = channels.dress_channel(kidecomp.ki_decompose(single_state))
        np.testing.assert_allclose(dress.apply(np.ones((1, 1))), single_state.states[0], atol=1e-10)

    def test_outside_support(self):
        zero = np.diag([1, 0, 0])
        plus = np.zeros((3, 3))
        plus[:2, :2] = 0.5
        ensemble = ensembles.Ensemble.from_signals([0.5, 0.5], [zero, plus])
        decomposition = kidecomp.ki_decompose(ensemble)
        stripped = channels.strip_channel(decomposition)
        assert_density_matrix(stripped.apply(np.diag([0, 0, 1])), 2)


class TestPreservingChannel:
    def test_preserves_signals(self, classical_pair, qubit_pair):
        for ensemble in (classical_pair, qubit_pair):
            decomposition = kidecomp.ki_decompose(ensemble)
            channel = channels.preserving_channel(decomposition, seed=3)
            assert len(channel.kraus) == 4
            for rho in ensemble.states:
                np.testing.assert_allclose(channel.apply(rho), rho, atol=1e-9)

    def test_single_block_is_identity(self, qubit_pair, rng):
        channel = channels.preserving_channel(kidecomp.ki_decompose(qubit_pair), seed=1)
        x = matcore.random_density_matrix(2, rng)
        np.testing.assert_allclose(channel.apply(x), x, atol=1e-12)

    def test_dephases_between_blocks(self, classical_pair):
        channel = channels.preserving_channel(kidecomp.ki_decompose(classical_pair), seed=2)
        output = channel.apply(np.full((2, 2), 0.5))
        np.testing.assert_allclose(np.diag(output), [0.5, 0.5], atol=1e-12)
        assert abs(output[0, 1]) < 0.5

    def test_requires_redundancy_free(self, redundant_ensemble):
        with pytest.raises(ValidationError, match=r".*dK = 1.*"):
            channels.preserving_channel(kidecomp.ki_decompose(redundant_ensemble))

    def test_f_and_g_vanish(self):
        rng = np.random.default_rng(0)
        for seed in range(100):
            ensemble = testing_utils.random_ensemble(3, 3, rng, rank=int(rng.integers(1, 3)))
            decomposition = kidecomp.ki_decompose(ensemble)
            reduced = kidecomp.strip(decomposition, ensemble)
            decomposition = kidecomp.ki_decompose(reduced)
            channel = channels.preserving_channel(decomposition, seed=seed)
            orthogonal = kidecomp.orthogonal_ensemble(decomposition, reduced)
            assert channels.f_measure(channel, reduced) <= 1e-9
            assert channels.error_prob(channel, orthogonal) <= 1e-9


class TestMeasures:
    def test_f_measure(self, classical_pair, qubit_pair):
        identity = channels.QuantumChannel.identity(2)
        assert channels.f_measure(identity, qubit_pair) == pytest.approx(0, abs=1e-12)
        assert channels.f_measure(depolarizing(2), classical_pair) == pytest.approx(0.5)
        with pytest.raises(ValidationError):
            channels.f_measure(channels.QuantumChannel.identity(3), qubit_pair)

    def test_error_prob(self, classical_pair):
        decomposition = kidecomp.ki_decompose(classical_pair)
        orthogonal = kidecomp.orthogonal_ensemble(decomposition, classical_pair)
        identity = channels.QuantumChannel.identity(2)
        assert channels.error_prob(identity, orthogonal) == pytest.approx(0, abs=1e-12)
        assert channels.error_prob(depolarizing(2), orthogonal) == pytest.approx(0.5)

    def test_fidelity_monotone(self, rng):
        for _ in range(10):
            channel = channels.random_channel(3, rng)
            rho, sigma = testing_utils.random_pair(3, rng)
            after = ensembles.fidelity(channel.apply(rho), channel.apply(sigma))
            assert after >= ensembles.fidelity(rho, sigma) - 1e-8


class TestInducedSiteChannel:
    def test_identity(self, qubit_pair, rng):
        site = channels.induced_site_channel(channels.QuantumChannel.identity(8), qubit_pair, 1, 3)
        x = matcore.random_density_matrix(2, rng)
        np.testing.assert_allclose(site.apply(x), x, atol=1e-10)

    def test_replacement(self, qubit_pair, rng):
        rho = ensembles.total_state(qubit_pair)
        block = matcore.kron_all([rho] * 2)
        replace = channels.QuantumChannel.from_map(lambda x: np.trace(x) * block, 4, 4)
        site = channels.induced_site_channel(replace, qubit_pair, 0, 2)
        x = matcore.random_density_matrix(2, rng)
        np.testing.assert_allclose(site.apply(x), rho, atol=1e-10)

    def test_product_channel(self, qubit_pair, rng):
        channel = channels.random_channel(2, rng)
        site = channels.induced_site_channel(channels.tensor_power(channel, 2), qubit_pair, 1, 2)
        x = matcore.random_density_matrix(2, rng)
        np.testing.assert_allclose(site.apply(x), channel.apply(x), atol=1e-10)

    def test_invalid(self, qubit_pair):
        with pytest.raises(ValidationError):
            channels.induced_site_channel(channels.QuantumChannel.identity(4), qubit_pair, 2, 2)
        with pytest.raises(ValidationError):
            channels.induced_site_channel(channels.QuantumChannel.identity(8), qubit_pair, 0, 2)


def test_sample_eta(qubit_pair):
    check = channels.sample_eta(qubit_pair, 0.1, 500, seed=0)
    assert check.samples == 500
    assert check.accepted > 0
    assert check.positive
    assert check.min_f > 0
