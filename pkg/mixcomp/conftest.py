import numpy as np
import pytest

from mixcomp import ensembles, testing_utils


@pytest.fixture
def classical_pair():
    """Orthogonal pair {|0>, |1>} with equal probabilities."""
    return ensembles.Ensemble.from_signals([0.5, 0.5], [np.diag([1, 0]), np.diag([0, 1])])


@pytest.fixture
def qubit_pair():
    """Non-orthogonal pure pair {|0>, |+>} with equal probabilities."""
    zero = testing_utils.projector(testing_utils.ket(1, 0))
    plus = testing_utils.projector(testing_utils.ket(1, 1))
    return ensembles.Ensemble.from_signals([0.5, 0.5], [zero, plus])


@pytest.fixture
def redundant_ensemble(qubit_pair):
    """The qubit pair tensored with the shared state diag(0.7, 0.3)."""
    omega = np.diag([0.7, 0.3])
    return ensembles.Ensemble.from_signals(
        qubit_pair.probs, [np.kron(tau, omega) for tau in qubit_pair.states]
    )


@pytest.fixture
def single_state():
    return ensembles.Ensemble.from_signals([1.0], [np.eye(2) / 2])


@pytest.fixture(params=["classical_pair", "qubit_pair", "redundant_ensemble", "single_state"])
def named_ensemble(request):
    """pytest fixture running a test on every hand-written ensemble"""
    return request.getfixturevalue(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ensemble_file(tmp_path):
    """pytest fixture writing an ensemble to a temporary file and returning its path"""

    def write(ensemble, name="ensemble.json"):
        return testing_utils.write_ensemble(tmp_path / name, ensemble)

    return write
