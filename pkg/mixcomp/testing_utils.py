import json

import numpy as np

from mixcomp import ensembles, matcore

PLANTED_AMBIENT_LIMIT = 24
PLANTED_SIGNAL_LIMIT = 4


def ket(*amplitudes):
    v = np.array(amplitudes, dtype=np.complex128)
    return v / np.linalg.norm(v)


def projector(v):
    return np.outer(v, v.conj())


def random_ensemble(dim, n_signals, rng, rank=None):
    """Ensemble of Ginibre-random states with Dirichlet-random probabilities."""
    probs = rng.dirichlet(np.ones(n_signals))
    states = [matcore.random_density_matrix(dim, rng, rank) for _ in range(n_signals)]
    return ensembles.Ensemble.from_signals(probs, states)


def random_pure_ensemble(dim, n_signals, rng):
    return random_ensemble(dim, n_signals, rng, rank=1)


def random_block_spec(rng, ambient_limit=PLANTED_AMBIENT_LIMIT, signal_limit=PLANTED_SIGNAL_LIMIT):
    """Draws `(blocks, n_signals, ambient_dim)` that `gen_planted` can realize."""
    n_signals = int(rng.integers(1, signal_limit + 1))
    if n_signals == 1:
        blocks = [(1, int(rng.integers(1, 4)))]
    else:
        blocks = []
        for _ in range(int(rng.integers(1, 4))):
            block = (int(rng.integers(1, 4)), int(rng.integers(1, 4)))
            if sum(dJ * dK for dJ, dK in blocks) + block[0] * block[1] <= ambient_limit:
                blocks.append(block)
    support = sum(dJ * dK for dJ, dK in blocks)
    ambient = support + int(rng.integers(0, ambient_limit - support + 1))
    return blocks, n_signals, ambient


def random_pair(dim, rng):
    return matcore.random_density_matrix(dim, rng), matcore.random_density_matrix(dim, rng)


def write_ensemble(path, ensemble):
    path.write_text(json.dumps(ensemble.get_config()), encoding="utf-8")
    return str(path)
