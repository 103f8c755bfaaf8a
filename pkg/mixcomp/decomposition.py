"""The redundancy decomposition of an ensemble.

The support of \\(\\sum_i \\rho_i\\) splits as \\(\\bigoplus_l H_J^{(l)} \\otimes
H_K^{(l)}\\) such that every signal reads

\\[
\\rho_i = \\bigoplus_l q^{(i,l)} \\rho_J^{(i,l)} \\otimes \\rho_K^{(l)},
\\]

with \\(\\rho_K^{(l)}\\) independent of the signal and each family
\\(\\{\\rho_J^{(i,l)}\\}_i\\) irreducible. The K factors carry no information about the
signal; dropping them gives the reduced ensemble \\(\\{p_i, \\sigma_i\\}\\) whose von
Neumann entropy is the optimal blind compression rate `i_R`.

The decomposition is computed in two passes:

1. **split**: a block whose restricted states have a non-trivial commutant is cut into
   the eigenspaces of a generic Hermitian element of that commutant, until every block
   is irreducible;
2. **merge**: irreducible blocks that carry unitarily equivalent families with a
   signal-independent weight ratio are fused into one \\(J \\otimes K\\) block.

The result is checked against the input before it is returned.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg

from mixcomp import ensembles, matcore, tolerance
from mixcomp.utils import ConsistencyError, ValidationError

__all__ = [
    "KIBlock",
    "KIDecomposition",
    "support_isometry",
    "ki_decompose",
    "reconstruct",
    "strip",
    "i_R",
    "find_intertwiner",
    "gen_planted",
    "orthogonal_ensemble",
]

log = logging.getLogger(__name__)

RECONSTRUCTION_ATOL = 1e-8
INTERTWINER_ATOL = 1e-8
RATIO_SPREAD = 1e-8
SPECTRUM_ATOL = 1e-8
ZERO_WEIGHT = 1e-12
# Relative eigenvalue gap separating the eigenspaces of a generic commutant element.
CLUSTER_GAP = 1e-6
SPLIT_ATTEMPTS = 3
MAX_PLANTED_DIM = 64
PLANTING_ATTEMPTS = 100


@dataclass
class KIBlock:
    """One \\(H_J \\otimes H_K\\) summand of the decomposition.

    # Arguments
    dJ: Dimension of the informative factor.
    dK: Dimension of the redundant factor.
    iso: Isometry of shape `(ambient_dim, dJ * dK)` embedding \\(H_J \\otimes H_K\\)
        (row-major, K index fastest).
    rhoK: Shared K state, diagonal with descending entries.
    weights: Per-signal probabilities \\(q^{(i,l)}\\) of the block.
    jstates: Per-signal normalized J states of shape `(n_signals, dJ, dJ)`; zero where
        the weight vanishes.
    """

    dJ: int
    dK: int
    iso: np.ndarray
    rhoK: np.ndarray
    weights: np.ndarray
    jstates: np.ndarray

    @property
    def k_spectrum(self):
        return np.diag(self.rhoK).real.copy()

    @property
    def supported_signals(self):
        return [i for i, q in enumerate(self.weights) if q > ZERO_WEIGHT]

    def embed(self, i):
        """This block's contribution to signal `i` in the ambient space."""
        local = np.kron(self.weights[i] * self.jstates[i], self.rhoK)
        return self.iso @ local @ matcore.dagger(self.iso)

    def get_config(self):
        return {
            "dJ": int(self.dJ),
            "dK": int(self.dK),
            "rhoK": [float(x) for x in self.k_spectrum],
            "weights": [float(q) for q in self.weights],
        }


@dataclass
class KIDecomposition:
    """Block list realizing the redundancy decomposition of an ensemble.

    # Arguments
    ambient_dim: Dimension of the space the signals act on.
    support_dim: Dimension of the support of the average state.
    blocks: The `KIBlock`s, sorted by size and then by a spectral fingerprint.
    """

    ambient_dim: int
    support_dim: int
    blocks: List[KIBlock]

    @property
    def n_signals(self):
        return self.blocks[0].weights.size if self.blocks else 0

    @property
    def block_dims(self):
        return [(b.dJ, b.dK) for b in self.blocks]

    @property
    def reduced_dim(self):
        return sum(b.dJ for b in self.blocks)

    @property
    def offsets(self):
        """Start index of each block's J factor in the reduced space."""
        return np.cumsum([0] + [b.dJ for b in self.blocks])[:-1].tolist()

    @property
    def q(self):
        """Matrix of block weights, one row per signal."""
        return np.array([b.weights for b in self.blocks]).T

    @property
    def is_redundancy_free(self):
        return all(b.dK == 1 for b in self.blocks)

    def get_config(self):
        return {
            "ambient_dim": int(self.ambient_dim),
            "support_dim": int(self.support_dim),
            "blocks": [b.get_config() for b in self.blocks],
        }


def support_isometry(ensemble, tol=None):
    """Isometry onto the support of the average state.

    # Arguments
    ensemble: An `Ensemble`.
    tol: Eigenvalues above `tol` times the largest one span the support.

    # Returns
    A `(dim, support_dim)` matrix with orthonormal columns.
    """
    tol = tolerance.get_tolerance(tol)
    w, v = matcore.herm_eig(ensemble_total(ensemble))
    return v[:, w > tol * w[0]]


def ensemble_total(ensemble):
    return ensembles.total_state(ensemble)


def _restrict(states, iso):
    iso_h = matcore.dagger(iso)
    return [iso_h @ s @ iso for s in states]


def _generic_element(commutant, seed):
    rng = np.random.default_rng(seed)
    coefficients = rng.standard_normal(commutant.size) + 1j * rng.standard_normal(
        commutant.size
    )
    x = (coefficients @ commutant.vectors).reshape(commutant.dim, commutant.dim)
    h = (x + matcore.dagger(x)) / 2
    return h / matcore.frobenius(h)


def _clusters(eigenvalues):
    groups = [[0]]
    for j in range(1, eigenvalues.size):
        if eigenvalues[j - 1] - eigenvalues[j] > CLUSTER_GAP:
            groups.append([])
        groups[-1].append(j)
    return groups


def _split(states, tol):
    """Cuts the support into invariant subspaces with irreducible restrictions."""
    dim = states[0].shape[0]
    pending = [(np.eye(dim, dtype=np.complex128), 0)]
    irreducible = []
    while pending:
        iso, depth = pending.pop()
        size = iso.shape[1]
        parts = _restrict(states, iso)
        if size == 1:
            irreducible.append(iso)
            continue
        commutant = matcore.commutant_basis(parts, size, tol)
        if commutant.size == 1:
            irreducible.append(iso)
            continue

        for attempt in range(SPLIT_ATTEMPTS):
            w, v = matcore.herm_eig(_generic_element(commutant, [size, depth, attempt]))
            groups = _clusters(w)
            if len(groups) > 1:
                break
        else:
            raise ConsistencyError(
                f"Could not split a {size}-dimensional block with a "
                f"{commutant.size}-dimensional commutant."
            )
        log.debug(
            f"Splitting block of dimension {size} (commutant dimension "
            f"{commutant.size}) into {[len(g) for g in groups]}."
        )
        for group in reversed(groups):
            pending.append((iso @ v[:, group], depth + 1))
    return irreducible


@dataclass
class _Member:
    index: int
    ratio: float
    intertwiner: np.ndarray


def find_intertwiner(a, b, c, tol=None, atol=INTERTWINER_ATOL):
    """Searches a unitary `W` with `b[i] = c * W @ a[i] @ W^dagger` for all `i`.

    The intertwiner space \\(\\{X : X a_i = c^{-1} b_i X\\}\\) is computed as a nullspace.
    When it is one-dimensional its polar unitary, with the phase fixed so that the first
    non-zero entry is positive real, is returned if it reproduces `b` within `atol`.

    # Arguments
    a: List of square matrices (an irreducible family).
    b: List of matrices of the same length and dimension.
    c: Positive scale factor.
    tol: Relative singular-value threshold of the nullspace.
    atol: Frobenius residual accepted per family member.

    # Returns
    The unitary `W`, or `None` if the families are not equivalent.
    """
    a = [matcore.as_matrix(x) for x in a]
    b = [matcore.as_matrix(x) for x in b]
    if len(a) != len(b) or not a:
        raise ValidationError(f"Families of lengths {len(a)} and {len(b)} differ.")
    dim = a[0].shape[0]
    if any(x.shape != (dim, dim) for x in a + b):
        raise ValidationError("All family members must share one square dimension.")
    if c <= 0:
        raise ValidationError(f"Scale factor must be positive, got {c}.")

    eye = np.eye(dim, dtype=np.complex128)
    equations = np.vstack([np.kron(eye, x.T) - np.kron(y, eye) / c for x, y in zip(a, b)])
    null = matcore.nullspace(equations, tol)
    if null.shape[1] != 1:
        return None
    w, _ = scipy.linalg.polar(null[:, 0].reshape(dim, dim))
    w = matcore.phase_fix(w)
    residual = max(
        matcore.frobenius(y - c * w @ x @ matcore.dagger(w)) for x, y in zip(a, b)
    )
    return w if residual <= atol else None


def _equivalence(family_a, traces_a, family_b, traces_b, tol):
    if family_a[0].shape != family_b[0].shape:
        return None
    zero_a = traces_a <= ZERO_WEIGHT
    if np.any(zero_a != (traces_b <= ZERO_WEIGHT)):
        return None
    ratios = traces_b[~zero_a] / traces_a[~zero_a]
    c = float(np.mean(ratios))
    if (np.max(ratios) - np.min(ratios)) > RATIO_SPREAD * c:
        return None
    for x, y in zip(family_a, family_b):
        spectrum_a = c * np.linalg.eigvalsh(x)
        spectrum_b = np.linalg.eigvalsh(y)
        if np.max(np.abs(spectrum_a - spectrum_b)) > SPECTRUM_ATOL:
            return None
    w = find_intertwiner(family_a, family_b, c, tol)
    return None if w is None else (c, w)


def _merge(states, isometries, tol):
    families = [_restrict(states, iso) for iso in isometries]
    traces = [np.array([np.trace(x).real for x in f]) for f in families]
    classes = []
    for index in range(len(isometries)):
        for members in classes:
            ref = members[0].index
            match = _equivalence(families[ref], traces[ref], families[index], traces[index], tol)
            if match is not None:
                members.append(_Member(index, *match))
                break
        else:
            dim = isometries[index].shape[1]
            classes.append([_Member(index, 1.0, np.eye(dim, dtype=np.complex128))])
    for members in classes:
        if len(members) > 1:
            log.debug(
                f"Merging {len(members)} equivalent blocks of dimension "
                f"{isometries[members[0].index].shape[1]}."
            )
    return classes


def _make_block(support, states, isometries, members):
    reference = isometries[members[0].index]
    dJ, dK = reference.shape[1], len(members)
    ordered = sorted(members, key=lambda m: -m.ratio)
    ratios = np.array([m.ratio for m in ordered])
    total = float(np.sum(ratios))

    columns = np.zeros((support.shape[1], dJ * dK), dtype=np.complex128)
    for k, member in enumerate(ordered):
        columns[:, k::dK] = isometries[member.index] @ member.intertwiner

    weights, jstates = [], []
    for part in _restrict(states, reference):
        trace = np.trace(part).real
        if trace > ZERO_WEIGHT:
            weights.append(total * trace)
            jstates.append(part / trace)
        else:
            weights.append(0.0)
            jstates.append(np.zeros((dJ, dJ), dtype=np.complex128))
    return KIBlock(
        dJ=dJ,
        dK=dK,
        iso=support @ columns,
        rhoK=np.diag(ratios / total).astype(np.complex128),
        weights=np.array(weights),
        jstates=np.array(jstates),
    )


def _sort_key(block):
    return (
        -block.dJ * block.dK,
        -block.dJ,
        tuple(-np.round(block.weights, 9)),
        tuple(-np.round(block.k_spectrum, 9)),
    )


def reconstruct(decomposition, i):
    """Signal `i` rebuilt from the decomposition, in the ambient space.

    # Raises
    ValidationError: if `i` is out of range.
    """
    if not 0 <= i < decomposition.n_signals:
        raise ValidationError(
            f"Signal index {i} out of range for {decomposition.n_signals} signals."
        )
    rho = np.zeros((decomposition.ambient_dim,) * 2, dtype=np.complex128)
    for block in decomposition.blocks:
        rho += block.embed(i)
    return rho


def reconstruction_residual(decomposition, ensemble):
    return max(
        matcore.frobenius(reconstruct(decomposition, i) - rho)
        for i, rho in enumerate(ensemble.states)
    )


def ki_decompose(ensemble, tol=None):
    """Computes the redundancy decomposition of an ensemble.

    # Arguments
    ensemble: An `Ensemble`.
    tol: Structural tolerance; defaults to the active `mixcomp.tolerance`.

    # Returns
    A `KIDecomposition` that reproduces every signal within `1e-8`.

    # Raises
    ConsistencyError: if the computed blocks do not reproduce the signals.
    """
    tol = tolerance.get_tolerance(tol)
    support = support_isometry(ensemble, tol)
    states = _restrict(ensemble.states, support)
    isometries = _split(states, tol)
    classes = _merge(states, isometries, tol)
    blocks = [_make_block(support, states, isometries, members) for members in classes]
    decomposition = KIDecomposition(
        ensemble.dim, support.shape[1], sorted(blocks, key=_sort_key)
    )

    residual = reconstruction_residual(decomposition, ensemble)
    if residual > RECONSTRUCTION_ATOL:
        raise ConsistencyError(
            f"Decomposition does not reproduce the signals: residual {residual:.3g} "
            f"exceeds {RECONSTRUCTION_ATOL:g} (blocks {decomposition.block_dims})."
        )
    log.debug(f"Decomposed ensemble into blocks {decomposition.block_dims}.")
    return decomposition


def reduced_states(decomposition):
    """The states \\(\\sigma_i = \\bigoplus_l q^{(i,l)}\\rho_J^{(i,l)}\\)."""
    return [
        scipy.linalg.block_diag(*[b.weights[i] * b.jstates[i] for b in decomposition.blocks])
        for i in range(decomposition.n_signals)
    ]


def strip(decomposition, ensemble):
    """The reduced ensemble \\(\\{p_i, \\sigma_i\\}\\) with the K factors removed.

    # Arguments
    decomposition: The `KIDecomposition` of `ensemble`.
    ensemble: The original `Ensemble`.

    # Returns
    An `Ensemble` on dimension \\(\\sum_l d_J^{(l)}\\) with unchanged probabilities.
    """
    if decomposition.n_signals != ensemble.n_signals:
        raise ValidationError(
            f"Decomposition has {decomposition.n_signals} signals, "
            f"ensemble has {ensemble.n_signals}."
        )
    return ensembles.Ensemble.from_signals(ensemble.probs, reduced_states(decomposition))


def i_R(ensemble, tol=None):
    """Optimal blind compression rate \\(I_R = S(\\sigma)\\) in bits."""
    reduced = strip(ki_decompose(ensemble, tol), ensemble)
    return ensembles.von_neumann_entropy(ensembles.total_state(reduced))


def orthogonal_ensemble(decomposition, ensemble):
    """The ensemble of orthogonal pure states diagonalizing the average state blockwise.

    Meant for redundancy-free ensembles; for each block `l` the eigenvectors
    \\(|l,s\\rangle\\) of the average state form a basis of \\(H_J^{(l)}\\).
    """
    if not decomposition.is_redundancy_free:
        log.warning(
            f"Building the orthogonal ensemble of an ensemble with redundant blocks "
            f"{decomposition.block_dims}; strip it first."
        )
    return ensembles.EigenEnsemble.from_blocks(
        ensembles.total_state(ensemble), [b.iso for b in decomposition.blocks]
    )


def _irreducible_family(dim, n_signals, rng):
    if dim == 1:
        return np.ones((n_signals, 1, 1), dtype=np.complex128)
    for _ in range(PLANTING_ATTEMPTS):
        family = [matcore.random_density_matrix(dim, rng) for _ in range(n_signals)]
        if matcore.commutant_basis(family, dim).size == 1:
            return np.array(family)
    raise ValidationError(
        f"No irreducible family of dimension {dim} found in {PLANTING_ATTEMPTS} draws."
    )


def gen_planted(block_dims, n_signals, seed, ambient_dim=None):
    """Draws an ensemble with a known redundancy decomposition.

    # Arguments
    block_dims: List of `(dJ, dK)` pairs.
    n_signals: Number of signals, at least 1.
    seed: Seed of the `numpy` random generator; equal seeds give equal output.
    ambient_dim: Dimension of the emitted states, at least the summed block size;
        defaults to it.

    # Returns
    A tuple `(ensemble, decomposition)` where `decomposition` is the planted oracle.

    # Raises
    ValidationError: if the block list is empty, too large, or cannot be realized with
        the number of signals.
    """
    block_dims = [(int(dJ), int(dK)) for dJ, dK in block_dims]
    if not block_dims or any(dJ < 1 or dK < 1 for dJ, dK in block_dims):
        raise ValidationError(f"Invalid block dimensions: {block_dims}.")
    support = sum(dJ * dK for dJ, dK in block_dims)
    ambient = support if ambient_dim is None else int(ambient_dim)
    if ambient < support:
        raise ValidationError(f"Ambient dimension {ambient} is below the support {support}.")
    if ambient > MAX_PLANTED_DIM:
        raise ValidationError(
            f"Dimension {ambient} exceeds the planting limit of {MAX_PLANTED_DIM}."
        )
    if n_signals < 1:
        raise ValidationError(f"Need at least one signal, got {n_signals}.")
    if n_signals == 1 and (len(block_dims) > 1 or block_dims[0][0] > 1):
        raise ValidationError(
            "A single signal only admits one block with a one-dimensional J factor."
        )

    rng = np.random.default_rng(seed)
    probs = rng.dirichlet(np.ones(n_signals))
    q = rng.dirichlet(np.ones(len(block_dims)), size=n_signals)
    isometry = matcore.haar_isometry(ambient, support, rng)

    blocks, offset = [], 0
    for l, (dJ, dK) in enumerate(block_dims):
        spectrum = np.sort(rng.uniform(0.1, 1.0, dK))[::-1]
        blocks.append(
            KIBlock(
                dJ=dJ,
                dK=dK,
                iso=isometry[:, offset : offset + dJ * dK],
                rhoK=np.diag(spectrum / np.sum(spectrum)).astype(np.complex128),
                weights=q[:, l].copy(),
                jstates=_irreducible_family(dJ, n_signals, rng),
            )
        )
        offset += dJ * dK
    oracle = KIDecomposition(ambient, support, sorted(blocks, key=_sort_key))
    states = [reconstruct(oracle, i) for i in range(n_signals)]
    return ensembles.Ensemble.from_signals(probs, states), oracle
