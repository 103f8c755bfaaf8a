"""Quantum channels in operator-sum form.

A `QuantumChannel` stores Kraus operators \\(K_m\\) of shape `(out_dim, in_dim)` with
\\(\\sum_m K_m^\\dagger K_m = 1\\) and acts as \\(X \\mapsto \\sum_m K_m X K_m^\\dagger\\).
Channels that would be expensive to materialize (tensor powers, compositions, typical
subspace projections) keep their structure and only build Kraus operators on demand.

The interchange channels of a redundancy decomposition map the original ensemble to
its reduced form and back:

!!! example
    ```python
    decomposition = ki_decompose(ensemble)
    reduced = strip(decomposition, ensemble)
    to_reduced = channels.strip_channel(decomposition)
    to_original = channels.dress_channel(decomposition)
    to_reduced.apply(ensemble.states[0])  # == reduced.states[0]
    to_original.apply(reduced.states[0])  # == ensemble.states[0]
    ```
"""

import functools
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from mixcomp import decomposition as kidecomp
from mixcomp import ensembles, matcore
from mixcomp.utils import SEQUENCE_CAP, ValidationError, check_cap

__all__ = [
    "QuantumChannel",
    "TensorPowerChannel",
    "ComposedChannel",
    "TypicalProjectionChannel",
    "tensor_power",
    "compose",
    "strip_channel",
    "dress_channel",
    "preserving_channel",
    "random_channel",
    "f_measure",
    "error_prob",
    "induced_site_channel",
    "sample_eta",
]

log = logging.getLogger(__name__)

TRACE_ATOL = 1e-9
CP_ATOL = 1e-8
KRAUS_FLOOR = 1e-14


class QuantumChannel:
    """A completely positive trace-preserving map given by its Kraus operators.

    # Arguments
    kraus: Non-empty list of matrices of a common shape `(out_dim, in_dim)`.
    atol: Accepted deviation of \\(\\sum_m K_m^\\dagger K_m\\) from the identity.

    # Raises
    ValidationError: if the shapes differ or the map is not trace preserving.
    """

    def __init__(self, kraus, atol=TRACE_ATOL):
        kraus = [matcore.as_matrix(k, name="Kraus operator") for k in kraus]
        if not kraus:
            raise ValidationError("A channel needs at least one Kraus operator.")
        shapes = {k.shape for k in kraus}
        if len(shapes) != 1:
            raise ValidationError(f"Kraus operators have different shapes: {shapes}.")
        self.out_dim, self.in_dim = shapes.pop()
        check_cap(self.in_dim)
        check_cap(self.out_dim)
        self._kraus = np.array(kraus)

        gram = np.einsum("mji,mjk->ik", self._kraus.conj(), self._kraus)
        residual = float(np.max(np.abs(gram - np.eye(self.in_dim))))
        if residual > atol:
            raise ValidationError(
                f"Channel is not trace preserving: max|sum K^dagger K - 1| = {residual:.3g}."
            )

    @property
    def kraus(self):
        """Array of shape `(n_kraus, out_dim, in_dim)`."""
        return self._kraus

    def _check_input(self, x):
        x = matcore.as_matrix(x, name="channel input")
        if x.shape != (self.in_dim, self.in_dim):
            raise ValidationError(
                f"Channel input has shape {x.shape}, expected {(self.in_dim,) * 2}."
            )
        return x

    def apply(self, x):
        """Applies the channel to a (not necessarily Hermitian) square matrix."""
        x = self._check_input(x)
        k = self.kraus
        return np.einsum("mij,jl,mkl->ik", k, x, k.conj())

    def __call__(self, x):
        return self.apply(x)

    def choi(self):
        """The Choi matrix \\(\\sum_{a,b} |a\\rangle\\langle b| \\otimes \\Phi(|a\\rangle\\langle b|)\\)."""
        vecs = np.transpose(self.kraus, (0, 2, 1)).reshape(len(self.kraus), -1)
        return vecs.T @ vecs.conj()

    @classmethod
    def from_choi(cls, choi, in_dim, out_dim, atol=CP_ATOL):
        """Recovers Kraus operators from a Choi matrix.

        Eigenvalues down to `-atol` are clamped to zero; trace preservation is checked to
        the same `atol`.

        # Raises
        ValidationError: if the map is not completely positive or not trace preserving.
        """
        choi = matcore.as_matrix(choi, name="Choi matrix")
        if choi.shape != (in_dim * out_dim,) * 2:
            raise ValidationError(
                f"Choi matrix of shape {choi.shape} does not match {in_dim} -> {out_dim}."
            )
        w, v = matcore.herm_eig(choi)
        if w[-1] < -atol * max(1.0, w[0]):
            raise ValidationError(
                f"Map is not completely positive: Choi eigenvalue {w[-1]:.3g}."
            )
        keep = w > KRAUS_FLOOR * max(1.0, w[0])
        kraus = [
            math.sqrt(wm) * v[:, m].reshape(in_dim, out_dim).T
            for m, wm in enumerate(w)
            if keep[m]
        ]
        return cls(kraus, atol=atol)

    @classmethod
    def from_map(cls, fn, in_dim, out_dim, atol=CP_ATOL):
        """Builds a channel from a linear map on `in_dim x in_dim` matrices."""
        choi = np.zeros((in_dim * out_dim,) * 2, dtype=np.complex128)
        for a, b in itertools.product(range(in_dim), repeat=2):
            unit = np.zeros((in_dim, in_dim), dtype=np.complex128)
            unit[a, b] = 1
            image = matcore.as_matrix(fn(unit))
            if image.shape != (out_dim, out_dim):
                raise ValidationError(
                    f"Map output of shape {image.shape} is not {out_dim}x{out_dim}."
                )
            choi[a * out_dim : (a + 1) * out_dim, b * out_dim : (b + 1) * out_dim] = image
        return cls.from_choi(choi, in_dim, out_dim, atol=atol)

    @classmethod
    def from_dilation(cls, unitary, in_dim, env_dim):
        """The channel \\(\\rho \\mapsto \\mathrm{Tr}_E[U(\\rho \\otimes |0\\rangle\\langle 0|)U^\\dagger]\\).

        # Arguments
        unitary: Unitary on the system (most significant) times environment space.
        in_dim: System dimension.
        env_dim: Environment dimension.
        """
        unitary = matcore.as_matrix(unitary, name="dilation")
        size = in_dim * env_dim
        if unitary.shape != (size, size):
            raise ValidationError(
                f"Dilation of shape {unitary.shape} does not act on {in_dim}x{env_dim}."
            )
        residual = float(np.max(np.abs(matcore.dagger(unitary) @ unitary - np.eye(size))))
        if residual > TRACE_ATOL:
            raise ValidationError(f"Dilation is not unitary: residual {residual:.3g}.")
        tensor = unitary.reshape(in_dim, env_dim, in_dim, env_dim)
        return cls([tensor[:, e, :, 0] for e in range(env_dim)])

    @classmethod
    def identity(cls, dim):
        return cls([np.eye(dim, dtype=np.complex128)])


class TensorPowerChannel(QuantumChannel):
    """The channel \\(C^{\\otimes N}\\), applied site by site."""

    def __init__(self, channel, n_sites):
        if n_sites < 1:
            raise ValidationError(f"Number of sites must be positive, got {n_sites}.")
        self.channel = channel
        self.n_sites = n_sites
        self.in_dim = check_cap(channel.in_dim ** n_sites)
        self.out_dim = check_cap(channel.out_dim ** n_sites)

    @functools.cached_property
    def kraus(self):
        check_cap(
            len(self.channel.kraus) ** self.n_sites, SEQUENCE_CAP, "number of Kraus operators"
        )
        return np.array(
            [
                matcore.kron_all(word)
                for word in itertools.product(self.channel.kraus, repeat=self.n_sites)
            ]
        )

    def apply(self, x):
        x = self._check_input(x)
        n, k = self.n_sites, self.channel.kraus
        tensor = x.reshape([self.channel.in_dim] * (2 * n))
        for site in range(n):
            tensor = np.tensordot(k, tensor, axes=([2], [site]))
            tensor = np.moveaxis(tensor, 1, site + 1)
            tensor = np.tensordot(tensor, k.conj(), axes=([0, 1 + n + site], [0, 2]))
            tensor = np.moveaxis(tensor, -1, n + site)
        return tensor.reshape(self.out_dim, self.out_dim)


class ComposedChannel(QuantumChannel):
    """Channels applied one after the other, first to last."""

    def __init__(self, channels):
        channels = list(channels)
        if not channels:
            raise ValidationError("Nothing to compose.")
        for first, second in zip(channels, channels[1:]):
            if first.out_dim != second.in_dim:
                raise ValidationError(
                    f"Cannot feed a {first.out_dim}-dimensional output into a "
                    f"{second.in_dim}-dimensional input."
                )
        self.channels = channels
        self.in_dim = channels[0].in_dim
        self.out_dim = channels[-1].out_dim

    @functools.cached_property
    def kraus(self):
        sizes = [len(c.kraus) for c in self.channels]
        check_cap(int(np.prod(sizes)), SEQUENCE_CAP, "number of Kraus operators")
        products = [np.eye(self.in_dim, dtype=np.complex128)]
        for channel in self.channels:
            products = [k @ p for p in products for k in channel.kraus]
        return np.array(products)

    def apply(self, x):
        for channel in self.channels:
            x = channel.apply(x)
        return x


class TypicalProjectionChannel(QuantumChannel):
    """Projection onto the span of the orthonormal columns of `isometry`.

    Maps \\(X \\mapsto V^\\dagger X V + (\\mathrm{Tr}X - \\mathrm{Tr}V^\\dagger X V)
    |0\\rangle\\langle 0|\\): the weight outside the subspace is sent to the first code
    state.
    """

    def __init__(self, isometry):
        self.isometry = matcore.as_matrix(isometry, name="isometry")
        self.in_dim, self.out_dim = self.isometry.shape
        check_cap(self.in_dim)

    @functools.cached_property
    def kraus(self):
        complement = scipy.linalg.null_space(matcore.dagger(self.isometry))
        failures = np.zeros((complement.shape[1], self.out_dim, self.in_dim), dtype=np.complex128)
        failures[:, 0, :] = complement.T.conj()
        return np.concatenate([matcore.dagger(self.isometry)[None], failures])

    def apply(self, x):
        x = self._check_input(x)
        v = self.isometry
        kept = matcore.dagger(v) @ x @ v
        kept[0, 0] += np.trace(x) - np.trace(kept)
        return kept


def tensor_power(channel, n_sites):
    """The `n_sites`-fold tensor power of `channel`.

    # Raises
    ResourceCapError: if the composite dimension exceeds 4096.
    """
    return channel if n_sites == 1 else TensorPowerChannel(channel, n_sites)


def compose(*channels):
    """Composition applying `channels[0]` first."""
    return channels[0] if len(channels) == 1 else ComposedChannel(channels)


def _support_complement(decomposition):
    isos = np.hstack([b.iso for b in decomposition.blocks])
    return scipy.linalg.null_space(matcore.dagger(isos))


def strip_channel(decomposition):
    """The channel mapping every \\(\\rho_i\\) to its reduced state \\(\\sigma_i\\).

    Each block is rotated into \\(H_J \\otimes H_K\\), the K factor is traced out and the J
    factor placed at the block's offset in the reduced space. Inputs outside the support
    are sent to the first reduced basis state.
    """
    reduced_dim, ambient = decomposition.reduced_dim, decomposition.ambient_dim
    kraus = []
    for block, offset in zip(decomposition.blocks, decomposition.offsets):
        for k in range(block.dK):
            op = np.zeros((reduced_dim, ambient), dtype=np.complex128)
            op[offset : offset + block.dJ] = matcore.dagger(block.iso[:, k :: block.dK])
            kraus.append(op)
    for column in _support_complement(decomposition).T:
        op = np.zeros((reduced_dim, ambient), dtype=np.complex128)
        op[0] = column.conj()
        kraus.append(op)
    return QuantumChannel(kraus)


def dress_channel(decomposition):
    """The channel mapping every reduced state \\(\\sigma_i\\) back to \\(\\rho_i\\).

    Attaches \\(\\rho_K^{(l)}\\) to the J factor of each block and embeds the result with
    the block isometry.
    """
    reduced_dim, ambient = decomposition.reduced_dim, decomposition.ambient_dim
    kraus = []
    for block, offset in zip(decomposition.blocks, decomposition.offsets):
        for k, weight in enumerate(block.k_spectrum):
            op = np.zeros((ambient, reduced_dim), dtype=np.complex128)
            op[:, offset : offset + block.dJ] = math.sqrt(max(weight, 0.0)) * block.iso[
                :, k :: block.dK
            ]
            kraus.append(op)
    return QuantumChannel(kraus)


def preserving_channel(decomposition, env_dim=None, seed=None):
    """A random channel that leaves every signal of a redundancy-free ensemble unchanged.

    Its dilation acts as the identity on every J block while rotating an environment of
    dimension `env_dim` (default \\(d^2\\)) by an independent Haar unitary per block. The
    Kraus operators are \\(K_e = \\sum_l \\langle e|U^{(l)}|0\\rangle P_l +
    \\langle e|U^{(c)}|0\\rangle P_c\\), with \\(P_l\\) the block projectors and \\(P_c\\) the
    projector onto the complement of the support.

    # Raises
    ValidationError: if any block carries a redundant factor.
    """
    if not decomposition.is_redundancy_free:
        raise ValidationError(
            f"Preserving channels need blocks with dK = 1, got {decomposition.block_dims}."
        )
    dim = decomposition.ambient_dim
    env_dim = dim * dim if env_dim is None else int(env_dim)
    rng = np.random.default_rng(seed)

    projectors = [b.iso @ matcore.dagger(b.iso) for b in decomposition.blocks]
    complement = _support_complement(decomposition)
    if complement.shape[1]:
        projectors.append(complement @ matcore.dagger(complement))
    columns = np.array([matcore.haar_unitary(env_dim, rng)[:, 0] for _ in projectors])
    kraus = np.einsum("le,lij->eij", columns, np.array(projectors))
    return QuantumChannel(list(kraus))


def random_channel(dim, seed=None, env_dim=None):
    """A channel with a Haar-random dilation on `dim * env_dim` (default `env_dim = dim**2`).

    # Arguments
    dim: System dimension.
    seed: Seed or `numpy.random.Generator`.
    env_dim: Environment dimension.
    """
    env_dim = dim * dim if env_dim is None else int(env_dim)
    check_cap(dim * env_dim)
    rng = np.random.default_rng(seed)
    return QuantumChannel.from_dilation(matcore.haar_unitary(dim * env_dim, rng), dim, env_dim)


def f_measure(channel, ensemble):
    """\\(f = 1 - \\sum_i p_i F(\\rho_i, C(\\rho_i))\\); zero iff `channel` preserves the signals."""
    if channel.in_dim != ensemble.dim or channel.out_dim != ensemble.dim:
        raise ValidationError(
            f"Channel {channel.in_dim} -> {channel.out_dim} does not act on dimension "
            f"{ensemble.dim}."
        )
    kept = math.fsum(
        p * ensembles.fidelity(rho, channel.apply(rho))
        for p, rho in zip(ensemble.probs, ensemble.states)
    )
    return float(np.clip(1 - kept, 0.0, 1.0))


def error_prob(channel, eigen_ensemble):
    """Average error probability of sending the orthogonal states through `channel`."""
    if channel.in_dim != eigen_ensemble.dim or channel.out_dim != eigen_ensemble.dim:
        raise ValidationError(
            f"Channel {channel.in_dim} -> {channel.out_dim} does not act on dimension "
            f"{eigen_ensemble.dim}."
        )
    correct = math.fsum(
        p * (v.conj() @ channel.apply(np.outer(v, v.conj())) @ v).real
        for p, v in zip(eigen_ensemble.probs, eigen_ensemble.vectors.T)
    )
    return float(np.clip(1 - correct, 0.0, 1.0))


def induced_site_channel(channel, ensemble, k, n_sites):
    """The single-site map \\(X \\mapsto \\mathrm{Tr}_{\\neq k}\\,C(\\rho \\otimes \\cdots
    \\otimes X \\otimes \\cdots \\otimes \\rho)\\), with the average state \\(\\rho\\) on every
    site but `k`.

    # Arguments
    channel: Channel on the `n_sites`-fold tensor power of the ensemble's space.
    ensemble: Supplies the dimension and the average state.
    k: Site index in `[0, n_sites)`.
    n_sites: Number of sites.

    # Returns
    A `QuantumChannel` on the single-site space.

    # Raises
    ResourceCapError: if the composite dimension exceeds 4096.
    """
    d = ensemble.dim
    composite = check_cap(d ** n_sites)
    if channel.in_dim != composite or channel.out_dim != composite:
        raise ValidationError(
            f"Channel {channel.in_dim} -> {channel.out_dim} does not act on {n_sites} "
            f"sites of dimension {d}."
        )
    if not 0 <= k < n_sites:
        raise ValidationError(f"Site {k} out of range for {n_sites} sites.")
    rho = ensembles.total_state(ensemble)

    def site_map(x):
        factors = [x if site == k else rho for site in range(n_sites)]
        return matcore.partial_trace(channel.apply(matcore.kron_all(factors)), [d] * n_sites, [k])

    return QuantumChannel.from_map(site_map, d, d)


@dataclass
class EtaSpotCheck:
    """Result of `sample_eta`: the smallest `f` seen among channels with `g >= delta`."""

    delta: float
    samples: int
    accepted: int
    min_f: Optional[float]
    seed: Optional[int]

    @property
    def positive(self):
        return self.min_f is not None and self.min_f > 0


def sample_eta(ensemble, delta, samples, seed, env_dim=None):
    """Spot-checks that channels which garble the orthogonal ensemble also disturb the signals.

    Draws `samples` random channels; those whose Fano bound \\(g\\) on the orthogonal
    ensemble of `ensemble` is at least `delta` are kept, and the smallest \\(f\\) among them
    is reported. A finite sample can only witness positivity, never prove it.
    """
    if samples < 1:
        raise ValidationError(f"Need at least one sample, got {samples}.")
    orthogonal = kidecomp.orthogonal_ensemble(kidecomp.ki_decompose(ensemble), ensemble)
    alphabet = max(2, orthogonal.probs.size)
    rng = np.random.default_rng(seed)
    accepted, min_f = 0, None
    for _ in range(samples):
        channel = random_channel(ensemble.dim, rng, env_dim)
        g = ensembles.fano_g(error_prob(channel, orthogonal), alphabet)
        if g >= delta:
            accepted += 1
            f = f_measure(channel, ensemble)
            min_f = f if min_f is None else min(min_f, f)
    log.debug(f"Accepted {accepted}/{samples} channels with g >= {delta}.")
    return EtaSpotCheck(delta, samples, accepted, min_f, seed)
