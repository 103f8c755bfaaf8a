"""Blind compression schemes for blocks of `N` signals and their evaluation.

A `CompressionScheme` is an encoder channel from \\(H^{\\otimes N}\\) into a code space and a
decoder channel back. Its quality on an ensemble is the average fidelity

\\[
\\bar F = \\sum_\\lambda p_\\lambda F(\\rho_\\lambda, \\Lambda_B\\Lambda_A(\\rho_\\lambda)),
\\]

summed over all signal sequences \\(\\lambda = (i_1, \\ldots, i_N)\\).

`typical_codec` builds the scheme that is optimal at the rate \\(I_R\\): strip the
redundant factors from every site, project onto the dominant eigenvectors of
\\(\\sigma^{\\otimes N}\\), and dress the sites again after decoding.
`converse_diagnostic` evaluates the per-site error bounds that no scheme can beat.
"""

import functools
import logging
import math
from dataclasses import asdict, dataclass
from typing import List, Optional

import numpy as np

from mixcomp import channels, ensembles, matcore, utils
from mixcomp import decomposition as kidecomp
from mixcomp.utils import SEQUENCE_CAP, ValidationError, check_cap

__all__ = [
    "CompressionScheme",
    "FidelityEstimate",
    "SweepRow",
    "typical_codec",
    "identity_scheme",
    "constant_scheme",
    "get_scheme",
    "transfer_scheme",
    "avg_fidelity",
    "rate_sweep",
    "fidelity_chain",
    "converse_diagnostic",
]

log = logging.getLogger(__name__)

MODES = ("exact", "monte-carlo")
DIAGNOSTIC_CAP = 256
FANO_ATOL = 1e-8
CHAIN_ATOL = 1e-8
CONVERSE_ATOL = 1e-6

_SCHEMES = {}


@dataclass
class CompressionScheme:
    """An encoder/decoder pair acting on `n_sites` copies of a system.

    # Arguments
    n_sites: Block length `N`.
    code_dim: Dimension of the code space.
    encoder: `QuantumChannel` from the block space into the code space.
    decoder: `QuantumChannel` from the code space back to the block space.
    name: Label used in reports.
    """

    n_sites: int
    code_dim: int
    encoder: channels.QuantumChannel
    decoder: channels.QuantumChannel
    name: str = "custom"

    def __post_init__(self):
        if self.encoder.out_dim != self.code_dim or self.decoder.in_dim != self.code_dim:
            raise ValidationError(
                f"Encoder output {self.encoder.out_dim} and decoder input "
                f"{self.decoder.in_dim} must match the code dimension {self.code_dim}."
            )
        if self.encoder.in_dim != self.decoder.out_dim:
            raise ValidationError(
                f"Encoder input {self.encoder.in_dim} differs from decoder output "
                f"{self.decoder.out_dim}."
            )

    @property
    def rate(self):
        """Qubits per signal, \\(\\log_2(\\mathrm{code\\_dim}) / N\\)."""
        return math.log2(self.code_dim) / self.n_sites

    @property
    def dim(self):
        return self.encoder.in_dim

    @functools.cached_property
    def codec(self):
        return channels.compose(self.encoder, self.decoder)

    def apply(self, x):
        return self.codec.apply(x)


@dataclass
class FidelityEstimate:
    value: float
    stderr: float
    mode: str
    samples: int
    seed: Optional[int] = None


@dataclass
class SweepRow:
    """One line of a rate sweep; `samples` counts the evaluated sequences."""

    N: int
    rate: float
    code_dim: int
    avg_fidelity: float
    mode: str
    samples: int
    seed: Optional[int] = None

    def as_csv_row(self):
        return [
            self.N,
            utils.round_significant(self.rate),
            self.code_dim,
            utils.round_significant(self.avg_fidelity),
            self.mode,
            self.samples,
            "" if self.seed is None else self.seed,
        ]


def _check_block(ensemble, n_sites):
    if n_sites < 1:
        raise ValidationError(f"Block length must be positive, got {n_sites}.")
    return check_cap(ensemble.dim ** n_sites)


def _code_dim(n_sites, rate, limit):
    if rate < 0 or not math.isfinite(rate):
        raise ValidationError(f"Rate must be a non-negative number, got {rate}.")
    exponent = n_sites * rate
    if exponent >= math.log2(limit):
        return limit
    return max(1, math.floor(2.0 ** exponent * (1 + 1e-12)))


def _typical_isometry(rho, n_sites, code_dim):
    """Columns are the `code_dim` dominant eigenvectors of `rho` to the `n_sites`."""
    w, v = matcore.herm_eig(rho)
    site_dim = w.size
    weights = functools.reduce(np.kron, [np.clip(w, 0, None)] * n_sites)
    # Stable sort on rounded weights: ties resolve to the lexicographically first index.
    order = np.argsort(-np.round(weights, 12), kind="stable")[:code_dim]
    columns = [
        functools.reduce(
            np.kron, [v[:, s] for s in np.unravel_index(index, (site_dim,) * n_sites)]
        )
        for index in order
    ]
    return np.array(columns).T


def typical_codec(ensemble, n_sites, rate, strip=True, decomposition=None, tol=None):
    """Projection onto the typical subspace, optionally behind the redundancy stripper.

    With `strip=True` every site is first mapped to its reduced state, the block is
    projected onto the span of the dominant `code_dim` eigenvectors of
    \\(\\sigma^{\\otimes N}\\), and decoding embeds the code space back and dresses every
    site again. With `strip=False` the projection is built on \\(\\rho^{\\otimes N}\\) directly.
    Block weight outside the typical subspace is sent to the dominant eigenvector.

    # Arguments
    ensemble: The `Ensemble` to compress.
    n_sites: Block length `N`.
    rate: Target rate in qubits per signal; `code_dim` is
        \\(\\min(\\lfloor 2^{N\\cdot\\mathrm{rate}}\\rfloor, \\dim\\sigma^N)\\).
    strip: Whether to remove the redundant factors first.
    decomposition: Precomputed `KIDecomposition` of `ensemble`.
    tol: Structural tolerance of the decomposition.

    # Returns
    A `CompressionScheme`.

    # Raises
    ValidationError: if `rate` is negative.
    ResourceCapError: if a block space exceeds 4096 dimensions.
    """
    _check_block(ensemble, n_sites)
    if strip:
        if decomposition is None:
            decomposition = kidecomp.ki_decompose(ensemble, tol)
        rho = ensembles.total_state(kidecomp.strip(decomposition, ensemble))
    else:
        rho = ensembles.total_state(ensemble)
    limit = check_cap(rho.shape[0] ** n_sites)
    code_dim = _code_dim(n_sites, rate, limit)
    isometry = _typical_isometry(rho, n_sites, code_dim)

    encoder = channels.TypicalProjectionChannel(isometry)
    decoder = channels.QuantumChannel([isometry])
    if strip:
        encoder = channels.compose(
            channels.tensor_power(channels.strip_channel(decomposition), n_sites), encoder
        )
        decoder = channels.compose(
            decoder, channels.tensor_power(channels.dress_channel(decomposition), n_sites)
        )
    name = "typical" if strip else "typical-unstripped"
    return CompressionScheme(n_sites, code_dim, encoder, decoder, name)


def identity_scheme(dim, n_sites):
    """The lossless scheme that does nothing; its code space is the whole block space."""
    block = check_cap(dim ** n_sites)
    identity = channels.QuantumChannel.identity(block)
    return CompressionScheme(n_sites, block, identity, identity, "identity")


def constant_scheme(ensemble, n_sites, state=None):
    """The zero-rate scheme: discard the block and prepare a fixed state.

    # Arguments
    ensemble: Supplies the dimension and the default state.
    n_sites: Block length `N`.
    state: Density matrix on the block space. Defaults to the N-fold product of the
        dominant eigenvector of the average state.
    """
    block = _check_block(ensemble, n_sites)
    if state is None:
        _, v = matcore.herm_eig(ensembles.total_state(ensemble))
        psi = functools.reduce(np.kron, [v[:, 0]] * n_sites)
        preparation = [psi[:, None]]
    else:
        state = ensembles.Ensemble.from_signals([1.0], [state]).states[0]
        if state.shape != (block, block):
            raise ValidationError(f"State of shape {state.shape} does not fit {block}.")
        w, v = matcore.herm_eig(state)
        preparation = [
            math.sqrt(wm) * v[:, m][:, None] for m, wm in enumerate(w) if wm > 0
        ]
    # Projecting onto any single state and redirecting the rest traces the block out.
    encoder = channels.TypicalProjectionChannel(np.eye(block, 1, dtype=np.complex128))
    decoder = channels.QuantumChannel(preparation)
    return CompressionScheme(n_sites, 1, encoder, decoder, "constant")


@utils.register_alias(_SCHEMES, "identity")
def _build_identity(ensemble, n_sites, rate=None, **kwargs):
    return identity_scheme(ensemble.dim, n_sites)


@utils.register_alias(_SCHEMES, "constant")
def _build_constant(ensemble, n_sites, rate=None, **kwargs):
    return constant_scheme(ensemble, n_sites)


@utils.register_alias(_SCHEMES, "typical")
def _build_typical(ensemble, n_sites, rate=None, **kwargs):
    if rate is None:
        raise ValidationError("The typical scheme needs a rate.")
    return typical_codec(ensemble, n_sites, rate, **kwargs)


def get_scheme(identifier):
    """Returns a scheme builder `fn(ensemble, n_sites, rate=None, **kwargs)`.

    # Arguments
    identifier: One of `"identity"`, `"constant"`, `"typical"`, or a callable.
    """
    return utils.get_registered(_SCHEMES, identifier, "scheme")


def transfer_scheme(scheme, decomposition, direction):
    """Moves a scheme between an ensemble and its reduced form.

    `"to_reduced"` turns a scheme for the original signals into one for the reduced
    signals by dressing before encoding and stripping after decoding; `"to_original"`
    does the reverse. Neither direction lowers the average fidelity.
    """
    strip = channels.tensor_power(channels.strip_channel(decomposition), scheme.n_sites)
    dress = channels.tensor_power(channels.dress_channel(decomposition), scheme.n_sites)
    if direction == "to_reduced":
        before, after = dress, strip
    elif direction == "to_original":
        before, after = strip, dress
    else:
        raise ValidationError(
            f"Direction must be 'to_reduced' or 'to_original', got {direction!r}."
        )
    return CompressionScheme(
        scheme.n_sites,
        scheme.code_dim,
        channels.compose(before, scheme.encoder),
        channels.compose(scheme.decoder, after),
        f"{scheme.name}:{direction}",
    )


def _sequence_state(ensemble, sequence):
    return matcore.kron_all([ensemble.states[i] for i in sequence])


def _sequence_fidelity(scheme, ensemble, sequence):
    rho = _sequence_state(ensemble, sequence)
    return ensembles.fidelity(rho, scheme.apply(rho))


def _check_scheme(scheme, ensemble):
    if scheme.dim != ensemble.dim ** scheme.n_sites:
        raise ValidationError(
            f"Scheme on dimension {scheme.dim} does not act on {scheme.n_sites} copies "
            f"of dimension {ensemble.dim}."
        )


def avg_fidelity(scheme, ensemble, mode="exact", samples=None, seed=None):
    """Average fidelity of `scheme` on blocks of signals from `ensemble`.

    # Arguments
    scheme: A `CompressionScheme`.
    ensemble: The source `Ensemble`.
    mode: `"exact"` sums over every sequence in lexicographic order;
        `"monte-carlo"` averages `samples` sequences drawn with `seed`.
    samples: Number of Monte Carlo samples (at least 2).
    seed: Seed of the Monte Carlo draws; mandatory in that mode.

    # Returns
    A `FidelityEstimate`; its `stderr` is zero in exact mode.

    # Raises
    ResourceCapError: if exact mode would enumerate more than 65536 sequences.
    """
    _check_scheme(scheme, ensemble)
    n, n_sites = ensemble.n_signals, scheme.n_sites
    if mode == "exact":
        count = check_cap(n ** n_sites, SEQUENCE_CAP, "number of signal sequences")
        value = math.fsum(
            utils.sequence_probability(ensemble.probs, sequence)
            * _sequence_fidelity(scheme, ensemble, sequence)
            for sequence in utils.sequences(n, n_sites)
        )
        return FidelityEstimate(float(np.clip(value, 0.0, 1.0)), 0.0, mode, count)
    if mode == "monte-carlo":
        if samples is None or samples < 2 or seed is None:
            raise ValidationError(
                "Monte Carlo estimates need an explicit seed and at least 2 samples."
            )
        rng = np.random.default_rng(seed)
        draws = rng.choice(n, size=(samples, n_sites), p=ensemble.probs)
        values = np.array([_sequence_fidelity(scheme, ensemble, s) for s in draws])
        stderr = float(np.std(values, ddof=1) / math.sqrt(samples))
        return FidelityEstimate(float(np.mean(values)), stderr, mode, samples, seed)
    raise ValidationError(f"Unknown mode {mode!r}, expected one of {MODES}.")


def rate_sweep(ensemble, n_list, rates, mode="exact", samples=None, seed=None, strip=True):
    """Average fidelity of `typical_codec` for every `(N, rate)` combination.

    # Returns
    A list of `SweepRow`, ordered by `N` and then by rate as given.
    """
    decomposition = kidecomp.ki_decompose(ensemble) if strip else None
    rows = []
    for n_sites in n_list:
        for rate in rates:
            scheme = typical_codec(ensemble, n_sites, rate, strip, decomposition)
            estimate = avg_fidelity(scheme, ensemble, mode, samples, seed)
            rows.append(
                SweepRow(
                    n_sites,
                    float(rate),
                    scheme.code_dim,
                    estimate.value,
                    estimate.mode,
                    estimate.samples,
                    estimate.seed,
                )
            )
            log.debug(f"N={n_sites} rate={rate}: F={estimate.value:.6f}")
    return rows


@dataclass
class FidelityChain:
    """The chain \\(\\bar F \\le\\) `marginal` \\(\\le\\) `site_average` \\(= 1 - f(\\Lambda_k)\\) at one site.

    # Arguments
    site: Site index `k`.
    average: Average fidelity of the whole block.
    marginal: \\(\\sum_\\lambda p_\\lambda F(\\rho_{i_k}, \\mathrm{Tr}_{\\neq k}\\Lambda(\\rho_\\lambda))\\).
    site_average: \\(\\sum_i p_i F(\\rho_i, \\Lambda_k(\\rho_i))\\).
    f: The disturbance \\(f(\\Lambda_k)\\) of the induced site channel.
    """

    site: int
    average: float
    marginal: float
    site_average: float
    f: float

    @property
    def holds(self):
        return bool(
            self.average <= self.marginal + CHAIN_ATOL
            and self.marginal <= self.site_average + CHAIN_ATOL
            and abs(self.site_average - (1 - self.f)) <= CHAIN_ATOL
        )


def _fidelity_chains(scheme, ensemble, sites, site_channels=None):
    _check_scheme(scheme, ensemble)
    n, n_sites, d = ensemble.n_signals, scheme.n_sites, ensemble.dim
    check_cap(n ** n_sites, SEQUENCE_CAP, "number of signal sequences")
    average = []
    marginals = {k: [] for k in sites}
    for sequence in utils.sequences(n, n_sites):
        p = utils.sequence_probability(ensemble.probs, sequence)
        rho = _sequence_state(ensemble, sequence)
        output = scheme.apply(rho)
        average.append(p * ensembles.fidelity(rho, output))
        for k in sites:
            reduced = matcore.partial_trace(output, [d] * n_sites, [k])
            marginals[k].append(p * ensembles.fidelity(ensemble.states[sequence[k]], reduced))

    chains = []
    for k in sites:
        site_channel = (
            site_channels[k]
            if site_channels is not None
            else channels.induced_site_channel(scheme.codec, ensemble, k, n_sites)
        )
        f = channels.f_measure(site_channel, ensemble)
        chains.append(
            FidelityChain(k, math.fsum(average), math.fsum(marginals[k]), 1 - f, f)
        )
    return chains


def fidelity_chain(scheme, ensemble, k):
    """Evaluates the fidelity chain of `scheme` at site `k` by exact enumeration."""
    if not 0 <= k < scheme.n_sites:
        raise ValidationError(f"Site {k} out of range for {scheme.n_sites} sites.")
    return _fidelity_chains(scheme, ensemble, [k])[0]


@dataclass
class SiteDiagnostic:
    site: int
    p_error: float
    g: float
    conditional_entropy: float
    fano_ok: bool
    chain: FidelityChain

    @property
    def passed(self):
        return self.fano_ok and self.chain.holds


@dataclass
class ConverseReport:
    """Per-site error bounds of a scheme and the rate inequality they imply.

    The inequality \\(\\sum_k g(\\Lambda_k)/N \\ge S(\\sigma) - \\log_2(\\mathrm{code\\_dim})/N\\)
    holds for every scheme; a failure indicates a numerical problem.
    """

    scheme: str
    n_sites: int
    code_dim: int
    rate: float
    entropy: float
    source_entropy: float
    sites: List[SiteDiagnostic]
    mean_g: float
    bound: float

    @property
    def inequality_ok(self):
        return bool(self.mean_g >= self.bound - CONVERSE_ATOL)

    @property
    def entropy_ok(self):
        return bool(abs(self.source_entropy - self.entropy) <= FANO_ATOL)

    @property
    def passed(self):
        return self.inequality_ok and self.entropy_ok and all(s.passed for s in self.sites)

    def get_config(self):
        config = asdict(self)
        for site, diagnostic in zip(config["sites"], self.sites):
            site["chain"]["holds"] = diagnostic.chain.holds
            site["passed"] = diagnostic.passed
        config.update(
            inequality_ok=self.inequality_ok,
            entropy_ok=self.entropy_ok,
            passed=self.passed,
        )
        return config


def _transition_matrix(site_channel, orthogonal):
    """\\(T[x, y] = \\langle y|\\Lambda_k(|x\\rangle\\langle x|)|y\\rangle\\) with a leftover column."""
    vectors = orthogonal.vectors
    rows = []
    for x in vectors.T:
        image = site_channel.apply(np.outer(x, x.conj()))
        row = np.clip(np.einsum("iy,ij,jy->y", vectors.conj(), image, vectors).real, 0, None)
        rows.append(np.append(row, max(0.0, 1 - np.sum(row))))
    return np.array(rows)


def _conditional_entropy(probs, transition):
    joint = probs[:, None] * transition
    joint = joint / np.sum(joint)
    h_joint = ensembles.shannon_entropy(joint.reshape(-1))
    h_output = ensembles.shannon_entropy(np.sum(joint, axis=0))
    return max(0.0, h_joint - h_output)


def converse_diagnostic(scheme, ensemble, tol=None):
    """Evaluates the Fano-type converse bounds of `scheme` on `ensemble`.

    The ensemble should be redundancy free (strip it first). Its average state is
    diagonalized blockwise into orthogonal signals \\(|l,s\\rangle\\). For every site
    `k` the induced channel \\(\\Lambda_k\\) yields a classical transition matrix on these
    signals, an error probability \\(p_e\\) and the Fano bound
    \\(g = H(p_e) + p_e\\log_2(n - 1)\\), which must dominate \\(H(X_k|Y_k)\\). Summed over the
    sites they must exceed \\(N S(\\sigma) - \\log_2\\mathrm{code\\_dim}\\).

    # Raises
    ResourceCapError: if the block space exceeds 256 dimensions.
    """
    _check_scheme(scheme, ensemble)
    n_sites = scheme.n_sites
    check_cap(ensemble.dim ** n_sites, DIAGNOSTIC_CAP, "diagnostic dimension")
    decomposition = kidecomp.ki_decompose(ensemble, tol)
    if not decomposition.is_redundancy_free:
        log.warning(
            f"Running the converse diagnostic on an ensemble with redundant blocks "
            f"{decomposition.block_dims}."
        )
    orthogonal = kidecomp.orthogonal_ensemble(decomposition, ensemble)
    alphabet = max(2, orthogonal.probs.size)
    entropy = ensembles.von_neumann_entropy(ensembles.total_state(ensemble))
    source_entropy = ensembles.shannon_entropy(orthogonal.probs)

    site_channels = {
        k: channels.induced_site_channel(scheme.codec, ensemble, k, n_sites)
        for k in range(n_sites)
    }
    chains = _fidelity_chains(scheme, ensemble, list(range(n_sites)), site_channels)
    sites = []
    for k, chain in zip(range(n_sites), chains):
        p_error = channels.error_prob(site_channels[k], orthogonal)
        g = ensembles.fano_g(p_error, alphabet)
        conditional = _conditional_entropy(
            orthogonal.probs, _transition_matrix(site_channels[k], orthogonal)
        )
        sites.append(
            SiteDiagnostic(k, p_error, g, conditional, bool(g >= conditional - FANO_ATOL), chain)
        )
    mean_g = math.fsum(s.g for s in sites) / n_sites
    report = ConverseReport(
        scheme=scheme.name,
        n_sites=n_sites,
        code_dim=scheme.code_dim,
        rate=scheme.rate,
        entropy=entropy,
        source_entropy=source_entropy,
        sites=sites,
        mean_g=mean_g,
        bound=entropy - math.log2(scheme.code_dim) / n_sites,
    )
    log.debug(f"Converse diagnostic of {scheme.name}: passed={report.passed}")
    return report
