"""An ensemble \\(\\{p_i, \\rho_i\\}\\) models a quantum source that emits the state
\\(\\rho_i\\) with probability \\(p_i\\). This module holds the ensemble data model and
the scalar information functionals evaluated on it. All logarithms are base 2, so
every entropy is measured in bits (qubits).

```python
import numpy as np
from mixcomp import ensembles

plus = np.full((2, 2), 0.5)
source = ensembles.Ensemble.from_signals([0.5, 0.5], [np.diag([1, 0]), plus])
ensembles.von_neumann_entropy(ensembles.total_state(source))  # 0.600876...
```
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from mixcomp import matcore
from mixcomp.utils import ParseError, ValidationError

__all__ = [
    "Ensemble",
    "EigenEnsemble",
    "total_state",
    "von_neumann_entropy",
    "shannon_entropy",
    "binary_entropy",
    "levitin_holevo",
    "fidelity",
    "fano_g",
]

log = logging.getLogger(__name__)

MIN_PROBABILITY = 1e-12
PROBABILITY_ATOL = 1e-9
TRACE_ATOL = 1e-9
PSD_ATOL = 1e-8
# Rounding in ensemble files is repaired up to this deviation, larger ones are errors.
REPAIR_ATOL = 1e-6
NOISE_FLOOR = 1e-13


def _repair_state(rho, index):
    rho = matcore.as_matrix(rho, name=f"state {index}")
    if rho.shape[0] != rho.shape[1]:
        raise ValidationError(f"State {index} is not square: shape {rho.shape}.")
    residual = matcore.hermitian_residual(rho)
    if residual > REPAIR_ATOL:
        raise ValidationError(
            f"State {index} is not Hermitian: max|rho - rho^dagger| = {residual:.3g}."
        )
    rho = (rho + matcore.dagger(rho)) / 2

    w, v = matcore.herm_eig(rho)
    if w[-1] < -REPAIR_ATOL:
        raise ValidationError(
            f"State {index} is not positive semidefinite: minimum eigenvalue {w[-1]:.3g}."
        )
    trace = float(np.sum(w))
    if abs(trace - 1) > REPAIR_ATOL:
        raise ValidationError(f"State {index} does not have unit trace: {trace:.12g}.")
    if w[-1] < -PSD_ATOL or abs(trace - 1) > TRACE_ATOL:
        log.warning(
            f"Projecting state {index} onto the density matrices "
            f"(minimum eigenvalue {w[-1]:.3g}, trace {trace:.12g})."
        )
        w = np.clip(w, 0, None)
        rho = (v * (w / np.sum(w))) @ matcore.dagger(v)
    return rho


@dataclass
class Ensemble:
    """A probability-weighted list of density matrices on a common space.

    Use `Ensemble.from_signals` to build a validated ensemble.

    # Arguments
    dim: Dimension of each system.
    probs: Signal probabilities, each in `(0, 1]`, summing to 1.
    states: Array of shape `(n_signals, dim, dim)` of density matrices.
    """

    dim: int
    probs: np.ndarray
    states: np.ndarray

    @classmethod
    def from_signals(cls, probs, states):
        """Validates and repairs signals into an `Ensemble`.

        Signals with probability below `1e-12` are dropped, the remaining probabilities
        renormalized. States within `1e-6` of the density matrices are projected onto
        them (negative eigenvalues clamped, trace renormalized).

        # Raises
        ValidationError: naming the violated invariant.
        """
        probs = np.asarray(probs, dtype=float).reshape(-1)
        states = list(states)
        if len(states) != probs.size:
            raise ValidationError(
                f"Got {probs.size} probabilities but {len(states)} states."
            )
        if probs.size == 0:
            raise ValidationError("An ensemble needs at least one signal.")
        if np.any(~np.isfinite(probs)) or np.any(probs < 0):
            raise ValidationError(f"Probabilities must be non-negative: {probs}.")
        total = float(np.sum(probs))
        if abs(total - 1) > REPAIR_ATOL:
            raise ValidationError(f"Probabilities sum to {total:.12g}, not 1.")

        keep = probs >= MIN_PROBABILITY
        if not np.all(keep):
            log.warning(f"Dropping {np.sum(~keep)} signal(s) with negligible probability.")
        probs = probs[keep] / np.sum(probs[keep])
        states = [s for s, k in zip(states, keep) if k]

        repaired = [_repair_state(s, i) for i, s in enumerate(states)]
        dims = {s.shape[0] for s in repaired}
        if len(dims) != 1:
            raise ValidationError(f"States act on different dimensions: {sorted(dims)}.")
        return cls(dims.pop(), probs, np.array(repaired))

    @property
    def n_signals(self):
        return self.probs.size

    def get_config(self):
        return {
            "dim": int(self.dim),
            "states": [
                {
                    "p": float(p),
                    "rho": [[[z.real, z.imag] for z in row] for row in rho.tolist()],
                }
                for p, rho in zip(self.probs, self.states)
            ],
        }

    @classmethod
    def from_config(cls, config):
        """Builds an ensemble from its file representation.

        # Raises
        ParseError: if the structure does not follow the ensemble file schema.
        ValidationError: if the parsed signals violate an ensemble invariant.
        """
        try:
            dim = config["dim"]
            signals = config["states"]
            probs = [float(s["p"]) for s in signals]
            states = [
                np.array(
                    [[complex(float(re), float(im)) for re, im in row] for row in s["rho"]],
                    dtype=np.complex128,
                )
                for s in signals
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"Malformed ensemble description: {e!r}.") from e
        if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
            raise ParseError(f"Field `dim` must be a positive integer, got {dim!r}.")
        for i, s in enumerate(states):
            if s.shape != (dim, dim):
                raise ValidationError(
                    f"State {i} has shape {s.shape}, expected ({dim}, {dim})."
                )
        return cls.from_signals(probs, states)


@dataclass
class EigenEnsemble:
    """An ensemble of orthogonal pure states \\(\\{p_{l,s}, |l,s\\rangle\\}\\).

    # Arguments
    labels: `(l, s)` index pairs: block `l`, eigenvector `s` within the block.
    probs: Probabilities \\(p_{l,s}\\).
    vectors: Matrix whose orthonormal columns are the states \\(|l,s\\rangle\\).
    """

    labels: List[Tuple[int, int]]
    probs: np.ndarray
    vectors: np.ndarray

    @classmethod
    def from_blocks(cls, rho, isometries):
        """Diagonalizes `rho` inside each block spanned by the given isometries."""
        labels, probs, vectors = [], [], []
        for l, iso in enumerate(isometries):
            w, v = matcore.herm_eig(matcore.dagger(iso) @ rho @ iso)
            for s in range(w.size):
                labels.append((l, s))
                probs.append(max(float(w[s]), 0.0))
                vectors.append(iso @ v[:, s])
        probs = np.array(probs)
        return cls(labels, probs / np.sum(probs), np.array(vectors).T)

    @property
    def dim(self):
        return self.vectors.shape[0]

    @property
    def projectors(self):
        return [np.outer(v, v.conj()) for v in self.vectors.T]

    def as_ensemble(self):
        return Ensemble.from_signals(self.probs, self.projectors)


def total_state(ensemble):
    """The average state \\(\\rho = \\sum_i p_i \\rho_i\\)."""
    return np.einsum("i,ijk->jk", ensemble.probs, ensemble.states)


def _entropy_of_spectrum(w):
    w = w[w > 0]
    return float(max(0.0, -np.sum(w * np.log2(w))))


def von_neumann_entropy(rho):
    r"""Von Neumann entropy \\(S(\rho) = -\mathrm{Tr}\,\rho\log_2\rho\\) in bits.

    # Raises
    ValidationError: if `rho` is not a density matrix (within `1e-8`).
    """
    w, _ = matcore.herm_eig(rho)
    if w.size == 0 or w[-1] < -PSD_ATOL or abs(np.sum(w) - 1) > 1e-8:
        raise ValidationError(
            f"Not a density matrix: trace {np.sum(w):.12g}, "
            f"minimum eigenvalue {w[-1] if w.size else float('nan'):.3g}."
        )
    return _entropy_of_spectrum(np.clip(w, 0, None))


def shannon_entropy(p):
    """Shannon entropy of a probability vector in bits."""
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or abs(np.sum(p) - 1) > PROBABILITY_ATOL:
        raise ValidationError(f"Not a probability vector: {p}.")
    return _entropy_of_spectrum(p)


def binary_entropy(p):
    if p <= 0 or p >= 1:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def levitin_holevo(ensemble):
    r"""The Levitin-Holevo function \\(S(\rho) - \sum_i p_i S(\rho_i)\\) in bits."""
    s_rho = von_neumann_entropy(total_state(ensemble))
    mixed = math.fsum(
        p * von_neumann_entropy(rho) for p, rho in zip(ensemble.probs, ensemble.states)
    )
    return min(s_rho, max(0.0, s_rho - mixed))


def _is_pure(w):
    return w.size == 1 or w[1] <= NOISE_FLOOR


def _root(w, v):
    w = np.where(w > NOISE_FLOOR, w, 0.0)
    return (v * np.sqrt(w)) @ matcore.dagger(v)


def fidelity(rho, sigma):
    r"""Fidelity \\(F(\rho,\sigma) = [\mathrm{Tr}\sqrt{\rho^{1/2}\sigma\rho^{1/2}}]^2\\).

    Evaluated as the squared nuclear norm of \\(\sqrt\rho\sqrt\sigma\\). When either
    argument is pure the overlap \\(\langle\psi|\sigma|\psi\rangle\\) is used instead.
    Eigenvalues below `1e-13` are treated as exact zeros.

    # Returns
    A float in `[0, 1]`.

    # Raises
    ValidationError: if the dimensions differ.
    """
    rho = matcore.as_matrix(rho)
    sigma = matcore.as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ValidationError(f"Dimension mismatch: {rho.shape} vs {sigma.shape}.")
    w_rho, v_rho = matcore.herm_eig(rho)
    if _is_pure(w_rho):
        psi = v_rho[:, 0]
        value = w_rho[0] * (psi.conj() @ sigma @ psi).real
        return float(np.clip(value, 0.0, 1.0))
    w_sigma, v_sigma = matcore.herm_eig(sigma)
    if _is_pure(w_sigma):
        phi = v_sigma[:, 0]
        value = w_sigma[0] * (phi.conj() @ rho @ phi).real
        return float(np.clip(value, 0.0, 1.0))
    product = _root(w_rho, v_rho) @ _root(w_sigma, v_sigma)
    value = float(np.sum(np.linalg.svd(product, compute_uv=False))) ** 2
    return float(np.clip(value, 0.0, 1.0))


def fano_g(p_error, d):
    """The Fano bound \\(g = H(p_e) + p_e\\log_2(d - 1)\\) in bits.

    # Arguments
    p_error: Error probability in `[0, 1]`.
    d: Alphabet size, at least 2.
    """
    if not -1e-12 <= p_error <= 1 + 1e-12:
        raise ValidationError(f"Error probability must lie in [0, 1], got {p_error}.")
    if d < 2:
        raise ValidationError(f"Alphabet size must be at least 2, got {d}.")
    p_error = min(max(p_error, 0.0), 1.0)
    return binary_entropy(p_error) + p_error * math.log2(d - 1)
