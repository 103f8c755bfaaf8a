"""Dense complex-matrix numerics that everything else in `mixcomp` is built on.

Matrices are plain `numpy` arrays of dtype `complex128`. Operator spaces (generated
algebras, commutants) are returned as an `OperatorBasis`, orthonormal under the
Hilbert-Schmidt inner product \\(\\langle A, B\\rangle = \\mathrm{Tr}(A^\\dagger B)\\).
Matrices are vectorized in row-major order throughout, so that
\\(\\mathrm{vec}(AXB) = (A \\otimes B^T)\\,\\mathrm{vec}(X)\\).
"""

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from mixcomp import tolerance
from mixcomp.utils import NotPositiveSemidefiniteError, ValidationError

__all__ = [
    "OperatorBasis",
    "herm_eig",
    "psd_sqrt",
    "kron",
    "kron_all",
    "partial_trace",
    "algebra_closure",
    "commutant_basis",
    "haar_unitary",
    "haar_isometry",
]

HERMITIAN_ATOL = 1e-10
PSD_ATOL = 1e-8


def as_matrix(m, name="matrix"):
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise ValidationError(f"Expected a 2-D {name}, got shape {m.shape}.")
    return m


def frobenius(m):
    return float(np.linalg.norm(m))


def dagger(m):
    return m.conj().T


def hermitian_residual(m):
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def check_hermitian(m, atol=HERMITIAN_ATOL, name="matrix"):
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise ValidationError(f"Expected a square {name}, got shape {m.shape}.")
    residual = hermitian_residual(m)
    if residual > atol * max(1.0, frobenius(m)):
        raise ValidationError(
            f"The {name} is not Hermitian: max|M - M^dagger| = {residual:.3g}."
        )
    return (m + dagger(m)) / 2


@dataclass
class OperatorBasis:
    """A subspace of `dim x dim` matrices with a Hilbert-Schmidt orthonormal basis.

    # Arguments
    dim: Ambient matrix dimension.
    vectors: Array of shape `(size, dim**2)` whose rows are the row-major vectorized
        basis elements.
    """

    dim: int
    vectors: np.ndarray

    @property
    def size(self):
        return self.vectors.shape[0]

    @property
    def elements(self):
        return self.vectors.reshape(self.size, self.dim, self.dim)

    def coefficients(self, m):
        return self.vectors.conj() @ np.asarray(m, dtype=np.complex128).reshape(-1)

    def project(self, m):
        return (self.coefficients(m) @ self.vectors).reshape(self.dim, self.dim)

    def residual(self, m):
        """Frobenius norm of the component of `m` orthogonal to the subspace."""
        return frobenius(m - self.project(m))

    def contains(self, other, atol=1e-8):
        """Whether every element of `other` lies in this subspace."""
        return all(self.residual(e) <= atol for e in other.elements)

    def gram_residual(self):
        gram = self.vectors.conj() @ self.vectors.T
        return float(np.max(np.abs(gram - np.eye(self.size)))) if self.size else 0.0


def herm_eig(h):
    """Eigendecomposition of a Hermitian matrix.

    # Arguments
    h: Hermitian matrix (within `1e-10` relative to its Frobenius norm).

    # Returns
    A tuple `(eigenvalues, eigenvectors)`: real eigenvalues sorted in descending order
    (ties keep the order returned by the solver) and a unitary whose columns are the
    matching eigenvectors.

    # Raises
    ValidationError: if `h` is not Hermitian.
    """
    h = check_hermitian(h)
    w, v = scipy.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def psd_sqrt(p):
    """Square root of a positive semidefinite matrix.

    Eigenvalues within `-1e-6 * max(1, ||P||_F)` of zero are clamped to zero.

    # Raises
    NotPositiveSemidefiniteError: for clearly negative eigenvalues.
    """
    w, v = herm_eig(p)
    scale = max(1.0, frobenius(p))
    if w.size and w[-1] < -100 * PSD_ATOL * scale:
        raise NotPositiveSemidefiniteError(
            f"Matrix is not positive semidefinite: minimum eigenvalue {w[-1]:.3g}."
        )
    root = np.sqrt(np.clip(w, 0, None))
    return (v * root) @ dagger(v)


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(factors):
    """Kronecker product of a sequence of matrices (left factor most significant)."""
    return functools.reduce(np.kron, factors, np.ones((1, 1), dtype=np.complex128))


def partial_trace(m, dims, keep):
    """Traces out every tensor factor not listed in `keep`.

    # Arguments
    m: Square matrix on the space of dimension `prod(dims)`.
    dims: Factor dimensions, most significant first.
    keep: Indices of the factors to keep; the result keeps them in ascending order.

    # Returns
    The reduced matrix of dimension `prod(dims[k] for k in keep)`.

    # Raises
    ValidationError: if the dimensions do not match.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims)) if dims else 1
    if m.shape != (total, total):
        raise ValidationError(
            f"Matrix of shape {m.shape} does not match factor dimensions {dims}."
        )
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValidationError(f"Factor indices {keep} out of range for {len(dims)}.")

    tensor = m.reshape(dims + dims)
    n = len(dims)
    for axis in reversed(range(len(dims))):
        if axis not in keep:
            tensor = np.trace(tensor, axis1=axis, axis2=axis + n)
            n -= 1
    kept = int(np.prod([dims[k] for k in keep])) if keep else 1
    return tensor.reshape(kept, kept)


def _orthonormal_add(basis, candidate, threshold):
    """Gram-Schmidt step; returns the normalized new direction or `None`."""
    norm = np.linalg.norm(candidate)
    if norm == 0:
        return None
    residual = candidate
    # Two passes keep the basis orthonormal to working precision.
    for _ in range(2):
        residual = residual - (basis.conj() @ residual) @ basis
    if np.linalg.norm(residual) <= threshold * norm:
        return None
    return residual / np.linalg.norm(residual)


def algebra_closure(generators, dim, tol=None):
    """Orthonormal basis of the unital *-algebra generated by `generators`.

    The algebra is spanned by all words in the generators and their adjoints, so the
    span is grown from the identity by left multiplication until no new direction
    appears.

    # Arguments
    generators: Iterable of `dim x dim` matrices.
    dim: Matrix dimension.
    tol: Relative residual below which a product is considered already spanned.

    # Returns
    An `OperatorBasis` of size at most `dim**2`.
    """
    tol = tolerance.get_tolerance(tol)
    letters = []
    for g in generators:
        g = as_matrix(g)
        if g.shape != (dim, dim):
            raise ValidationError(f"Generator of shape {g.shape} is not {dim}x{dim}.")
        letters.append(g)
        letters.append(dagger(g))

    vectors = np.zeros((dim * dim, dim * dim), dtype=np.complex128)
    vectors[0] = np.eye(dim, dtype=np.complex128).reshape(-1) / np.sqrt(dim)
    size = 1
    queue = [vectors[0]]
    while queue and size < dim * dim:
        element = queue.pop(0).reshape(dim, dim)
        for letter in letters:
            new = _orthonormal_add(vectors[:size], (letter @ element).reshape(-1), tol)
            if new is not None:
                vectors[size] = new
                size += 1
                queue.append(new)
                if size == dim * dim:
                    break
    return OperatorBasis(dim, vectors[:size].copy())


def _commutator_matrix(generators, dim):
    eye = np.eye(dim, dtype=np.complex128)
    blocks = [np.kron(eye, g.T) - np.kron(g, eye) for g in generators]
    if not blocks:
        return np.zeros((1, dim * dim), dtype=np.complex128)
    return np.vstack(blocks)


def nullspace(a, tol=None):
    """Orthonormal nullspace columns with singular values below `tol * max(1, max(s))`.

    The floor of `tol` keeps rounding noise of a numerically zero matrix out of the rank.
    """
    tol = tolerance.get_tolerance(tol)
    if not np.any(a):
        return np.eye(a.shape[1], dtype=np.complex128)
    # A tall matrix already yields a square `vh` from the economy decomposition.
    _, s, vh = scipy.linalg.svd(a, full_matrices=a.shape[0] < a.shape[1])
    s_max = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * max(1.0, s_max)))
    return vh[rank:].conj().T.astype(np.complex128)


def commutant_basis(generators, dim, tol=None):
    """Orthonormal basis of the commutant \\(\\{X : XG = GX\\ \\forall G\\}\\).

    Computed as the nullspace of the stacked maps \\(X \\mapsto XG - GX\\). For Hermitian
    generators the subspace is closed under the adjoint and always contains the
    identity.

    # Arguments
    generators: Iterable of Hermitian `dim x dim` matrices.
    dim: Matrix dimension.
    tol: Relative singular-value threshold.

    # Returns
    An `OperatorBasis`.
    """
    generators = [check_hermitian(g, name="generator") for g in generators]
    for g in generators:
        if g.shape != (dim, dim):
            raise ValidationError(f"Generator of shape {g.shape} is not {dim}x{dim}.")
    null = nullspace(_commutator_matrix(generators, dim), tol)
    return OperatorBasis(dim, null.T.copy())


def haar_unitary(dim, rng):
    """Haar-distributed unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def haar_isometry(rows, cols, rng):
    return haar_unitary(rows, rng)[:, :cols]


def random_density_matrix(dim, rng, rank=None):
    """Random density matrix from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def phase_fix(m, atol=1e-12):
    """Multiplies `m` by a phase making its first non-negligible entry positive real."""
    flat = m.reshape(-1)
    idx = np.flatnonzero(np.abs(flat) > atol * max(1.0, np.max(np.abs(flat), initial=0)))
    if idx.size == 0:
        return m
    entry = flat[idx[0]]
    return m * (np.abs(entry) / entry)
