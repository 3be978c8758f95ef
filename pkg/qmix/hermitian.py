"""
Dense complex Hermitian matrix algebra shared by every other module.

Matrices are plain complex numpy arrays; the constructors below validate and
freeze them (read-only) so they can be shared between workers.
"""
import logging
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import scipy.linalg

from . import util
from .errors import ArgumentError, NumericalFailure, SizeError

logger = logging.getLogger(__name__)

HERMITIAN_ATOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


def _freeze(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


def as_hermitian(m, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate a square matrix as Hermitian and return (m + m†)/2 as a read-only array."""
    m = np.array(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ArgumentError(f'expected a non-empty square matrix, got shape {m.shape}')
    asym = np.max(np.abs(m - m.conj().T))
    if asym > atol:
        raise ArgumentError(f'matrix is not Hermitian (max asymmetry {asym:.3g} > {atol:g})')
    return _freeze((m + m.conj().T) / 2)


def as_density(m, trace_tol: float = TRACE_TOL, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    m = as_hermitian(m)
    tr = np.trace(m).real
    if abs(tr - 1) > trace_tol:
        raise ArgumentError(f'density matrix has trace {tr:.12g}, expected 1')
    low = min_eigenvalue(m)
    if low < -psd_tol:
        raise ArgumentError(f'density matrix has negative eigenvalue {low:.3g}')
    return m


def is_density(m, trace_tol: float = TRACE_TOL, psd_tol: float = PSD_TOL) -> bool:
    try:
        as_density(m, trace_tol=trace_tol, psd_tol=psd_tol)
    except ArgumentError:
        return False
    return True


class Eigendecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


def eig_hermitian(m: np.ndarray) -> Eigendecomposition:
    try:
        w, V = scipy.linalg.eigh(m, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f'Hermitian eigendecomposition failed for dim {m.shape[0]}: {e}') from e
    return Eigendecomposition(w, V)


def eigvals_hermitian(m: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.eigh(m, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f'Hermitian eigendecomposition failed for dim {m.shape[0]}: {e}') from e


def min_eigenvalue(m: np.ndarray) -> float:
    return float(eigvals_hermitian(m)[0])


def trace_norm(m: np.ndarray) -> float:
    return float(np.sum(np.abs(eigvals_hermitian(m))))


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, V = eig_hermitian(m)
    return (V * np.sqrt(np.clip(w, 0, None))) @ V.conj().T


def support_projector(m: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    w, V = eig_hermitian(m)
    keep = w > rtol * max(w[-1], 0)
    return V[:, keep] @ V[:, keep].conj().T


def commutator_norm(a: np.ndarray, b: np.ndarray) -> float:
    """Operator (spectral) norm of [a, b]."""
    return float(np.linalg.norm(a @ b - b @ a, ord=2))


def _check_cap(dim: int, dim_cap: Optional[int]):
    cap = util.get_dim_cap() if dim_cap is None else dim_cap
    if dim > cap:
        raise SizeError(f'composite dimension {dim} exceeds the cap {cap} (set QMIX_DIM_CAP to raise it)')


def tensor_product(a: np.ndarray, b: np.ndarray, dim_cap: Optional[int] = None) -> np.ndarray:
    _check_cap(a.shape[0] * b.shape[0], dim_cap)
    return np.kron(a, b)


def kron_all(parts: Sequence[np.ndarray], dim_cap: Optional[int] = None) -> np.ndarray:
    _check_cap(int(np.prod([p.shape[0] for p in parts])), dim_cap)
    out = parts[0]
    for p in parts[1:]:
        out = np.kron(out, p)
    return out


def _distinct_orderings(labels: List[int]):
    if not labels:
        yield ()
        return
    for first in sorted(set(labels)):
        rest = list(labels)
        rest.remove(first)
        for tail in _distinct_orderings(rest):
            yield (first,) + tail


def symmetrize(parts: Sequence[np.ndarray], dim_cap: Optional[int] = None) -> np.ndarray:
    """Uniform average over the distinct orderings of the tensor product of parts."""
    if len(parts) == 0:
        raise ArgumentError('symmetrize needs at least one part')
    dims = {p.shape[0] for p in parts}
    if len(dims) != 1:
        raise ArgumentError(f'all parts must share one dimension, got {sorted(dims)}')
    _check_cap(dims.pop() ** len(parts), dim_cap)

    # identical parts share a label so each distinct ordering is built once
    labels, reps = [], []
    for p in parts:
        for i, q in enumerate(reps):
            if np.array_equal(p, q):
                labels.append(i)
                break
        else:
            labels.append(len(reps))
            reps.append(p)

    total, count = None, 0
    for order in _distinct_orderings(labels):
        term = kron_all([reps[i] for i in order], dim_cap=dim_cap)
        total = term if total is None else total + term
        count += 1
    return total / count


def gell_mann_basis(d: int) -> np.ndarray:
    """Hilbert-Schmidt orthonormal Hermitian basis of shape (d*d, d, d); element 0 is I/sqrt(d)."""
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k], asym[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis += [sym, asym]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    return np.stack(basis)


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_density(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    """Random density matrix from a Ginibre factor of the given rank."""
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
