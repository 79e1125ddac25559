"""Vertex coupling matrices and their small dense matrix semigroups.

The coupling matrix ``B`` acts on the nodal values of the free (non-Dirichlet)
vertices.  This module classifies ``B`` against the realness, positivity,
dissipativity and sup-norm criteria, builds the modulus matrix, and provides a
brute-force check of sup-norm contractivity of ``exp(tB)`` that does not look
at the criterion at all.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import connected_components

from .errors import DimensionMismatch, DimensionTooLarge, NonSquare, NotPositiveGenerator

__all__ = [
    "CouplingMatrix",
    "CouplingReport",
    "as_matrix",
    "classify_coupling",
    "modulus_matrix",
    "matrix_semigroup",
    "expm_minus_identity",
    "linf_excess",
    "verify_matrix_linf_contractivity",
    "dominates_matrix",
    "row_criterion_margin",
    "column_criterion_margin",
]

MAX_ORACLE_DIM = 64
_EPS = np.finfo(float).eps


def as_matrix(B):
    """Return ``B`` as a square 2-d ndarray (real if it has no imaginary part)."""
    if isinstance(B, CouplingMatrix):
        return B.entries
    B = np.atleast_2d(np.asarray(B))
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise NonSquare(f"coupling matrix must be square, got shape {B.shape}")
    if np.iscomplexobj(B):
        if np.all(B.imag == 0):
            B = B.real
        else:
            return B.astype(complex)
    return B.astype(float)


@dataclass(frozen=True)
class CouplingMatrix:
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", as_matrix(self.entries))

    @property
    def size(self):
        return self.entries.shape[0]

    @property
    def padded(self):
        """The ``(k+1) x (k+1)`` matrix with ``B`` in the upper-left block."""
        k = self.size
        out = np.zeros((k + 1, k + 1), dtype=self.entries.dtype)
        out[:k, :k] = self.entries
        return out

    @property
    def is_real(self):
        return not np.iscomplexobj(self.entries)


@dataclass(frozen=True)
class CouplingReport:
    is_real: bool
    is_dissipative: bool
    is_self_adjoint: bool
    positive_offdiagonal: bool
    row_criterion: bool
    column_criterion: bool
    block_partition: tuple | None = None
    hermitian_part_max_eigenvalue: float = 0.0
    row_margin: float = 0.0
    column_margin: float = 0.0

    def as_dict(self):
        out = dict(self.__dict__)
        if self.block_partition is not None:
            out["block_partition"] = [list(b) for b in self.block_partition]
        return out


def _offdiag(B):
    return B - np.diag(np.diag(B))


def row_criterion_margin(B):
    """``max_i (Re b_ii + sum_{h != i} |b_ih|)``; the row criterion holds iff <= 0."""
    B = as_matrix(B)
    return float(np.max(np.real(np.diag(B)) + np.abs(_offdiag(B)).sum(axis=1)))


def column_criterion_margin(B):
    B = as_matrix(B)
    return float(np.max(np.real(np.diag(B)) + np.abs(_offdiag(B)).sum(axis=0)))


def _block_partition(B):
    pattern = (np.abs(B) > 0) | (np.abs(B.T) > 0)
    ncomp, labels = connected_components(pattern.astype(int), directed=False)
    if ncomp < 2:
        return None
    return tuple(tuple(int(i) for i in np.flatnonzero(labels == c)) for c in range(ncomp))


def classify_coupling(B, tol=1e-12):
    """Classify ``B`` against the criteria, each flag decided with tolerance ``tol``.

    Dissipativity is read off the largest eigenvalue of the Hermitian part
    ``(B + B*)/2``.
    """
    B = as_matrix(B)
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = max(1.0, float(np.abs(B).max(initial=0.0)))
    herm = 0.5 * (B + B.conj().T)
    lam_max = float(np.linalg.eigvalsh(herm).max())
    imag_max = float(np.abs(np.imag(B)).max(initial=0.0))
    is_real = imag_max <= tol * scale
    off = np.real(_offdiag(B))
    positive_off = is_real and bool(np.all(off >= -tol * scale))
    row = row_criterion_margin(B)
    col = column_criterion_margin(B)
    return CouplingReport(
        is_real=bool(is_real),
        is_dissipative=lam_max <= tol * scale,
        is_self_adjoint=bool(np.abs(B - B.conj().T).max(initial=0.0) <= tol * scale),
        positive_offdiagonal=bool(positive_off),
        row_criterion=row <= tol * scale,
        column_criterion=col <= tol * scale,
        block_partition=_block_partition(B),
        hermitian_part_max_eigenvalue=lam_max,
        row_margin=row,
        column_margin=col,
    )


def modulus_matrix(B):
    """Real part on the diagonal, absolute values off the diagonal."""
    B = as_matrix(B)
    out = np.abs(B).astype(float)
    np.fill_diagonal(out, np.real(np.diag(B)))
    return out


def matrix_semigroup(B, t):
    """Dense ``exp(tB)`` (scaling and squaring with Pade approximants)."""
    B = as_matrix(B)
    if B.shape[0] > MAX_ORACLE_DIM:
        raise DimensionTooLarge(f"dimension {B.shape[0]} exceeds oracle limit {MAX_ORACLE_DIM}")
    if t < 0:
        raise ValueError("t must be non-negative")
    return sla.expm(t * B)


def expm_minus_identity(X):
    """``exp(X) - I`` with accuracy relative to ``||X||`` for small ``X``.

    Uses the block identity ``exp([[X, X], [0, 0]]) = [[e^X, e^X - I], [0, I]]``.
    """
    k = X.shape[0]
    aug = np.zeros((2 * k, 2 * k), dtype=X.dtype)
    aug[:k, :k] = X
    aug[:k, k:] = X
    return sla.expm(aug)[:k, k:]


def linf_excess(B, t):
    """``||exp(tB)||_inf - 1`` computed without cancellation.

    ``|1 + z| - 1`` is evaluated as ``(2 Re z + |z|^2) / (|1 + z| + 1)``.
    """
    D = expm_minus_identity(t * as_matrix(B))
    d = np.diag(D)
    diag_part = (2 * np.real(d) + np.abs(d) ** 2) / (np.abs(1 + d) + 1)
    rows = diag_part + np.abs(_offdiag(D)).sum(axis=1)
    i = int(np.argmax(rows))
    return float(rows[i]), i


def verify_matrix_linf_contractivity(B, t_grid, samples=16, seed=0, rtol=1e-10):
    """Brute-force check that ``||exp(tB) x||_inf <= ||x||_inf`` on ``t_grid``.

    The decision uses the exact induced norm (maximal absolute row sum) with a
    tolerance of ``rtol * t * ||B||_inf`` on the excess over one; ``samples``
    random vectors are a redundant cross-check.
    """
    B = as_matrix(B)
    if B.shape[0] > MAX_ORACLE_DIM:
        raise DimensionTooLarge(f"dimension {B.shape[0]} exceeds oracle limit {MAX_ORACLE_DIM}")
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if t_grid.size == 0:
        raise ValueError("t_grid must be nonempty")
    norm_b = float(np.abs(B).sum(axis=1).max(initial=0.0))
    rng = np.random.default_rng(seed)
    k = B.shape[0]
    xs = rng.uniform(-1, 1, (samples, k)) + 1j * rng.uniform(-1, 1, (samples, k))
    for t in t_grid:
        tol = rtol * t * norm_b + 64 * _EPS * t * norm_b
        excess, _ = linf_excess(B, t)
        if excess > tol:
            return False
        if samples:
            E = matrix_semigroup(B, t)
            ratio = np.abs(xs @ E.T).max(axis=1) / np.abs(xs).max(axis=1)
            if np.any(ratio > 1.0 + max(tol, 1e3 * _EPS)):
                return False
    return True


def dominates_matrix(B, B_tilde, t_grid, tol=1e-12):
    """True iff ``|exp(t B_tilde)| <= exp(t B)`` entrywise for every ``t`` in ``t_grid``.

    ``B`` must be real with non-negative off-diagonal entries so that
    ``exp(tB)`` is a positive matrix.
    """
    B = as_matrix(B)
    Bt = as_matrix(B_tilde)
    if B.shape != Bt.shape:
        raise DimensionMismatch(f"shapes {B.shape} and {Bt.shape} differ")
    if np.iscomplexobj(B) or np.any(_offdiag(B) < 0):
        raise NotPositiveGenerator("dominating matrix must be real with non-negative off-diagonal")
    for t in np.atleast_1d(t_grid):
        E = matrix_semigroup(B, t)
        Et = matrix_semigroup(Bt, t)
        if np.any(np.abs(Et) > E + tol * max(1.0, float(E.max()))):
            return False
    return True
