# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

import dataclasses

import numpy as np

from ._format import MatrixFile, scalar_kind
from ._kernels import gemm, householder_qr


SPECTRUM_KINDS = ('uniform',)


@dataclasses.dataclass(frozen=True)
class SpectrumSpec:
    """A prescribed spectrum of `n` eigenvalues within ``[lo, hi]``.

    ``lo == hi`` is accepted and yields a constant spectrum.
    """
    n: int
    lo: float
    hi: float
    kind: str = 'uniform'

    def __post_init__(self):
        if self.n < 1:
            raise ValueError('Matrix dimension must be positive, got %d.'
                             % self.n)
        if self.lo > self.hi:
            raise ValueError('Spectrum interval [%r, %r] is empty.'
                             % (self.lo, self.hi))
        if not np.isfinite(self.lo) or not np.isfinite(self.hi):
            raise ValueError('Spectrum endpoints must be finite.')
        if self.kind not in SPECTRUM_KINDS:
            raise ValueError('Unknown spectrum kind %r, expected one of %s.'
                             % (self.kind, ', '.join(SPECTRUM_KINDS)))

    def eigenvalues(self):
        """lo + k(hi - lo)/(n - 1) for k = 0..n-1, endpoints exact."""
        if self.n == 1:
            return np.array([float(self.lo)])
        k = np.arange(self.n)
        values = self.lo + k * ((self.hi - self.lo) / (self.n - 1))
        values[-1] = self.hi
        return values


def _gaussian(rng, shape, dtype):
    if np.issubdtype(dtype, np.complexfloating):
        return (rng.standard_normal(shape)
                + 1j * rng.standard_normal(shape)).astype(dtype)
    return rng.standard_normal(shape).astype(dtype)


def generate(spec, seed, dtype=np.float64, eigenvalues=None):
    """Dense Hermitian matrix ``Q^H D Q`` with the prescribed spectrum.

    Parameters
    ----------
    spec : SpectrumSpec
        Size and eigenvalue placement.
    seed : int
        Seed of the Gaussian matrix whose orthonormal QR factor is `Q`.
        The generator is numpy's PCG64 (``np.random.default_rng``).
    dtype : np.dtype
        Real or complex scalar type of the result.
    eigenvalues : array_like, optional
        Explicit diagonal of `D`, overriding the placement of `spec`.

    Returns
    -------
    np.ndarray
        Fortran-ordered `n` x `n` matrix, exactly Hermitian.
    """
    dtype = np.dtype(dtype)
    if eigenvalues is None:
        eigenvalues = spec.eigenvalues()
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.shape != (spec.n,):
        raise ValueError('Expected %d eigenvalues, got %s.'
                         % (spec.n, eigenvalues.shape))

    rng = np.random.default_rng(seed)
    q = householder_qr(_gaussian(rng, (spec.n, spec.n), dtype))
    # Q^H (D Q): scale the rows of Q instead of forming D
    a = gemm(1.0, q, eigenvalues[:, None] * q, op_a='C')
    a = (a + a.conj().T) / 2
    return np.asfortranarray(a.astype(dtype, copy=False))


def random_initial_vectors(n_r, n_e, col_rank, seed, stream=0,
                           dtype=np.float64):
    """Gaussian `n_r` x `n_e` block for member `col_rank` of a column
    communicator.

    The stream is keyed by ``(seed, stream, col_rank)`` only, so members
    with equal `col_rank` in different column communicators draw equal
    blocks.
    """
    rng = np.random.default_rng([seed, stream, col_rank])
    return np.asfortranarray(_gaussian(rng, (n_r, n_e), np.dtype(dtype)))


def write_matrix(matrix, path):
    matrix = np.asarray(matrix)
    n_rows, n_cols = matrix.shape
    MatrixFile(path, n_rows, n_cols, scalar_kind(matrix.dtype)).write(matrix)


def read_matrix(path, n, scalar='r64', n_cols=None):
    return MatrixFile(path, n, n_cols, scalar).read()
