# ----------------------------------------------------------------------------
# Copyright (c) 2023, pychase development team.
#
# Distributed under the terms of the Modified BSD License.
#
# The full license is in the file LICENSE, distributed with this software.
# ----------------------------------------------------------------------------

"""Rank-local dense kernels.

Every routine here works on a single rank's data and never communicates.
The post-conditions are the interface; the heavy lifting is delegated to
the BLAS/LAPACK bindings shipped with scipy.
"""

import numpy as np
import scipy.linalg
from scipy.linalg import get_lapack_funcs


class EigensolverError(ArithmeticError):
    pass


_OPS = ('N', 'C')


def unit_roundoff(dtype):
    """Unit round-off of the precision backing `dtype` (2**-53 for double).
    """
    return np.finfo(np.dtype(dtype)).eps / 2


def _apply_op(matrix, op):
    if op not in _OPS:
        raise ValueError('Unknown operation %r, expected one of %s.'
                         % (op, ', '.join(_OPS)))
    if op == 'C':
        return matrix.conj().T
    return matrix


def gemm(alpha, a, b, beta=0.0, c=None, op_a='N', op_b='N'):
    """General matrix-matrix product ``c <- alpha*op(a)*op(b) + beta*c``.

    Parameters
    ----------
    alpha : scalar
        Scale of the product.
    a, b : np.ndarray
        Operands.
    beta : scalar
        Scale of the existing contents of `c`. When zero, `c` is not read,
        so it may hold uninitialised values.
    c : np.ndarray, optional
        Output, updated in place. A new array is returned when omitted.
    op_a, op_b : {'N', 'C'}
        Apply nothing or the conjugate transpose to the operand.

    Returns
    -------
    np.ndarray
        The updated `c`.
    """
    a = _apply_op(np.asarray(a), op_a)
    b = _apply_op(np.asarray(b), op_b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError('Cannot multiply operands of shape %s and %s.'
                         % (a.shape, b.shape))
    product = a @ b
    if alpha != 1:
        product = alpha * product
    if c is None:
        return product
    if c.shape != product.shape:
        raise ValueError('Output has shape %s, the product has shape %s.'
                         % (c.shape, product.shape))
    if beta == 0:
        c[...] = product
    else:
        c[...] = product + beta * c
    return c


def herk_gram(x):
    """Gram matrix ``x^H x`` built from its upper triangle."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] < 1:
        raise ValueError('Gram matrix needs a non-empty 2D block, got %s.'
                         % (x.shape,))
    gram = x.conj().T @ x
    upper = np.triu(gram)
    gram = upper + np.triu(gram, 1).conj().T
    if np.iscomplexobj(gram):
        idx = np.diag_indices_from(gram)
        gram[idx] = gram[idx].real
    return gram


def potrf(a):
    """Upper Cholesky factor of a Hermitian matrix.

    Returns
    -------
    np.ndarray, int
        ``R`` with ``R^H R = a`` and LAPACK's ``info``. A positive ``info``
        is the (1-based) pivot at which the factorization failed; ``R`` is
        then unspecified.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError('Cholesky factorization needs a square matrix, got '
                         '%s.' % (a.shape,))
    potrf_, = get_lapack_funcs(('potrf',), (a,))
    r, info = potrf_(a, lower=False, clean=True)
    if info < 0:
        raise ValueError('Illegal value in argument %d of potrf.' % -info)
    return r, int(info)


def trsm_right(x, r):
    """Solve ``Y r = x`` for ``Y`` with `r` upper triangular."""
    x = np.asarray(x)
    r = np.asarray(r)
    diag = np.diagonal(r)
    if np.any(diag == 0):
        raise ValueError('Triangular factor is singular: zero at diagonal '
                         'position %d.' % int(np.flatnonzero(diag == 0)[0]))
    if x.shape[1] != r.shape[0]:
        raise ValueError('Cannot solve %s against a %s triangular factor.'
                         % (x.shape, r.shape))
    # Y r = x  <=>  r^T Y^T = x^T
    return scipy.linalg.solve_triangular(
        r, x.T, trans='T', lower=False, check_finite=False).T


def householder_qr(x):
    """Orthonormal factor of a Householder QR, diag(R) made non-negative.
    """
    x = np.asarray(x)
    m, n = x.shape
    if m < n:
        raise ValueError('Householder QR needs at least as many rows as '
                         'columns, got %d x %d.' % (m, n))
    q, r = scipy.linalg.qr(x, mode='economic', check_finite=False)
    diag = np.diagonal(r)
    phase = np.ones(n, dtype=q.dtype)
    nonzero = diag != 0
    phase[nonzero] = diag[nonzero] / np.abs(diag[nonzero])
    return q * phase


def heevd(a):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    a = np.asarray(a)
    try:
        values, vectors = scipy.linalg.eigh(a, driver='evd',
                                            check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverError('Dense Hermitian eigensolver failed on a %s '
                               'matrix: %s' % (a.shape, e)) from e
    return values, vectors
